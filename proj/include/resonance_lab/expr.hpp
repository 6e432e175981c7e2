#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace resonance_lab {

using ParamMap = std::map<std::string, double, std::less<>>;

/// Numeric field of a model definition: a literal or an arithmetic
/// expression over control parameters, e.g. "0.5*$g" or "-($d + 0.1)".
///
/// Grammar: expr := term (('+'|'-') term)*
///          term := unary (('*'|'/') unary)*
///          unary := ('+'|'-') unary | number | '$' name | '(' expr ')'
class Expr {
 public:
  Expr();  // constant 0
  Expr(double value);  // NOLINT: implicit from literal is intended

  /// Throws Error{parse_error}; `column` in the message is 1-based within text.
  static Expr parse(std::string_view text);

  double evaluate(const ParamMap& params) const;
  bool is_constant() const;
  /// Parameter names referenced, sorted and unique.
  std::vector<std::string> parameters() const;
  const std::string& source() const { return source_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

}  // namespace resonance_lab
