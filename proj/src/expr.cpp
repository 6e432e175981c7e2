#include "resonance_lab/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "resonance_lab/error.hpp"

namespace resonance_lab {

struct Expr::Node {
  enum class Kind { constant, param, neg, add, sub, mul, div } kind;
  double value = 0.0;
  std::string name;
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_constant(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Node::Kind::constant;
  n->value = v;
  return n;
}

NodePtr make_binary(Expr::Node::Kind kind, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = kind;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    auto node = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error("model", Errc::parse_error,
                "expression \"" + std::string(text_) + "\" column " + std::to_string(pos_ + 1) +
                    ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expression() {
    auto node = term();
    for (;;) {
      if (accept('+')) node = make_binary(Expr::Node::Kind::add, node, term());
      else if (accept('-')) node = make_binary(Expr::Node::Kind::sub, node, term());
      else return node;
    }
  }

  NodePtr term() {
    auto node = unary();
    for (;;) {
      if (accept('*')) node = make_binary(Expr::Node::Kind::mul, node, unary());
      else if (accept('/')) node = make_binary(Expr::Node::Kind::div, node, unary());
      else return node;
    }
  }

  NodePtr unary() {
    if (accept('+')) return unary();
    if (accept('-')) {
      auto n = std::make_shared<Expr::Node>();
      n->kind = Expr::Node::Kind::neg;
      n->lhs = unary();
      return n;
    }
    if (accept('(')) {
      auto node = expression();
      if (!accept(')')) fail("expected ')'");
      return node;
    }
    if (accept('$')) {
      const auto start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      if (pos_ == start) fail("expected parameter name after '$'");
      auto n = std::make_shared<Expr::Node>();
      n->kind = Expr::Node::Kind::param;
      n->name = std::string(text_.substr(start, pos_ - start));
      return n;
    }
    skip_space();
    double v = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first) fail("expected number, parameter or '('");
    pos_ += static_cast<std::size_t>(ptr - first);
    return make_constant(v);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double eval(const Expr::Node& n, const ParamMap& params) {
  using K = Expr::Node::Kind;
  switch (n.kind) {
    case K::constant: return n.value;
    case K::param: {
      auto it = params.find(n.name);
      if (it == params.end())
        throw Error("model", Errc::invalid_input, "undeclared parameter $" + n.name);
      return it->second;
    }
    case K::neg: return -eval(*n.lhs, params);
    case K::add: return eval(*n.lhs, params) + eval(*n.rhs, params);
    case K::sub: return eval(*n.lhs, params) - eval(*n.rhs, params);
    case K::mul: return eval(*n.lhs, params) * eval(*n.rhs, params);
    case K::div: return eval(*n.lhs, params) / eval(*n.rhs, params);
  }
  return 0.0;
}

void collect(const Expr::Node& n, std::set<std::string>& out) {
  if (n.kind == Expr::Node::Kind::param) out.insert(n.name);
  if (n.lhs) collect(*n.lhs, out);
  if (n.rhs) collect(*n.rhs, out);
}

std::string format_constant(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double value) : root_(make_constant(value)), source_(format_constant(value)) {}

Expr Expr::parse(std::string_view text) {
  Expr e;
  e.root_ = Parser(text).parse();
  e.source_ = std::string(text);
  return e;
}

double Expr::evaluate(const ParamMap& params) const { return eval(*root_, params); }

bool Expr::is_constant() const { return parameters().empty(); }

std::vector<std::string> Expr::parameters() const {
  std::set<std::string> names;
  collect(*root_, names);
  return {names.begin(), names.end()};
}

}  // namespace resonance_lab
