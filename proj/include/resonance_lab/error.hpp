#pragma once

#include <stdexcept>
#include <string>

namespace resonance_lab {

enum class Errc {
  invalid_input,
  parse_error,
  singular_self_energy,
  numerical_failure,
  branch_ambiguity,
  ep_proximal,
  closed_channel,
  undefined_rigidity,
  internal_consistency,
};

const char* to_string(Errc code) noexcept;

/// Library error carrying the originating module ("model", "spectral", ...)
/// so callers can report module-qualified codes such as
/// "scattering.closed_channel".
class Error : public std::runtime_error {
 public:
  Error(std::string module, Errc code, const std::string& message);

  const std::string& module() const noexcept { return module_; }
  Errc code() const noexcept { return code_; }
  std::string qualified_code() const;
  /// Message without the module-qualified prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string module_;
  Errc code_;
  std::string detail_;
};

}  // namespace resonance_lab
