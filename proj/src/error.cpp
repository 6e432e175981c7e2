#include "resonance_lab/error.hpp"

namespace resonance_lab {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_input: return "invalid_input";
    case Errc::parse_error: return "parse_error";
    case Errc::singular_self_energy: return "singular_self_energy";
    case Errc::numerical_failure: return "numerical_failure";
    case Errc::branch_ambiguity: return "branch_ambiguity";
    case Errc::ep_proximal: return "ep_proximal";
    case Errc::closed_channel: return "closed_channel";
    case Errc::undefined_rigidity: return "undefined_rigidity";
    case Errc::internal_consistency: return "internal_consistency";
  }
  return "unknown";
}

Error::Error(std::string module, Errc code, const std::string& message)
    : std::runtime_error(module + "." + to_string(code) + ": " + message),
      module_(std::move(module)),
      code_(code),
      detail_(message) {}

std::string Error::qualified_code() const { return module_ + "." + to_string(code_); }

}  // namespace resonance_lab
