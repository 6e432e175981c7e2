#pragma once

#include <string>
#include <string_view>

#include "resonance_lab/model.hpp"

namespace resonance_lab {

/// Reads a model definition (YAML). Schema:
///
///   levels: 2
///   params: {g: 0.1, d: 0.25}
///   hb:
///     diagonal: ["-$d", "$d"]         # and/or
///     entries: [[0, 1, "0.5*$g"]]     # sparse (row, col, value), mirrored
///     dense: [[a, b], [b, c]]         # alternative to the two above
///   channels:
///     - kind: wideband                # wideband | flatband | chain_lead
///       dos_scale: 0.3183098861837907
///       coupling: ["$g", "$g"]
///     - kind: flatband
///       threshold: 1
///       band_top: 3
///       dos_scale: 0.1
///       coupling: [0.5, 0.5]
///     - kind: chain_lead
///       threshold: -2
///       hopping: 1
///       coupling: [1, 0]
///
/// Any numeric field may be an expression over declared params. Unknown keys
/// are rejected. Errors are Error{model, parse_error | invalid_input} with
/// "source:line:column:" in the message.
SystemModel parse_model(std::string_view text, const std::string& source_name = "<string>");
SystemModel load_model(const std::string& path);

/// Writes the model's current numeric values in the same schema.
std::string dump_model(const SystemModel& model);

}  // namespace resonance_lab
