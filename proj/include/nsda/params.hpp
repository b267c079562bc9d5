#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "nsda/dynamics.hpp"
#include "nsda/imageio.hpp"

namespace nsda {

/// Everything a batch or service run is configured with. Keys used by the
/// config file, the service and the CLI flags:
///   T steps nu gamma p eta xi taper blowup_threshold scale export
///   mg_tol mg_max_cycles
struct RunParameters {
    MarchConfig march = default_march();
    double scale = kDefaultIntensityScale;
    ExportMode export_mode = ExportMode::absolute;

    /// MarchConfig defaults with the stabilized gamma used for the bundled
    /// images.
    static MarchConfig default_march();
};

inline constexpr double kDefaultGamma = 5e-8;

using FieldErrors = std::map<std::string, std::string>;

/// Overlays the keys of `obj` onto `out`. Unknown keys and wrong types are
/// reported per field; recognized keys are still applied.
void apply_parameters(const nlohmann::json& obj, RunParameters& out, FieldErrors& errors);

/// Range checks per field (empty when valid).
FieldErrors validate_fields(const RunParameters& p);

nlohmann::json to_json(const RunParameters& p);

std::string to_string(ExportMode m);
/// "absolute" or "minmax"; throws ParameterError otherwise.
ExportMode parse_export_mode(const std::string& s);

/// "field: message; field: message"
std::string describe(const FieldErrors& errors);

}  // namespace nsda
