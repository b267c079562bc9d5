#include "nsda/params.hpp"

#include <cmath>

#include "nsda/workflow.hpp"

namespace nsda {

MarchConfig RunParameters::default_march() {
    MarchConfig c;
    c.gamma = kDefaultGamma;
    return c;
}

std::string to_string(ExportMode m) { return m == ExportMode::absolute ? "absolute" : "minmax"; }

ExportMode parse_export_mode(const std::string& s) {
    if (s == "absolute") return ExportMode::absolute;
    if (s == "minmax") return ExportMode::minmax;
    throw ParameterError("export mode must be 'absolute' or 'minmax', got '" + s + "'");
}

namespace {

bool read_number(const nlohmann::json& v, double& out) {
    if (!v.is_number()) return false;
    out = v.get<double>();
    return true;
}

bool read_int(const nlohmann::json& v, int& out) {
    if (v.is_number_integer()) {
        const auto x = v.get<long long>();
        if (x < -2147483647LL || x > 2147483647LL) return false;
        out = static_cast<int>(x);
        return true;
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d != std::floor(d) || std::abs(d) > 2147483647.0) return false;
        out = static_cast<int>(d);
        return true;
    }
    return false;
}

}  // namespace

void apply_parameters(const nlohmann::json& obj, RunParameters& out, FieldErrors& errors) {
    if (!obj.is_object()) {
        errors["parameters"] = "expected an object";
        return;
    }
    MarchConfig& m = out.march;
    for (const auto& [key, v] : obj.items()) {
        bool ok = true;
        if (key == "T") ok = read_number(v, m.t_final);
        else if (key == "steps") ok = read_int(v, m.steps);
        else if (key == "nu") ok = read_number(v, m.nu);
        else if (key == "gamma") ok = read_number(v, m.gamma);
        else if (key == "p") ok = read_number(v, m.p);
        else if (key == "eta") ok = read_number(v, m.raw_eta);
        else if (key == "xi") ok = read_number(v, m.raw_xi);
        else if (key == "taper") ok = read_int(v, m.taper_width);
        else if (key == "blowup_threshold") ok = read_number(v, m.blowup_threshold);
        else if (key == "scale") ok = read_number(v, out.scale);
        else if (key == "mg_tol") ok = read_number(v, m.poisson.tol);
        else if (key == "mg_max_cycles") ok = read_int(v, m.poisson.max_cycles);
        else if (key == "export") {
            if (!v.is_string()) {
                errors[key] = "expected \"absolute\" or \"minmax\"";
                continue;
            }
            try {
                out.export_mode = parse_export_mode(v.get<std::string>());
            } catch (const ParameterError& e) {
                errors[key] = e.what();
            }
            continue;
        } else {
            errors[key] = "unknown parameter";
            continue;
        }
        if (!ok) errors[key] = (key == "steps" || key == "taper" || key == "mg_max_cycles") ? "expected an integer" : "expected a number";
    }
}

FieldErrors validate_fields(const RunParameters& p) {
    FieldErrors e;
    const MarchConfig& m = p.march;
    auto finite = [](double x) { return std::isfinite(x); };
    if (!(m.t_final > 0.0) || !finite(m.t_final)) e["T"] = "must be > 0";
    if (m.steps < 1) e["steps"] = "must be >= 1";
    if (!(m.nu > 0.0) || !finite(m.nu)) e["nu"] = "must be > 0";
    if (!(m.gamma >= 0.0) || !finite(m.gamma)) e["gamma"] = "must be >= 0";
    if (!(m.p > 1.0) || !finite(m.p)) e["p"] = "must be > 1";
    if (!(m.raw_eta >= 0.0 && m.raw_eta <= 0.2)) e["eta"] = "must lie in [0, 0.2]";
    if (!(m.raw_xi >= 0.0 && m.raw_xi <= 1.0)) e["xi"] = "must lie in [0, 1]";
    if (m.taper_width < 0) e["taper"] = "must be >= 0";
    if (!(m.blowup_threshold > 0.0)) e["blowup_threshold"] = "must be > 0";
    if (!(p.scale > 0.0) || !finite(p.scale)) e["scale"] = "must be > 0";
    if (!(m.poisson.tol > 0.0)) e["mg_tol"] = "must be > 0";
    if (m.poisson.max_cycles < 1) e["mg_max_cycles"] = "must be >= 1";
    return e;
}

nlohmann::json to_json(const RunParameters& p) {
    nlohmann::json j = to_json(p.march);
    j["scale"] = p.scale;
    j["export"] = to_string(p.export_mode);
    return j;
}

std::string describe(const FieldErrors& errors) {
    std::string s;
    for (const auto& [k, v] : errors) {
        if (!s.empty()) s += "; ";
        s += k + ": " + v;
    }
    return s;
}

}  // namespace nsda
