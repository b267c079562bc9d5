#include "nsda/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "nsda/errors.hpp"

namespace nsda {

double u_max(const ScalarField& u, const ScalarField& v) {
    auto a = u.values();
    auto b = v.values();
    double m2 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m2 = std::max(m2, a[k] * a[k] + b[k] * b[k]);
    return std::sqrt(m2);
}

double reynolds(double u_max, double nu, double area) {
    if (!(nu > 0.0)) throw ParameterError("nu must be > 0");
    if (!(area > 0.0)) throw ParameterError("area must be > 0");
    return std::sqrt(area) * u_max / nu;
}

void KnopsPayneInput::validate() const {
    auto positive = [](double x, const char* name) {
        if (!(x > 0.0) || !std::isfinite(x)) throw ParameterError(std::string(name) + " must be > 0");
    };
    positive(E_sq, "E^2");
    positive(Q_sq, "Q^2");
    positive(nu, "nu");
    positive(T, "T");
    positive(M, "M");
    positive(delta, "delta");
}

KnopsPayneOutput knops_payne(const KnopsPayneInput& in) {
    in.validate();
    KnopsPayneOutput o;
    o.a = 2.0 * (in.E_sq + 1.0) / in.nu;
    o.b = in.Q_sq * (1.0 + o.a / in.nu);
    o.c = o.b / o.a;
    o.T = in.T;
    o.M = in.M;
    o.delta = in.delta;
    return o;
}

double KnopsPayneOutput::mu(double t) const {
    const double aT = a * T;
    if (aT <= 1.0) return std::expm1(a * t) / std::expm1(aT);
    // e^{a(t-T)} (1 - e^{-at}) / (1 - e^{-aT})
    return std::exp(a * (t - T)) * std::expm1(-a * t) / std::expm1(-aT);
}

double KnopsPayneOutput::log_gamma(double t) const { return c * (t - mu(t) * T); }

double KnopsPayneOutput::gamma(double t) const { return std::exp(log_gamma(t)); }

double KnopsPayneOutput::bound(double t) const { return uncertainty_bound(*this, M, delta, t); }

double log_uncertainty_bound(const KnopsPayneOutput& out, double M, double delta, double t) {
    if (!(M > 0.0) || !(delta > 0.0)) throw ParameterError("M and delta must be > 0");
    const double m = out.mu(t);
    return out.log_gamma(t) + (1.0 - m) * std::log(M) + m * std::log(delta);
}

double uncertainty_bound(const KnopsPayneOutput& out, double M, double delta, double t) {
    return std::exp(log_uncertainty_bound(out, M, delta, t));
}

ErrorBudget k_constants(double lambda_J, double p, double T, double dt_abs, double B) {
    if (!(lambda_J > 0.0)) throw ParameterError("lambda_J must be > 0");
    if (!(p > 1.0)) throw ParameterError("p must be > 1");
    if (!(T >= 0.0)) throw ParameterError("T must be >= 0");
    if (!(dt_abs >= 0.0)) throw ParameterError("|dt| must be >= 0");
    if (!(B >= 1.0)) throw ParameterError("B must be >= 1");
    ErrorBudget e;
    e.lambda_J = lambda_J;
    e.p = p;
    e.T = T;
    e.dt_abs = dt_abs;
    e.B = B;
    const double k1m1 = std::expm1(4.0 * lambda_J * T);
    e.K1 = std::exp(4.0 * lambda_J * T);
    e.K2 = std::sqrt(3.0) * B * std::pow(lambda_J, -p) * k1m1;
    e.K3 = dt_abs * dt_abs * k1m1 / (24.0 * lambda_J);
    return e;
}

ErrorBudget ErrorBudget::with_norms(double nP, double nttt) const {
    if (!(nP >= 0.0) || !(nttt >= 0.0)) throw ParameterError("norms must be >= 0");
    ErrorBudget e = *this;
    e.norm_P_omega = nP;
    e.norm_omega_ttt = nttt;
    e.K4 = K2 * nP + K3 * nttt;
    return e;
}

double compute_B(double dt_abs, double norm_PL_omega, double norm_P_omega) {
    if (!(norm_P_omega > 0.0)) return 1.0;
    return std::sqrt(1.0 + (8.0 / 3.0) * dt_abs * dt_abs * norm_PL_omega / norm_P_omega);
}

double total_error_bound(double delta, const ErrorBudget& b) {
    if (!b.K4) throw ParameterError("total error bound needs K4 (supply |||P omega||| and |||omega_ttt|||)");
    if (!(delta >= 0.0)) throw ParameterError("delta must be >= 0");
    return delta * (1.0 + b.K1 * b.K1) + *b.K4 * (1.0 + b.K1);
}

double theorem_error_bound(int n, const ErrorBudget& b, double initial_error, Direction /*direction*/) {
    if (!b.norm_P_omega || !b.norm_omega_ttt)
        throw ParameterError("theorem bound needs |||P omega||| and |||omega_ttt|||");
    if (n < 0) throw ParameterError("step index must be >= 0");
    const double t = n * b.dt_abs;
    const double growth = std::exp(4.0 * b.lambda_J * t);
    const double gm1 = std::expm1(4.0 * b.lambda_J * t);
    const double penalty = std::sqrt(3.0) * b.B * std::pow(b.lambda_J, -b.p) * gm1 * *b.norm_P_omega;
    const double truncation = b.dt_abs * b.dt_abs * gm1 / (24.0 * b.lambda_J) * *b.norm_omega_ttt;
    return growth * initial_error + penalty + truncation;
}

nlohmann::json AssimilationReport::to_json(bool include_runtime) const {
    auto triple = [](const NormTriple& t) {
        return nlohmann::json{{"desired_T", t.desired_T}, {"computed_0", t.computed_0}, {"evolved_T", t.evolved_T}};
    };
    nlohmann::json j;
    j["norms"] = {{"psi", triple(psi)}, {"u", triple(u)}, {"v", triple(v)}, {"omega", triple(omega)}};
    j["u_max"] = u_max;
    j["reynolds"] = reynolds;
    j["nu"] = nu;
    j["parameters"] = parameters;
    if (include_runtime) j["runtime_seconds"] = runtime_seconds;
    return j;
}

std::string AssimilationReport::to_text() const {
    std::ostringstream os;
    os << "RE = " << std::setprecision(6) << reynolds << "  U_max = " << u_max << "  nu = " << nu << '\n';
    os << std::left << std::setw(12) << "variable" << std::right << std::setw(16) << "desired_at_T" << std::setw(16)
       << "computed_at_0" << std::setw(16) << "evolved_at_T" << '\n';
    auto row = [&](const char* name, const NormTriple& t) {
        os << std::left << std::setw(12) << name << std::right << std::setprecision(6) << std::setw(16)
           << t.desired_T << std::setw(16) << t.computed_0 << std::setw(16) << t.evolved_T << '\n';
    };
    row("psi", psi);
    row("u=psi_y", u);
    row("v=-psi_x", v);
    row("omega", omega);
    if (runtime_seconds > 0.0) os << "runtime_seconds = " << runtime_seconds << '\n';
    return os.str();
}

AssimilationReport norm_report(const FlowState& d, const FlowState& c, const FlowState& e, double nu, double area) {
    AssimilationReport r;
    r.nu = nu;
    r.psi = {l2_norm(d.psi), l2_norm(c.psi), l2_norm(e.psi)};
    r.u = {l2_norm(d.u), l2_norm(c.u), l2_norm(e.u)};
    r.v = {l2_norm(d.v), l2_norm(c.v), l2_norm(e.v)};
    r.omega = {l2_norm(d.omega), l2_norm(c.omega), l2_norm(e.omega)};
    r.u_max = std::max({u_max(d.u, d.v), u_max(c.u, c.v), u_max(e.u, e.v)});
    r.reynolds = reynolds(r.u_max, nu, area);
    return r;
}

}  // namespace nsda
