#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "nsda/dynamics.hpp"
#include "nsda/fields.hpp"

namespace nsda {

/// max over nodes of sqrt(u^2 + v^2)
double u_max(const ScalarField& u, const ScalarField& v);

/// sqrt(area) u_max / nu
double reynolds(double u_max, double nu, double area = 1.0);

struct KnopsPayneInput {
    double E_sq = 12400.0;
    double Q_sq = 2.19e10;
    double nu = 0.01;
    double T = 1e-9;
    double M = 1.0;
    double delta = 1e-6;

    void validate() const;
    /// True when the a-priori bound does not dominate the data error.
    bool weak_prior() const { return M <= delta; }
};

/// Log-convexity constants and the t-dependent exponents built from them.
struct KnopsPayneOutput {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double T = 0.0;
    double M = 1.0;
    double delta = 1.0;

    /// (e^{at} - 1) / (e^{aT} - 1), evaluated without overflow.
    double mu(double t) const;
    /// c (t - mu(t) T)
    double log_gamma(double t) const;
    /// exp(log_gamma(t)); may be +inf when the exponent exceeds double range.
    double gamma(double t) const;
    /// Gamma(t) M^{1-mu(t)} delta^{mu(t)} with the stored M and delta.
    double bound(double t) const;
};

KnopsPayneOutput knops_payne(const KnopsPayneInput& in);

/// log of Gamma(t) M^{1-mu} delta^{mu}
double log_uncertainty_bound(const KnopsPayneOutput& out, double M, double delta, double t);
double uncertainty_bound(const KnopsPayneOutput& out, double M, double delta, double t);

struct ErrorBudget {
    double lambda_J = 0.0;
    double p = 3.25;
    double T = 0.0;
    double dt_abs = 0.0;
    double B = 1.0;
    double K1 = 1.0;
    double K2 = 0.0;
    double K3 = 0.0;
    std::optional<double> K4;
    std::optional<double> norm_P_omega;
    std::optional<double> norm_omega_ttt;

    /// Copy with |||P omega||| and |||omega_ttt||| supplied and K4 filled in.
    ErrorBudget with_norms(double norm_P_omega, double norm_omega_ttt) const;
};

/// K1 = exp(4 lambda_J T), K2 = sqrt(3) B lambda_J^{-p} (K1 - 1),
/// K3 = dt^2 (K1 - 1) / (24 lambda_J).
ErrorBudget k_constants(double lambda_J, double p, double T, double dt_abs, double B = 1.0);

/// {1 + (8/3) dt^2 |||PL omega||| / |||P omega|||}^{1/2}; 1 when |||P omega||| = 0.
double compute_B(double dt_abs, double norm_PL_omega, double norm_P_omega);

/// delta (1 + K1^2) + K4 (1 + K1). Throws ParameterError when K4 is missing.
double total_error_bound(double delta, const ErrorBudget& budget);

/// Forward: bound on ||E^n|| at t_n = n |dt| given ||E^1|| = initial_error.
/// Backward: bound on ||E^{n+1}|| after n backward steps given the data
/// error delta = initial_error. Uses budget.B, lambda_J, p, dt_abs and the two
/// norms, which must be present.
double theorem_error_bound(int n, const ErrorBudget& budget, double initial_error, Direction direction);

struct NormTriple {
    double desired_T = 0.0;
    double computed_0 = 0.0;
    double evolved_T = 0.0;
};

struct AssimilationReport {
    NormTriple psi;
    NormTriple u;
    NormTriple v;
    NormTriple omega;
    double u_max = 0.0;
    double reynolds = 0.0;
    double nu = 0.01;
    double runtime_seconds = 0.0;
    nlohmann::json parameters = nlohmann::json::object();

    /// Runtime is left out unless asked for, so identical runs serialize
    /// identically.
    nlohmann::json to_json(bool include_runtime = false) const;
    /// Variable / desired / computed / evolved table.
    std::string to_text() const;
};

/// The 4 x 3 norm table of three flow states. U_max is taken over the three
/// states; callers holding full trajectories may raise it.
AssimilationReport norm_report(const FlowState& desired_T, const FlowState& computed_0, const FlowState& evolved_T,
                               double nu, double area = 1.0);

}  // namespace nsda
