#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsda/analysis.hpp"
#include "nsda/dynamics.hpp"
#include "nsda/spectral.hpp"

namespace nsda {

/// Linear-theory check: the stabilized leapfrog for w_t = Lw with constant
/// (a, b, nu), compared against the exact Fourier solution.
struct LinearVerifyConfig {
    int n = 64;
    LinearSymbolConfig sym{0.0, 0.0, 0.01};
    double T = 0.02;
    int steps = 200;
    /// Defaults to gamma_floor(lambda_J, p).
    std::optional<double> gamma;
    double p = 3.25;

    void validate() const;
};

/// Advection-dominated setting (a = 4, b = 2, nu = 0.01, T = 0.05, 100 steps)
/// where gamma_floor is small enough that the dt^2 terms dominate the error
/// left after removing the penalty. In pure diffusion the floor is large and
/// the startup step leaves an O(gamma lambda^p dt) component.
LinearVerifyConfig advection_config();

/// Error history of one march: error[k] = ||V^n - V(t_n)|| with n = k + 1,
/// V^n = [theta^n, omega^n], and the theorem bound at the same n.
struct ErrorCurve {
    Direction direction = Direction::forward;
    std::vector<int> step;
    std::vector<double> time;
    std::vector<double> error;
    std::vector<double> bound;
    ErrorBudget budget;
    bool pass = true;
    /// max of error / bound
    double worst_ratio = 0.0;
    int worst_step = 0;
};

struct LinearVerifyResult {
    LinearVerifyConfig cfg;
    double gamma = 0.0;
    LambdaJ lambda_J;
    StabilityReport lemma;
    ErrorCurve forward;
    ErrorCurve backward;

    bool pass() const { return lemma.pass && forward.pass && backward.pass; }
    /// key = value summary
    std::string to_text() const;
    /// direction,step,time,error,bound
    std::string curves_csv() const;
};

/// A fixed sum of a few low Fourier modes (cosines and sines).
ScalarField multimode_field(GridSpec grid);

/// Runs the mode scan and both marches. `data` defaults to
/// multimode_field. Throws InfeasibleSymbolError when no lambda_J exists.
LinearVerifyResult verify_linear(const LinearVerifyConfig& cfg, const ScalarField* data = nullptr);

/// Exact solution of the smoothed problem the march converges to as dt -> 0:
/// every mode multiplied by exp((g - gamma lambda^p) t).
ScalarField smoothed_exact_solution(const ScalarField& data, const LinearSymbolConfig& sym, double gamma, double p,
                                    double t);

struct OrderStudy {
    std::vector<int> steps;
    std::vector<double> dt;
    /// ||V^N - V(T)|| at the final step
    std::vector<double> total_error;
    /// ||V^N - V_smoothed(T)||: total error with the penalty field removed
    std::vector<double> temporal_error;
    /// log2 of successive temporal_error ratios
    std::vector<double> order;
    /// ||V_smoothed(T) - V(T)||
    double penalty = 0.0;
};

/// Forward march with steps, 2 steps, 4 steps, ... (`levels` runs).
OrderStudy temporal_order(const LinearVerifyConfig& cfg, int levels, const ScalarField* data = nullptr);

}  // namespace nsda
