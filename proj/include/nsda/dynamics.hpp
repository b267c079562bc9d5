#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsda/errors.hpp"
#include "nsda/fields.hpp"
#include "nsda/poisson.hpp"
#include "nsda/spectral.hpp"

namespace nsda {

enum class Direction { forward, backward };

std::string to_string(Direction d);
/// Accepts "forward" / "backward"; throws ParameterError otherwise.
Direction parse_direction(const std::string& s);

struct MarchConfig {
    Direction direction = Direction::forward;
    double t_final = 6e-4;
    /// Number of time levels after the data; |dt| = t_final / steps.
    int steps = 600;
    double gamma = 0.0;
    double p = 3.25;
    double raw_xi = 0.53;
    double raw_eta = 0.1;
    double nu = 0.01;
    double blowup_threshold = 1e8;
    int taper_width = 8;
    MultigridConfig poisson;
    /// Keep a FlowState every `snapshot_stride` steps (0: final state only).
    int snapshot_stride = 0;
    /// When false, u = v = 0 is forced inside eval_L (pure diffusion path).
    bool advection = true;
    /// Zero the outer ring of theta and omega after every step.
    bool zero_boundary = true;

    double dt_abs() const { return t_final / steps; }
    /// Signed by direction.
    double dt() const { return direction == Direction::forward ? dt_abs() : -dt_abs(); }
    double start_time() const { return direction == Direction::forward ? 0.0 : t_final; }
    /// The smoother (gamma, p, nu, |dt|) implied by this march.
    SmootherConfig smoother() const { return {gamma, p, nu, dt_abs()}; }

    void validate() const;
};

/// Stream function, velocity and vorticity at one instant.
struct FlowState {
    double time = 0.0;
    ScalarField psi;
    ScalarField u;
    ScalarField v;
    ScalarField omega;

    static FlowState zero(GridSpec grid, double time = 0.0);
};

/// The two leapfrog levels (filtered copies overwrite unfiltered ones) plus
/// the stream function and velocity of the current omega.
struct LeapfrogState {
    ScalarField theta;
    ScalarField omega;
    ScalarField psi;
    ScalarField u;
    ScalarField v;
    int step_index = 1;
    double time = 0.0;  // time of the omega level

    FlowState flow() const { return {time, psi, u, v, omega}; }
};

struct NormRow {
    int step = 0;
    double time = 0.0;
    double psi = 0.0;
    double u = 0.0;
    double v = 0.0;
    double omega = 0.0;
    double u_max = 0.0;
};

NormRow norm_row(const FlowState& s, int step);

struct Trajectory {
    std::vector<FlowState> snapshots;
    FlowState final_state;
    std::vector<NormRow> norms;

    /// Running max of sqrt(u^2 + v^2) over every recorded step.
    double u_max() const;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int step, std::vector<double> norm_tail,
                    std::shared_ptr<const Trajectory> partial)
        : Error("divergence", what), step_(step), tail_(std::move(norm_tail)), partial_(std::move(partial)) {}

    int step() const noexcept { return step_; }
    /// Last few ||omega||_2 values, oldest first, ending with the offending one.
    const std::vector<double>& norm_tail() const noexcept { return tail_; }
    const std::shared_ptr<const Trajectory>& partial() const noexcept { return partial_; }

private:
    int step_;
    std::vector<double> tail_;
    std::shared_ptr<const Trajectory> partial_;
};

/// nu lap(omega) - u omega_x - v omega_y
ScalarField eval_L(const ScalarField& omega, const ScalarField& u, const ScalarField& v, double nu);

/// Result of the RAW time filter applied to a fresh leapfrog pair.
struct FilteredPair {
    ScalarField theta_bar;
    ScalarField omega_bar;
};

FilteredPair raw_filter(const ScalarField& theta_next, const ScalarField& omega_next,
                        const ScalarField& theta_bar_prev, double xi, double eta);

/// Scalar form of raw_filter, returned as {theta_bar, omega_bar}.
std::pair<double, double> raw_filter(double theta_next, double omega_next, double theta_bar_prev, double xi,
                                     double eta);

LeapfrogState init_march(const ScalarField& data, const MarchConfig& cfg);

LeapfrogState step(const LeapfrogState& state, const MarchConfig& cfg);

using StepObserver = std::function<void(const LeapfrogState&, const NormRow&)>;

/// Nonlinear marcher with its smoother built once. Not thread-safe; use one
/// instance per march.
class Marcher {
public:
    Marcher(const MarchConfig& cfg, GridSpec grid);

    LeapfrogState init(const ScalarField& data) const;
    LeapfrogState step(const LeapfrogState& state) const;
    const MarchConfig& config() const { return cfg_; }

private:
    FlowState solve_flow(const ScalarField& omega, const ScalarField* guess, double time) const;

    MarchConfig cfg_;
    SpectralMultiplier smoother_;
};

/// init_march followed by steps - 1 leapfrog steps, so the final omega level
/// sits at t_final (forward) or 0 (backward). The observer sees the state
/// after init and after every step. Throws DivergenceError with the partial
/// trajectory attached.
Trajectory march(const ScalarField& data, const MarchConfig& cfg, const StepObserver& observer = {});

/// Exact solution of w_t = Lw with constant coefficients: every Fourier mode
/// multiplied by exp(g t), using the grid symbol.
ScalarField linear_exact_solution(const ScalarField& data, const LinearSymbolConfig& sym, double t);

struct LinearMarchOptions {
    bool raw_filter = false;
    bool zero_boundary = false;
};

/// Stabilized leapfrog for the constant-coefficient problem, with L applied
/// through its grid symbol. States carry theta and omega only (psi, u, v are
/// left zero). sym.nu overrides cfg.nu.
Trajectory linear_march(const ScalarField& data, const LinearSymbolConfig& sym, const MarchConfig& cfg,
                        const LinearMarchOptions& opts = {}, const StepObserver& observer = {});

}  // namespace nsda
