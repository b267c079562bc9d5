#include "nsda/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace nsda {

std::string to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

Direction parse_direction(const std::string& s) {
    if (s == "forward") return Direction::forward;
    if (s == "backward") return Direction::backward;
    throw ParameterError("direction must be 'forward' or 'backward', got '" + s + "'");
}

void MarchConfig::validate() const {
    if (!(t_final > 0.0) || !std::isfinite(t_final)) throw ParameterError("T must be > 0");
    if (steps < 1) throw ParameterError("steps must be >= 1");
    if (!(raw_eta >= 0.0 && raw_eta <= 0.2)) throw ParameterError("eta must lie in [0, 0.2]");
    if (!(raw_xi >= 0.0 && raw_xi <= 1.0)) throw ParameterError("xi must lie in [0, 1]");
    if (!(blowup_threshold > 0.0)) throw ParameterError("blowup threshold must be > 0");
    if (taper_width < 0) throw ParameterError("taper width must be >= 0");
    if (snapshot_stride < 0) throw ParameterError("snapshot stride must be >= 0");
    smoother().validate();
    poisson.validate();
}

FlowState FlowState::zero(GridSpec grid, double time) {
    return {time, ScalarField(grid), ScalarField(grid), ScalarField(grid), ScalarField(grid)};
}

NormRow norm_row(const FlowState& s, int step) {
    NormRow r;
    r.step = step;
    r.time = s.time;
    r.psi = l2_norm(s.psi);
    r.u = l2_norm(s.u);
    r.v = l2_norm(s.v);
    r.omega = l2_norm(s.omega);
    double m2 = 0.0;
    auto u = s.u.values();
    auto v = s.v.values();
    for (std::size_t k = 0; k < u.size(); ++k) m2 = std::max(m2, u[k] * u[k] + v[k] * v[k]);
    r.u_max = std::sqrt(m2);
    return r;
}

double Trajectory::u_max() const {
    double m = 0.0;
    for (const auto& r : norms) m = std::max(m, r.u_max);
    return m;
}

ScalarField eval_L(const ScalarField& omega, const ScalarField& u, const ScalarField& v, double nu) {
    ScalarField out = laplacian(omega);
    out *= nu;
    const ScalarField wx = ddx(omega);
    const ScalarField wy = ddy(omega);
    auto o = out.values();
    auto uu = u.values();
    auto vv = v.values();
    auto ax = wx.values();
    auto ay = wy.values();
    for (std::size_t k = 0; k < o.size(); ++k) o[k] -= uu[k] * ax[k] + vv[k] * ay[k];
    return out;
}

std::pair<double, double> raw_filter(double theta_next, double omega_next, double theta_bar_prev, double xi,
                                     double eta) {
    const double tb = theta_next + 0.5 * xi * eta * (omega_next - 2.0 * theta_next + theta_bar_prev);
    const double wb = omega_next - 0.5 * eta * (1.0 - xi) * (omega_next - 2.0 * tb + theta_bar_prev);
    return {tb, wb};
}

FilteredPair raw_filter(const ScalarField& theta_next, const ScalarField& omega_next,
                        const ScalarField& theta_bar_prev, double xi, double eta) {
    FilteredPair out{theta_next, omega_next};
    if (eta == 0.0) return out;
    auto t = out.theta_bar.values();
    auto w = out.omega_bar.values();
    auto tp = theta_bar_prev.values();
    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto [tb, wb] = raw_filter(t[k], w[k], tp[k], xi, eta);
        t[k] = tb;
        w[k] = wb;
    }
    return out;
}

Marcher::Marcher(const MarchConfig& cfg, GridSpec grid) : cfg_(cfg) {
    cfg_.validate();
    smoother_ = make_smoother(grid, cfg_.smoother());
}

FlowState Marcher::solve_flow(const ScalarField& omega, const ScalarField* guess, double time) const {
    FlowState s;
    s.time = time;
    s.omega = omega;
    s.psi = solve_poisson_multigrid(omega, cfg_.poisson, guess);
    if (cfg_.advection) {
        Velocity vel = velocity_from_stream(s.psi);
        s.u = std::move(vel.u);
        s.v = std::move(vel.v);
    } else {
        s.u = ScalarField(omega.grid());
        s.v = ScalarField(omega.grid());
    }
    return s;
}

LeapfrogState Marcher::init(const ScalarField& data) const {
    const FlowState d = solve_flow(data, nullptr, cfg_.start_time());
    ScalarField w1 = data;
    w1.axpy(cfg_.dt(), eval_L(data, d.u, d.v, cfg_.nu));
    if (cfg_.zero_boundary) w1.zero_boundary_ring();

    FlowState f1 = solve_flow(w1, &d.psi, cfg_.start_time() + cfg_.dt());
    LeapfrogState s;
    s.theta = data;
    s.omega = std::move(f1.omega);
    s.psi = std::move(f1.psi);
    s.u = std::move(f1.u);
    s.v = std::move(f1.v);
    s.step_index = 1;
    s.time = f1.time;
    return s;
}

LeapfrogState Marcher::step(const LeapfrogState& st) const {
    const double dt = cfg_.dt();
    ScalarField theta_next = smoother_.apply(st.omega);
    ScalarField rhs = st.theta;
    rhs.axpy(2.0 * dt, eval_L(st.omega, st.u, st.v, cfg_.nu));
    ScalarField omega_next = smoother_.apply(rhs);

    FilteredPair f = raw_filter(theta_next, omega_next, st.theta, cfg_.raw_xi, cfg_.raw_eta);
    if (cfg_.zero_boundary) {
        f.theta_bar.zero_boundary_ring();
        f.omega_bar.zero_boundary_ring();
    }

    LeapfrogState out;
    out.step_index = st.step_index + 1;
    out.time = cfg_.start_time() + out.step_index * dt;
    out.theta = std::move(f.theta_bar);
    if (f.omega_bar.all_finite() && l2_norm(f.omega_bar) <= cfg_.blowup_threshold) {
        FlowState fl = solve_flow(f.omega_bar, &st.psi, out.time);
        out.psi = std::move(fl.psi);
        out.u = std::move(fl.u);
        out.v = std::move(fl.v);
    } else {
        // Left for the caller's divergence check; no Poisson solve on garbage.
        out.psi = ScalarField(st.omega.grid());
        out.u = ScalarField(st.omega.grid());
        out.v = ScalarField(st.omega.grid());
    }
    out.omega = std::move(f.omega_bar);
    return out;
}

LeapfrogState init_march(const ScalarField& data, const MarchConfig& cfg) { return Marcher(cfg, data.grid()).init(data); }

LeapfrogState step(const LeapfrogState& state, const MarchConfig& cfg) { return Marcher(cfg, state.omega.grid()).step(state); }

namespace {

constexpr std::size_t kTailLength = 8;

class Recorder {
public:
    Recorder(const MarchConfig& cfg, const StepObserver& obs) : cfg_(cfg), obs_(obs) {}

    void record_data(const FlowState& d) {
        traj_.norms.push_back(norm_row(d, 0));
        if (cfg_.snapshot_stride > 0) traj_.snapshots.push_back(d);
    }

    void record(const LeapfrogState& s) {
        const double w = l2_norm(s.omega);
        tail_.push_back(w);
        if (tail_.size() > kTailLength) tail_.pop_front();
        if (!std::isfinite(w) || !s.omega.all_finite() || w > cfg_.blowup_threshold) {
            std::ostringstream msg;
            msg << to_string(cfg_.direction) << " march diverged at step " << s.step_index << " (t = " << s.time
                << "): ||omega||_2 = " << w << " exceeds " << cfg_.blowup_threshold;
            auto partial = std::make_shared<Trajectory>(traj_);
            throw DivergenceError(msg.str(), s.step_index, {tail_.begin(), tail_.end()}, partial);
        }
        const FlowState f = s.flow();
        traj_.norms.push_back(norm_row(f, s.step_index));
        if (obs_) obs_(s, traj_.norms.back());
        if (cfg_.snapshot_stride > 0 && s.step_index % cfg_.snapshot_stride == 0) traj_.snapshots.push_back(f);
        traj_.final_state = f;
    }

    Trajectory take() { return std::move(traj_); }

private:
    const MarchConfig& cfg_;
    const StepObserver& obs_;
    Trajectory traj_;
    std::deque<double> tail_;
};

}  // namespace

Trajectory march(const ScalarField& data, const MarchConfig& cfg, const StepObserver& observer) {
    Marcher m(cfg, data.grid());
    if (!data.all_finite()) throw ParameterError("march data is not finite");
    Recorder rec(cfg, observer);
    {
        FlowState d;
        d.time = cfg.start_time();
        d.omega = data;
        d.psi = solve_poisson_multigrid(data, cfg.poisson);
        if (cfg.advection) {
            Velocity vel = velocity_from_stream(d.psi);
            d.u = std::move(vel.u);
            d.v = std::move(vel.v);
        } else {
            d.u = ScalarField(data.grid());
            d.v = ScalarField(data.grid());
        }
        rec.record_data(d);
    }
    LeapfrogState s = m.init(data);
    rec.record(s);
    for (int k = 1; k < cfg.steps; ++k) {
        s = m.step(s);
        rec.record(s);
    }
    return rec.take();
}

ScalarField linear_exact_solution(const ScalarField& data, const LinearSymbolConfig& sym, double t) {
    sym.validate();
    const int n = data.n();
    SpectralMultiplier m(data.grid(), [&](int j, int k) { return std::exp(grid_symbol(j, k, sym, n) * t); });
    return m.apply(data);
}

Trajectory linear_march(const ScalarField& data, const LinearSymbolConfig& sym, const MarchConfig& cfg_in,
                        const LinearMarchOptions& opts, const StepObserver& observer) {
    MarchConfig cfg = cfg_in;
    cfg.nu = sym.nu;
    cfg.validate();
    sym.validate();
    if (!data.all_finite()) throw ParameterError("march data is not finite");
    const GridSpec grid = data.grid();
    const SpectralMultiplier S = make_smoother(grid, cfg.smoother());
    const SpectralMultiplier L = make_linear_operator(grid, sym);
    const double dt = cfg.dt();

    auto to_state = [&](ScalarField theta, ScalarField omega, int idx) {
        LeapfrogState s;
        s.theta = std::move(theta);
        s.omega = std::move(omega);
        s.psi = ScalarField(grid);
        s.u = ScalarField(grid);
        s.v = ScalarField(grid);
        s.step_index = idx;
        s.time = cfg.start_time() + idx * dt;
        return s;
    };

    Recorder rec(cfg, observer);
    rec.record_data({cfg.start_time(), ScalarField(grid), ScalarField(grid), ScalarField(grid), data});

    ScalarField w1 = data;
    w1.axpy(dt, L.apply(data));
    if (opts.zero_boundary) w1.zero_boundary_ring();
    LeapfrogState s = to_state(data, std::move(w1), 1);
    rec.record(s);
    for (int k = 1; k < cfg.steps; ++k) {
        ScalarField theta_next = S.apply(s.omega);
        ScalarField rhs = s.theta;
        rhs.axpy(2.0 * dt, L.apply(s.omega));
        ScalarField omega_next = S.apply(rhs);
        if (opts.raw_filter) {
            FilteredPair f = raw_filter(theta_next, omega_next, s.theta, cfg.raw_xi, cfg.raw_eta);
            theta_next = std::move(f.theta_bar);
            omega_next = std::move(f.omega_bar);
        }
        if (opts.zero_boundary) {
            theta_next.zero_boundary_ring();
            omega_next.zero_boundary_ring();
        }
        s = to_state(std::move(theta_next), std::move(omega_next), s.step_index + 1);
        rec.record(s);
    }
    return rec.take();
}

}  // namespace nsda
