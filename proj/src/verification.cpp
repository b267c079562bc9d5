#include "nsda/verification.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>

namespace nsda {

using std::numbers::pi;

void LinearVerifyConfig::validate() const {
    GridSpec::make(n);
    sym.validate();
    if (!(T > 0.0)) throw ParameterError("T must be > 0");
    if (steps < 2) throw ParameterError("steps must be >= 2");
    if (gamma && !(*gamma >= 0.0)) throw ParameterError("gamma must be >= 0");
    if (!(p > 1.0)) throw ParameterError("p must be > 1");
}

LinearVerifyConfig advection_config() {
    LinearVerifyConfig c;
    c.sym = {4.0, 2.0, 0.01};
    c.T = 0.05;
    c.steps = 100;
    return c;
}

ScalarField multimode_field(GridSpec grid) {
    struct Mode {
        int j, k;
        double c, s;
    };
    static constexpr Mode modes[] = {{1, 0, 1.0, 0.0}, {0, 1, 0.0, 0.8}, {1, 1, 0.5, -0.3}, {2, -1, -0.4, 0.25}, {1, 2, 0.2, 0.2}};
    return ScalarField::from_function(grid, [](double x, double y) {
        double v = 0.0;
        for (const auto& m : modes) {
            const double ph = 2 * pi * (m.j * x + m.k * y);
            v += m.c * std::cos(ph) + m.s * std::sin(ph);
        }
        return v;
    });
}

ScalarField smoothed_exact_solution(const ScalarField& data, const LinearSymbolConfig& sym, double gamma, double p,
                                    double t) {
    const int n = data.n();
    SpectralMultiplier m(data.grid(), [&](int j, int k) {
        const double damp = gamma * std::pow(lambda_coeff(j, k, sym.nu), p);
        return std::exp((grid_symbol(j, k, sym, n) - damp) * t);
    });
    return m.apply(data);
}

namespace {

double pair_norm(const ScalarField& a, const ScalarField& b) {
    const double x = l2_norm(a);
    const double y = l2_norm(b);
    return std::sqrt(x * x + y * y);
}

// max over t in [t0, t1] of ||M w(t)||, where w(t) = exp(g t) data. Each
// squared norm is a positive sum of exponentials in t, so the max sits at an
// endpoint.
double sup_norm(const ScalarField& data, const LinearSymbolConfig& sym, double t0, double t1,
                const std::function<Complex(int, int)>& m) {
    const int n = data.n();
    double best = 0.0;
    for (double t : {t0, t1}) {
        SpectralMultiplier op(data.grid(), [&](int j, int k) { return m(j, k) * std::exp(grid_symbol(j, k, sym, n) * t); });
        best = std::max(best, l2_norm(op.apply(data)));
    }
    return best;
}

ErrorCurve run_direction(const LinearVerifyConfig& cfg, double gamma, const LambdaJ& lj, const ScalarField& data,
                         Direction dir) {
    MarchConfig mc;
    mc.direction = dir;
    mc.t_final = cfg.T;
    mc.steps = cfg.steps;
    mc.gamma = gamma;
    mc.p = cfg.p;
    mc.nu = cfg.sym.nu;
    mc.raw_eta = 0.0;
    mc.blowup_threshold = 1e300;
    const double dt = mc.dt();
    const int n = data.n();
    const double sgn = dir == Direction::forward ? 1.0 : -1.0;

    // Norms of the exact solution over the marched interval.
    const double t_end = sgn * cfg.T;
    auto lam_p = [&](int j, int k) { return Complex(std::pow(lambda_coeff(j, k, cfg.sym.nu), cfg.p), 0.0); };
    const double nP = sup_norm(data, cfg.sym, 0.0, t_end, lam_p);
    const double nPL = sup_norm(data, cfg.sym, 0.0, t_end,
                                [&](int j, int k) { return lam_p(j, k) * grid_symbol(j, k, cfg.sym, n); });
    const double nttt = sup_norm(data, cfg.sym, 0.0, t_end, [&](int j, int k) {
        const Complex g = grid_symbol(j, k, cfg.sym, n);
        return g * g * g;
    });

    ErrorCurve c;
    c.direction = dir;
    c.budget = k_constants(lj.lambda_J, cfg.p, cfg.T, cfg.T / cfg.steps, compute_B(cfg.T / cfg.steps, nPL, nP))
                   .with_norms(nP, nttt);

    double initial = 0.0;
    const StepObserver obs = [&](const LeapfrogState& s, const NormRow&) {
        const int idx = s.step_index;
        const double e = pair_norm(s.theta - linear_exact_solution(data, cfg.sym, (idx - 1) * dt),
                                   s.omega - linear_exact_solution(data, cfg.sym, idx * dt));
        if (idx == 1) initial = e;
        const double b = theorem_error_bound(idx, c.budget, initial, dir);
        c.step.push_back(idx);
        c.time.push_back(s.time);
        c.error.push_back(e);
        c.bound.push_back(b);
        const double ratio = b > 0.0 ? e / b : (e > 0.0 ? INFINITY : 0.0);
        if (ratio > c.worst_ratio || c.step.size() == 1) {
            c.worst_ratio = ratio;
            c.worst_step = idx;
        }
        // Round-off allowance for the exactly representable cases.
        if (e > b * (1.0 + 1e-12) + 1e-13 * l2_norm(data)) c.pass = false;
    };
    linear_march(data, cfg.sym, mc, {}, obs);
    return c;
}

}  // namespace

LinearVerifyResult verify_linear(const LinearVerifyConfig& cfg, const ScalarField* data) {
    cfg.validate();
    const GridSpec grid = GridSpec::make(cfg.n);
    const ScalarField d = data ? *data : multimode_field(grid);
    if (d.n() != cfg.n) throw ParameterError("data grid does not match n");

    LinearVerifyResult r;
    r.cfg = cfg;
    r.lambda_J = select_lambda_J(cfg.sym, grid);
    r.gamma = cfg.gamma ? *cfg.gamma : gamma_floor(r.lambda_J.lambda_J, cfg.p);
    r.lemma = verify_lemma1({r.gamma, cfg.p, cfg.sym.nu, cfg.T / cfg.steps}, cfg.sym, grid);
    r.forward = run_direction(cfg, r.gamma, r.lambda_J, d, Direction::forward);
    r.backward = run_direction(cfg, r.gamma, r.lambda_J, d, Direction::backward);
    return r;
}

std::string LinearVerifyResult::to_text() const {
    std::ostringstream os;
    os.precision(10);
    os << "pass = " << (pass() ? "true" : "false") << '\n'
       << "n = " << cfg.n << '\n'
       << "a = " << cfg.sym.a << '\n'
       << "b = " << cfg.sym.b << '\n'
       << "nu = " << cfg.sym.nu << '\n'
       << "T = " << cfg.T << '\n'
       << "steps = " << cfg.steps << '\n'
       << "p = " << cfg.p << '\n'
       << "gamma = " << gamma << '\n'
       << "gamma_floor = " << gamma_floor(lambda_J.lambda_J, cfg.p) << '\n';
    os << "lemma.pass = " << (lemma.pass ? "true" : "false") << '\n'
       << "lemma.J = " << lemma.J << '\n'
       << "lemma.lambda_J = " << lemma.lambda_J << '\n'
       << "lemma.max_amplification = " << lemma.max_amplification << '\n'
       << "lemma.bound = " << lemma.bound << '\n'
       << "lemma.failing_modes = " << lemma.failing_modes << '\n'
       << "lemma.worst_mode = " << lemma.worst_j << ',' << lemma.worst_k << '\n';
    for (const ErrorCurve* c : {&forward, &backward}) {
        const std::string d = to_string(c->direction);
        os << d << ".pass = " << (c->pass ? "true" : "false") << '\n'
           << d << ".final_error = " << (c->error.empty() ? 0.0 : c->error.back()) << '\n'
           << d << ".final_bound = " << (c->bound.empty() ? 0.0 : c->bound.back()) << '\n'
           << d << ".worst_ratio = " << c->worst_ratio << '\n'
           << d << ".worst_step = " << c->worst_step << '\n'
           << d << ".B = " << c->budget.B << '\n'
           << d << ".K4 = " << c->budget.K4.value_or(0.0) << '\n';
    }
    return os.str();
}

std::string LinearVerifyResult::curves_csv() const {
    std::string out = "direction,step,time,error,bound\n";
    char buf[160];
    for (const ErrorCurve* c : {&forward, &backward}) {
        for (std::size_t k = 0; k < c->step.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g\n", to_string(c->direction).c_str(), c->step[k],
                          c->time[k], c->error[k], c->bound[k]);
            out += buf;
        }
    }
    return out;
}

OrderStudy temporal_order(const LinearVerifyConfig& cfg, int levels, const ScalarField* data) {
    cfg.validate();
    if (levels < 2) throw ParameterError("order study needs at least two levels");
    const GridSpec grid = GridSpec::make(cfg.n);
    const ScalarField d = data ? *data : multimode_field(grid);
    const double gamma = cfg.gamma ? *cfg.gamma : gamma_floor(select_lambda_J(cfg.sym, grid).lambda_J, cfg.p);

    OrderStudy s;
    for (int l = 0; l < levels; ++l) {
        const int steps = cfg.steps << l;
        const double dt = cfg.T / steps;
        MarchConfig mc;
        mc.t_final = cfg.T;
        mc.steps = steps;
        mc.gamma = gamma;
        mc.p = cfg.p;
        mc.raw_eta = 0.0;
        mc.blowup_threshold = 1e300;
        const Trajectory tr = linear_march(d, cfg.sym, mc);
        // Last state: theta at T - dt, omega at T. Only omega is kept in the
        // trajectory, so compare that level.
        const ScalarField& w = tr.final_state.omega;
        const ScalarField exact = linear_exact_solution(d, cfg.sym, cfg.T);
        const ScalarField smooth = smoothed_exact_solution(d, cfg.sym, gamma, cfg.p, cfg.T);
        s.steps.push_back(steps);
        s.dt.push_back(dt);
        s.total_error.push_back(l2_norm(w - exact));
        s.temporal_error.push_back(l2_norm(w - smooth));
        if (l == 0) s.penalty = l2_norm(smooth - exact);
    }
    for (std::size_t k = 1; k < s.temporal_error.size(); ++k)
        s.order.push_back(std::log2(s.temporal_error[k - 1] / s.temporal_error[k]));
    return s;
}

}  // namespace nsda
