#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "nsda/dynamics.hpp"
#include "support.hpp"

using namespace nsda;
using nsda::testing::Rng;
using std::numbers::pi;

namespace {

ScalarField cos_mode(GridSpec g, int j, int k, double phase = 0.0) {
    return ScalarField::from_function(g, [=](double x, double y) { return std::cos(2 * pi * (j * x + k * y) + phase); });
}

// Re(c exp(2 pi i (jx + ky))) sampled on the grid.
ScalarField real_mode(GridSpec g, int j, int k, std::complex<double> c) {
    return ScalarField::from_function(g, [=](double x, double y) {
        const double ph = 2 * pi * (j * x + k * y);
        return c.real() * std::cos(ph) - c.imag() * std::sin(ph);
    });
}

double rel(const ScalarField& a, const ScalarField& b) { return l2_norm(a - b) / std::max(l2_norm(b), 1e-300); }

ScalarField smooth_random(GridSpec g, Rng& rng, int modes = 6) {
    ScalarField f(g);
    for (int m = 0; m < modes; ++m) {
        const int j = 1 + static_cast<int>(rng.uniform(0, 4));
        const int k = 1 + static_cast<int>(rng.uniform(0, 4));
        const double amp = rng.uniform(-50, 50);
        f += ScalarField::from_function(g, [=](double x, double y) { return amp * std::sin(pi * j * x) * std::sin(pi * k * y); });
    }
    f.zero_boundary_ring();
    return f;
}

}  // namespace

TEST_CASE("direction and config validation") {
    CHECK(parse_direction("forward") == Direction::forward);
    CHECK(parse_direction("backward") == Direction::backward);
    CHECK_THROWS_AS(parse_direction("sideways"), ParameterError);
    CHECK(to_string(Direction::backward) == "backward");

    MarchConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.dt_abs() == doctest::Approx(1e-6));
    c.direction = Direction::backward;
    CHECK(c.dt() == doctest::Approx(-1e-6));
    CHECK(c.start_time() == c.t_final);

    auto bad = [](auto mut) {
        MarchConfig m;
        mut(m);
        CHECK_THROWS_AS(m.validate(), ParameterError);
    };
    bad([](MarchConfig& m) { m.steps = 0; });
    bad([](MarchConfig& m) { m.t_final = 0.0; });
    bad([](MarchConfig& m) { m.raw_eta = 0.3; });
    bad([](MarchConfig& m) { m.raw_xi = 1.5; });
    bad([](MarchConfig& m) { m.gamma = -1.0; });
    bad([](MarchConfig& m) { m.nu = 0.0; });
}

TEST_CASE("eval_L") {
    const GridSpec g = GridSpec::make(64);
    const ScalarField zero(g);
    CHECK(eval_L(zero, zero, zero, 0.01).max_abs() == 0.0);
    CHECK(eval_L(ScalarField(g, 2.5), zero, zero, 0.01).max_abs() < 1e-10);

    const auto s = ScalarField::from_function(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
    CHECK(rel(eval_L(s, zero, zero, 0.01), 0.01 * laplacian(s)) < 1e-15);

    const auto x = ScalarField::from_function(g, [](double x, double) { return x; });
    const auto y = ScalarField::from_function(g, [](double, double y) { return y; });
    const ScalarField adv = eval_L(x + 2.0 * y, ScalarField(g, 3.0), ScalarField(g, -1.0), 0.01);
    for (int i = 1; i < 63; ++i)
        for (int j = 1; j < 63; ++j) REQUIRE(adv(i, j) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(adv.boundary_clean());
}

TEST_CASE("RAW filter") {
    const auto [tb, wb] = raw_filter(1.0, 3.0, 1.0, 0.53, 0.2);
    CHECK(tb == doctest::Approx(1.106).epsilon(1e-15));
    CHECK(wb == doctest::Approx(2.915964).epsilon(1e-15));

    Rng rng(31);
    const GridSpec g = GridSpec::make(16);
    const ScalarField a = testing::random_field(g, rng);
    const ScalarField b = testing::random_field(g, rng);
    const ScalarField c = testing::random_field(g, rng);
    const FilteredPair id = raw_filter(a, b, c, 0.53, 0.0);
    CHECK(rel(id.theta_bar, a) == 0.0);
    CHECK(rel(id.omega_bar, b) == 0.0);

    const FilteredPair x1 = raw_filter(a, b, c, 1.0, 0.2);
    CHECK(rel(x1.omega_bar, b) == 0.0);
    CHECK(rel(x1.theta_bar, a) > 0.0);

    const FilteredPair f = raw_filter(a, b, c, 0.53, 0.1);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            const auto [t, w] = raw_filter(a(i, j), b(i, j), c(i, j), 0.53, 0.1);
            REQUIRE(f.theta_bar(i, j) == t);
            REQUIRE(f.omega_bar(i, j) == w);
        }
}

TEST_CASE("property: RAW filter displacements at xi = 0.5") {
    Rng rng(32);
    for (int trial = 0; trial < 50; ++trial) {
        const double t = rng.uniform(-5, 5);
        const double w = rng.uniform(-5, 5);
        const double p = rng.uniform(-5, 5);
        const double eta = rng.uniform(0, 0.2);
        const auto [tb, wb] = raw_filter(t, w, p, 0.5, eta);
        const double d = w - 2 * t + p;
        const double d_new = w - 2 * tb + p;
        CHECK(tb - t == doctest::Approx(0.25 * eta * d).epsilon(1e-12));
        CHECK(wb - w == doctest::Approx(-0.25 * eta * d_new).epsilon(1e-12));
    }
}

TEST_CASE("init is one explicit Euler step") {
    const GridSpec g = GridSpec::make(64);
    const auto s = ScalarField::from_function(g, [](double x, double y) { return std::sin(2 * pi * x) * std::sin(pi * y); });
    MarchConfig c;
    c.advection = false;
    c.steps = 10;
    c.t_final = 1e-4;
    const LeapfrogState st = init_march(s, c);
    ScalarField expect = s + c.dt_abs() * 0.01 * laplacian(s);
    expect.zero_boundary_ring();
    CHECK(l2_norm(st.omega - expect) <= 1e-12 * l2_norm(expect));
    CHECK(rel(st.theta, s) == 0.0);
    CHECK(st.step_index == 1);
    CHECK(st.time == doctest::Approx(1e-5));

    c.direction = Direction::backward;
    const LeapfrogState sb = init_march(s, c);
    ScalarField eb = s - c.dt_abs() * 0.01 * laplacian(s);
    eb.zero_boundary_ring();
    CHECK(l2_norm(sb.omega - eb) <= 1e-12 * l2_norm(eb));
    CHECK(sb.time == doctest::Approx(1e-4 - 1e-5));
}

TEST_CASE("linear march matches the per-mode 2x2 recurrence") {
    const GridSpec g = GridSpec::make(32);
    const LinearSymbolConfig sym{1.5, -0.7, 0.02};
    for (Direction dir : {Direction::forward, Direction::backward}) {
        for (bool filt : {false, true}) {
            MarchConfig c;
            c.direction = dir;
            c.t_final = 2e-3;
            c.steps = 40;
            c.gamma = 1e-4;
            c.raw_eta = filt ? 0.15 : 0.0;
            const int j = 3;
            const int k = -2;
            const std::complex<double> gsym = grid_symbol(j, k, sym, g.n);
            SmootherConfig sc = c.smoother();
            sc.nu = sym.nu;
            const double sig = smoothing_factor(j, k, sc);
            const double dt = c.dt();

            std::complex<double> th = 1.0;
            std::complex<double> om = 1.0 + dt * gsym;
            int seen = 0;
            double worst = 0.0;
            const StepObserver obs = [&](const LeapfrogState& s, const NormRow&) {
                if (s.step_index > 1) {
                    std::complex<double> tn = sig * om;
                    std::complex<double> wn = sig * (th + 2.0 * dt * gsym * om);
                    if (filt) {
                        const auto [tr, wr] = raw_filter(tn.real(), wn.real(), th.real(), c.raw_xi, c.raw_eta);
                        const auto [ti, wi] = raw_filter(tn.imag(), wn.imag(), th.imag(), c.raw_xi, c.raw_eta);
                        tn = {tr, ti};
                        wn = {wr, wi};
                    }
                    th = tn;
                    om = wn;
                }
                worst = std::max(worst, rel(s.omega, real_mode(g, j, k, om)));
                worst = std::max(worst, rel(s.theta, real_mode(g, j, k, th)));
                ++seen;
            };
            linear_march(cos_mode(g, j, k), sym, c, {filt, false}, obs);
            CHECK(seen == c.steps);
            CHECK(worst < 1e-11);
        }
    }
}

TEST_CASE("linear exact solution") {
    const GridSpec g = GridSpec::make(32);
    const LinearSymbolConfig heat{0.0, 0.0, 0.01};
    const ScalarField m = cos_mode(g, 2, 1);
    CHECK(rel(linear_exact_solution(m, heat, 0.0), m) < 1e-14);
    CHECK(rel(linear_exact_solution(m, heat, 0.3), std::exp(-4 * pi * pi * 0.01 * 5 * 0.3) * m) < 1e-13);

    // Pure transport by (a, b) shifts the mode.
    const LinearSymbolConfig adv{1.0, 0.5, 1e-12};
    const double t = 0.125;
    const ScalarField moved = linear_exact_solution(m, adv, t);
    CHECK(rel(moved, cos_mode(g, 2, 1, -2 * pi * (2 * 1.0 + 1 * 0.5) * t)) < 1e-9);

    Rng rng(33);
    const LinearSymbolConfig sym{0.8, -1.2, 0.01};
    const ScalarField r = testing::random_field(g, rng);
    const ScalarField two = linear_exact_solution(linear_exact_solution(r, sym, 0.01), sym, 0.02);
    CHECK(rel(two, linear_exact_solution(r, sym, 0.03)) < 1e-12);
    CHECK(rel(linear_exact_solution(linear_exact_solution(r, sym, 0.01), sym, -0.01), r) < 1e-12);
}

TEST_CASE("constant vorticity is a fixed point without boundary zeroing") {
    const GridSpec g = GridSpec::make(32);
    MarchConfig c;
    c.t_final = 1e-4;
    c.steps = 20;
    c.zero_boundary = false;
    c.gamma = 1e-6;
    const Trajectory tr = march(ScalarField(g, 3.0), c);
    CHECK(rel(tr.final_state.omega, ScalarField(g, 3.0)) < 1e-12);
    CHECK(tr.norms.size() == 21u);
}

TEST_CASE("march bookkeeping") {
    Rng rng(34);
    const GridSpec g = GridSpec::make(32);
    const ScalarField d = smooth_random(g, rng);
    MarchConfig c;
    c.t_final = 1e-4;
    c.steps = 12;
    c.snapshot_stride = 4;
    int calls = 0;
    const Trajectory f = march(d, c, [&](const LeapfrogState&, const NormRow&) { ++calls; });
    CHECK(calls == 12);
    CHECK(f.norms.size() == 13u);
    CHECK(f.norms.front().step == 0);
    CHECK(f.norms.back().step == 12);
    CHECK(f.final_state.time == doctest::Approx(1e-4));
    CHECK(f.snapshots.size() == 4u);
    CHECK(f.norms.front().omega == doctest::Approx(l2_norm(d)));
    CHECK(f.u_max() > 0.0);
    CHECK(f.final_state.psi.max_abs() > 0.0);

    c.direction = Direction::backward;
    const Trajectory b = march(d, c);
    CHECK(std::abs(b.final_state.time) < 1e-15);
    CHECK(b.norms.front().time == doctest::Approx(1e-4));

    ScalarField nan = d;
    nan(3, 3) = std::nan("");
    CHECK_THROWS_AS(march(nan, c), ParameterError);
}

TEST_CASE("property: unfiltered unsmoothed leapfrog is time reversible") {
    Rng rng(35);
    const GridSpec g = GridSpec::make(32);
    MarchConfig c;
    c.t_final = 2e-4;
    c.steps = 20;
    c.raw_eta = 0.0;
    c.gamma = 0.0;
    c.poisson.tol = 1e-13;
    for (int trial = 0; trial < 3; ++trial) {
        const ScalarField d = smooth_random(g, rng);
        const Marcher fwd(c, g);
        std::vector<LeapfrogState> hist{fwd.init(d)};
        for (int k = 0; k < 10; ++k) hist.push_back(fwd.step(hist.back()));

        MarchConfig cb = c;
        cb.direction = Direction::backward;
        const Marcher bwd(cb, g);
        const LeapfrogState& last = hist.back();
        const LeapfrogState& prev = hist[hist.size() - 2];
        LeapfrogState s = prev;
        s.theta = last.omega;
        for (int k = static_cast<int>(hist.size()) - 3; k >= 0; --k) {
            s = bwd.step(s);
            CHECK(rel(s.omega, hist[k].omega) < 1e-9);
        }
    }
}

TEST_CASE("divergence is reported with a norm tail and partial trajectory") {
    Rng rng(36);
    const GridSpec g = GridSpec::make(32);
    const ScalarField d = smooth_random(g, rng);
    MarchConfig c;
    c.t_final = 1e-3;
    c.steps = 30;
    c.blowup_threshold = 2.0 * l2_norm(d);
    const LinearSymbolConfig heat{0.0, 0.0, 50.0};
    c.direction = Direction::backward;
    try {
        linear_march(d, heat, c);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(std::string(e.kind()) == "divergence");
        CHECK(e.step() > 1);
        CHECK(e.step() <= c.steps);
        REQUIRE(!e.norm_tail().empty());
        CHECK(e.norm_tail().size() <= 8u);
        CHECK(e.norm_tail().back() > c.blowup_threshold);
        REQUIRE(e.partial());
        CHECK(static_cast<int>(e.partial()->norms.size()) == e.step());
    }
}
