#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "nsda/workflow.hpp"

using namespace nsda;
namespace fs = std::filesystem;

namespace {

MarchConfig small_config() {
    MarchConfig c;
    c.t_final = 6e-5;
    c.steps = 30;
    c.gamma = 5e-8;
    return c;
}

ScalarField small_psi() { return intensity_to_stream(synthetic_image("storm", 64)); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("flow from stream") {
    const ScalarField psi = small_psi();
    const FlowState f = flow_from_stream(psi, 0.5);
    CHECK(f.time == 0.5);
    CHECK(l2_norm(f.omega + laplacian(psi)) == 0.0);
    CHECK(l2_norm(f.u - ddy(psi)) == 0.0);
    CHECK(l2_norm(f.v + ddx(psi)) == 0.0);
}

TEST_CASE("assimilation round trip on a small grid") {
    const MarchConfig c = small_config();
    int calls = 0;
    int last_done = 0;
    int total_seen = 0;
    bool phases_ordered = true;
    std::string phase_prev = "backward";
    const AssimilationResult r = assimilate(small_psi(), c, [&](const std::string& phase, const NormRow&, int done, int total) {
        ++calls;
        phases_ordered = phases_ordered && !(phase_prev == "forward" && phase == "backward");
        phase_prev = phase;
        last_done = done;
        total_seen = total;
    });
    CHECK(calls == 2 * c.steps);
    CHECK(last_done == total_seen);
    CHECK(total_seen == 2 * c.steps);
    CHECK(phases_ordered);

    CHECK(r.desired_T.time == c.t_final);
    CHECK(std::abs(r.computed_0.time) < 1e-18);
    CHECK(r.evolved_T.time == doctest::Approx(c.t_final));
    CHECK(r.backward.norms.size() == static_cast<std::size_t>(c.steps + 1));
    CHECK(r.forward.norms.size() == static_cast<std::size_t>(c.steps + 1));

    const AssimilationReport& rep = r.report;
    CHECK(rep.psi.desired_T == l2_norm(r.desired_T.psi));
    CHECK(rep.omega.computed_0 == l2_norm(r.computed_0.omega));
    CHECK(rep.u_max >= u_max(r.desired_T.u, r.desired_T.v));
    CHECK(rep.u_max >= r.backward.u_max());
    CHECK(rep.reynolds == doctest::Approx(rep.u_max / c.nu));
    CHECK(rep.parameters["steps"] == c.steps);
    CHECK(rep.parameters["gamma"].get<double>() == c.gamma);
    // Smoothing signature.
    CHECK(rep.omega.evolved_T < rep.omega.desired_T);

    const AssimilationResult again = assimilate(small_psi(), c);
    CHECK(again.report.to_json() == rep.to_json());
}

TEST_CASE("norms csv") {
    NormRow row{3, 1e-5, 0.25, 1.0, 2.0, 3.0, 4.0};
    CHECK(norms_csv_header() == "phase,step,time,psi,u,v,omega,u_max\n");
    CHECK(norms_csv_row("forward", row) == "forward,3,1.0000000000000001e-05,0.25,1,2,3,4\n");
}

TEST_CASE("artifacts") {
    MarchConfig c = small_config();
    c.steps = 6;
    const AssimilationResult r = assimilate(small_psi(), c);
    const fs::path dir = fs::temp_directory_path() / ("nsda_workflow_" + std::to_string(::getpid()));
    write_assimilation_artifacts(r, dir);
    for (const char* f : {"desiredT.png", "desiredT.pgm", "computed0.png", "computed0.pgm", "evolvedT.png", "evolvedT.pgm",
                          "report.json", "report.txt", "norms.csv"})
        CHECK(fs::exists(dir / f));
    CHECK(load_image(dir / "desiredT.pgm") == load_image(dir / "desiredT.png"));
    CHECK(load_image(dir / "desiredT.pgm") == field_to_image(r.desired_T.psi, ExportMode::absolute));
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(j == r.report.to_json());
    const std::string csv = slurp(dir / "norms.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * (c.steps + 1));
    fs::remove_all(dir);
}

TEST_CASE("divergence propagates from the backward phase") {
    MarchConfig c = small_config();
    c.gamma = 0.0;
    c.blowup_threshold = 1.0;
    try {
        assimilate(small_psi(), c);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.step() == 1);
        REQUIRE(e.partial());
        CHECK(e.partial()->norms.front().time == c.t_final);
    }
}
