#include "nsda/workflow.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

namespace nsda {

FlowState flow_from_stream(const ScalarField& psi, double time) {
    FlowState s;
    s.time = time;
    s.psi = psi;
    Velocity vel = velocity_from_stream(psi);
    s.u = std::move(vel.u);
    s.v = std::move(vel.v);
    s.omega = vorticity_from_stream(psi);
    return s;
}

nlohmann::json to_json(const MarchConfig& c) {
    return {
        {"T", c.t_final},
        {"steps", c.steps},
        {"dt_abs", c.dt_abs()},
        {"gamma", c.gamma},
        {"p", c.p},
        {"nu", c.nu},
        {"xi", c.raw_xi},
        {"eta", c.raw_eta},
        {"blowup_threshold", c.blowup_threshold},
        {"taper", c.taper_width},
        {"advection", c.advection},
        {"zero_boundary", c.zero_boundary},
        {"poisson", {{"pre_smooth", c.poisson.pre_smooth},
                     {"post_smooth", c.poisson.post_smooth},
                     {"coarsest_n", c.poisson.coarsest_n},
                     {"tol", c.poisson.tol},
                     {"max_cycles", c.poisson.max_cycles}}},
    };
}

AssimilationResult assimilate(const ScalarField& psi_T, const MarchConfig& cfg, const ProgressFn& progress) {
    const auto t0 = std::chrono::steady_clock::now();
    MarchConfig back = cfg;
    back.direction = Direction::backward;
    MarchConfig fwd = cfg;
    fwd.direction = Direction::forward;
    back.validate();

    AssimilationResult r;
    r.desired_T = flow_from_stream(psi_T, cfg.t_final);

    const int total = 2 * cfg.steps;
    StepObserver back_obs;
    StepObserver fwd_obs;
    if (progress) {
        back_obs = [&](const LeapfrogState& s, const NormRow& row) { progress("backward", row, s.step_index, total); };
        fwd_obs = [&](const LeapfrogState& s, const NormRow& row) {
            progress("forward", row, cfg.steps + s.step_index, total);
        };
    }

    r.backward = march(r.desired_T.omega, back, back_obs);
    r.computed_0 = r.backward.final_state;
    r.forward = march(r.computed_0.omega, fwd, fwd_obs);
    r.evolved_T = r.forward.final_state;

    r.report = norm_report(r.desired_T, r.computed_0, r.evolved_T, cfg.nu);
    r.report.u_max = std::max({r.report.u_max, r.backward.u_max(), r.forward.u_max()});
    r.report.reynolds = reynolds(r.report.u_max, cfg.nu);
    r.report.parameters = to_json(cfg);
    r.report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::string norms_csv_header() { return "phase,step,time,psi,u,v,omega,u_max\n"; }

std::string norms_csv_row(const std::string& phase, const NormRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", phase.c_str(), r.step, r.time,
                  r.psi, r.u, r.v, r.omega, r.u_max);
    return buf;
}

std::string norms_csv(const AssimilationResult& r) {
    std::string out = norms_csv_header();
    for (const auto& row : r.backward.norms) out += norms_csv_row("backward", row);
    for (const auto& row : r.forward.norms) out += norms_csv_row("forward", row);
    return out;
}

namespace {
void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IngestionError("cannot write " + p.string());
    out << s;
}
}  // namespace

void write_assimilation_artifacts(const AssimilationResult& r, const std::filesystem::path& dir, ExportMode mode) {
    std::filesystem::create_directories(dir);
    const std::pair<const char*, const FlowState*> panels[] = {
        {"desiredT", &r.desired_T}, {"computed0", &r.computed_0}, {"evolvedT", &r.evolved_T}};
    for (const auto& [name, st] : panels) {
        const IntensityImage img = field_to_image(st->psi, mode);
        save_png(img, dir / (std::string(name) + ".png"));
        save_pgm(img, dir / (std::string(name) + ".pgm"));
    }
    write_text(dir / "report.json", r.report.to_json().dump(2) + "\n");
    write_text(dir / "report.txt", r.report.to_text());
    write_text(dir / "norms.csv", norms_csv(r));
}

}  // namespace nsda
