#include "nsda/cli.hpp"

#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsda/analysis.hpp"
#include "nsda/params.hpp"
#include "nsda/service.hpp"
#include "nsda/verification.hpp"
#include "nsda/workflow.hpp"

namespace nsda {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

void kv(std::ostream& out, const std::string& key, double v) { out << key << " = " << num(v) << '\n'; }
void kv(std::ostream& out, const std::string& key, const std::string& v) { out << key << " = " << v << '\n'; }

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f || !(f << s)) throw IngestionError("cannot write " + p.string());
}

json read_json_file(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw IngestionError("cannot read config file " + p.string());
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ParameterError("config file " + p.string() + ": " + e.what());
    }
}

void make_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IngestionError("cannot create output directory " + dir.string());
}

fs::path default_data_dir() {
    if (const char* e = std::getenv("NSDA_DATA_DIR"); e && *e) return e;
    return "data";
}

// Flags that map onto RunParameters keys. Unset flags leave the value from
// the config file (or the default) alone.
struct ParamFlags {
    std::optional<double> T, nu, gamma, p, eta, xi, blowup, scale, mg_tol;
    std::optional<int> steps, taper, mg_cycles;
    std::optional<std::string> export_mode;
    std::string config;

    void add(CLI::App& app) {
        app.add_option("--config", config, "JSON file of parameters (flags override it)");
        app.add_option("--T", T, "final time T");
        app.add_option("--steps", steps, "time steps per direction");
        app.add_option("--nu", nu, "kinematic viscosity");
        app.add_option("--gamma", gamma, "smoothing strength");
        app.add_option("--p", p, "smoothing exponent");
        app.add_option("--eta", eta, "RAW filter eta");
        app.add_option("--xi", xi, "RAW filter xi");
        app.add_option("--taper", taper, "boundary taper width in nodes");
        app.add_option("--blowup-threshold", blowup, "||omega||_2 above which the march counts as diverged");
        app.add_option("--scale", scale, "intensity to stream function scale");
        app.add_option("--export", export_mode, "image export mode: absolute or minmax");
        app.add_option("--mg-tol", mg_tol, "multigrid relative tolerance");
        app.add_option("--mg-max-cycles", mg_cycles, "multigrid cycle limit");
    }

    json as_json() const {
        json j = json::object();
        auto put = [&](const char* k, const auto& v) {
            if (v) j[k] = *v;
        };
        put("T", T);
        put("steps", steps);
        put("nu", nu);
        put("gamma", gamma);
        put("p", p);
        put("eta", eta);
        put("xi", xi);
        put("taper", taper);
        put("blowup_threshold", blowup);
        put("scale", scale);
        put("export", export_mode);
        put("mg_tol", mg_tol);
        put("mg_max_cycles", mg_cycles);
        return j;
    }

    // defaults < config file < flags
    RunParameters resolve() const {
        RunParameters rp;
        FieldErrors errs;
        if (!config.empty()) {
            json c = read_json_file(config);
            if (c.is_object() && c.contains("parameters")) c = c["parameters"];
            apply_parameters(c, rp, errs);
        }
        apply_parameters(as_json(), rp, errs);
        if (errs.empty()) errs = validate_fields(rp);
        if (!errs.empty()) throw ParameterError(describe(errs));
        return rp;
    }
};

struct InputFlags {
    std::string input;
    std::string dataset;
    std::string data_dir;

    void add(CLI::App& app) {
        auto* i = app.add_option("--input", input, "PGM or PNG image of the stream function at T");
        auto* d = app.add_option("--dataset", dataset, "bundled dataset name instead of --input");
        i->excludes(d);
        app.add_option("--data-dir", data_dir, "dataset directory (default $NSDA_DATA_DIR or ./data)");
    }

    IntensityImage load() const {
        if (!input.empty()) return load_image(input);
        if (!dataset.empty()) return load_dataset(data_dir.empty() ? default_data_dir() : fs::path(data_dir), dataset);
        throw ParameterError("one of --input or --dataset is required");
    }
};

ScalarField ingest(const IntensityImage& img, const RunParameters& rp) {
    if (img.width == img.height && rp.march.taper_width > img.width / 4)
        throw ParameterError("taper: must be <= n/4 (" + std::to_string(img.width / 4) + ")");
    return intensity_to_stream(img, rp.scale, rp.march.taper_width);
}

std::string phase_of(const Trajectory* partial, Direction fallback) {
    if (!partial || partial->norms.empty()) return to_string(fallback);
    return partial->norms.front().time != 0.0 ? "backward" : "forward";
}

// Partial artifacts after a blow-up: norm rows up to the failure and a
// divergence document. Returns the exit status.
int report_divergence(const DivergenceError& e, const std::string& phase, const fs::path& out_dir,
                      const RunParameters& rp, std::ostream& err) {
    std::string csv = norms_csv_header();
    if (e.partial())
        for (const auto& r : e.partial()->norms) csv += norms_csv_row(phase, r);
    write_text(out_dir / "norms.csv", csv);
    json d = {{"error", {{"kind", e.kind()}, {"message", e.what()}}},
              {"failing_step", e.step()},
              {"failing_phase", phase},
              {"norm_tail", e.norm_tail()},
              {"parameters", to_json(rp)}};
    write_text(out_dir / "divergence.json", d.dump(2) + "\n");
    err << "error[divergence]: " << e.what() << '\n';
    return kExitDivergence;
}

int cmd_assimilate(const ParamFlags& pf, const InputFlags& in, const std::string& out_dir, bool quiet,
                   std::ostream& out, std::ostream& err) {
    const RunParameters rp = pf.resolve();
    const ScalarField psi = ingest(in.load(), rp);
    make_out_dir(out_dir);

    const FlowState desired = flow_from_stream(psi, rp.march.t_final);
    const IntensityImage desired_img = field_to_image(desired.psi, rp.export_mode, rp.scale);
    save_png(desired_img, fs::path(out_dir) / "desiredT.png");
    save_pgm(desired_img, fs::path(out_dir) / "desiredT.pgm");

    ProgressFn progress;
    int next_report = 0;
    if (!quiet) {
        progress = [&](const std::string& phase, const NormRow& row, int done, int total) {
            if (done < next_report && done != total) return;
            next_report = done + std::max(1, total / 10);
            err << "progress " << done << "/" << total << " " << phase << " t=" << num(row.time)
                << " |omega|=" << num(row.omega) << '\n';
        };
    }
    try {
        const AssimilationResult r = assimilate(psi, rp.march, progress);
        write_assimilation_artifacts(r, out_dir, rp.export_mode);
        out << r.report.to_text();
        kv(out, "artifacts", out_dir);
        return kExitOk;
    } catch (const DivergenceError& e) {
        return report_divergence(e, phase_of(e.partial().get(), Direction::backward), out_dir, rp, err);
    }
}

int cmd_march(const ParamFlags& pf, const InputFlags& in, const std::string& direction, const std::string& out_dir,
              std::ostream& out, std::ostream& err) {
    RunParameters rp = pf.resolve();
    rp.march.direction = parse_direction(direction);
    const ScalarField psi = ingest(in.load(), rp);
    make_out_dir(out_dir);
    const FlowState start = flow_from_stream(psi, rp.march.start_time());
    try {
        const Trajectory tr = march(start.omega, rp.march);
        const IntensityImage img = field_to_image(tr.final_state.psi, rp.export_mode, rp.scale);
        save_png(img, fs::path(out_dir) / "final.png");
        save_pgm(img, fs::path(out_dir) / "final.pgm");
        std::string csv = norms_csv_header();
        for (const auto& r : tr.norms) csv += norms_csv_row(direction, r);
        write_text(fs::path(out_dir) / "norms.csv", csv);

        const NormRow first = tr.norms.front();
        const NormRow last = tr.norms.back();
        std::ostringstream os;
        kv(os, "direction", direction);
        kv(os, "steps", rp.march.steps);
        kv(os, "dt", rp.march.dt());
        kv(os, "final_time", tr.final_state.time);
        for (auto [name, a, b] : {std::tuple{"psi", first.psi, last.psi}, std::tuple{"u", first.u, last.u},
                                  std::tuple{"v", first.v, last.v}, std::tuple{"omega", first.omega, last.omega}}) {
            kv(os, std::string(name) + ".start", a);
            kv(os, std::string(name) + ".final", b);
        }
        kv(os, "u_max", tr.u_max());
        write_text(fs::path(out_dir) / "summary.txt", os.str());
        out << os.str();
        return kExitOk;
    } catch (const DivergenceError& e) {
        return report_divergence(e, direction, out_dir, rp, err);
    }
}

struct LinearFlags {
    std::string preset = "diffusion";
    std::optional<int> n, steps;
    std::optional<double> a, b, nu, T, gamma, p;
    std::string data = "multimode";
    int levels = 0;
    std::optional<double> min_order;
    std::string out_dir;
};

int cmd_linear_verify(const LinearFlags& f, std::ostream& out) {
    LinearVerifyConfig cfg;
    if (f.preset == "advection") cfg = advection_config();
    else if (f.preset != "diffusion") throw ParameterError("preset: expected diffusion or advection");
    if (f.n) cfg.n = *f.n;
    if (f.steps) cfg.steps = *f.steps;
    if (f.a) cfg.sym.a = *f.a;
    if (f.b) cfg.sym.b = *f.b;
    if (f.nu) cfg.sym.nu = *f.nu;
    if (f.T) cfg.T = *f.T;
    if (f.p) cfg.p = *f.p;
    cfg.gamma = f.gamma;
    cfg.validate();

    const GridSpec grid = GridSpec::make(cfg.n);
    ScalarField data(grid);
    if (f.data == "multimode") data = multimode_field(grid);
    else if (f.data != "zero") throw ParameterError("data: expected multimode or zero");

    const LinearVerifyResult r = verify_linear(cfg, &data);
    bool pass = r.pass();
    std::string text = r.to_text();
    if (f.levels >= 2) {
        const OrderStudy s = temporal_order(cfg, f.levels, &data);
        std::ostringstream os;
        kv(os, "order.penalty", s.penalty);
        for (std::size_t k = 0; k < s.steps.size(); ++k) {
            const std::string key = "order.steps_" + std::to_string(s.steps[k]);
            kv(os, key + ".total_error", s.total_error[k]);
            kv(os, key + ".temporal_error", s.temporal_error[k]);
        }
        const double lowest = *std::min_element(s.order.begin(), s.order.end());
        kv(os, "order.min", lowest);
        if (f.min_order) {
            const bool ok = lowest >= *f.min_order;
            kv(os, "order.pass", ok ? "true" : "false");
            pass = pass && ok;
        }
        text += os.str();
    }
    // Overall verdict on the first line.
    text.replace(0, text.find('\n'), std::string("pass = ") + (pass ? "true" : "false"));
    out << text;
    if (!f.out_dir.empty()) {
        make_out_dir(f.out_dir);
        write_text(fs::path(f.out_dir) / "report.txt", text);
        write_text(fs::path(f.out_dir) / "curves.csv", r.curves_csv());
    }
    return pass ? kExitOk : kExitVerification;
}

int cmd_knops_payne(const KnopsPayneInput& in, std::optional<double> t_opt, std::ostream& out) {
    in.validate();
    const KnopsPayneOutput k = knops_payne(in);
    const double t = t_opt.value_or(0.5 * in.T);
    if (!(t >= 0.0 && t <= in.T)) throw ParameterError("t must lie in [0, T]");
    kv(out, "a", k.a);
    kv(out, "b", k.b);
    kv(out, "c", k.c);
    kv(out, "T", in.T);
    kv(out, "t", t);
    kv(out, "M", in.M);
    kv(out, "delta", in.delta);
    kv(out, "mu", k.mu(t));
    kv(out, "log_Gamma", k.log_gamma(t));
    kv(out, "Gamma", k.gamma(t));
    kv(out, "log_bound", log_uncertainty_bound(k, in.M, in.delta, t));
    kv(out, "bound", uncertainty_bound(k, in.M, in.delta, t));
    kv(out, "weak_prior", in.weak_prior() ? "true" : "false");
    return kExitOk;
}

struct BudgetFlags {
    double lambda_J = 3.8e4, p = 3.25, T = 1e-5, dt = 5e-8, B = 1.0, delta = 0.0;
    std::optional<double> norm_P, norm_ttt;
};

int cmd_budget(const BudgetFlags& f, std::ostream& out) {
    ErrorBudget e = k_constants(f.lambda_J, f.p, f.T, f.dt, f.B);
    kv(out, "lambda_J", f.lambda_J);
    kv(out, "p", f.p);
    kv(out, "T", f.T);
    kv(out, "dt", f.dt);
    kv(out, "B", f.B);
    kv(out, "lambda_J^-p", std::pow(f.lambda_J, -f.p));
    kv(out, "K1", e.K1);
    kv(out, "K2", e.K2);
    kv(out, "K3", e.K3);
    kv(out, "delta_coefficient", 1.0 + e.K1 * e.K1);
    if (f.norm_P || f.norm_ttt) {
        if (!f.norm_P || !f.norm_ttt) throw ParameterError("--norm-P-omega and --norm-omega-ttt go together");
        e = e.with_norms(*f.norm_P, *f.norm_ttt);
        kv(out, "K4", *e.K4);
        kv(out, "total_bound", total_error_bound(f.delta, e));
    }
    return kExitOk;
}

int cmd_lambda(const LinearSymbolConfig& sym, int n, double p, std::ostream& out) {
    sym.validate();
    const GridSpec grid = GridSpec::make(n);
    const LambdaJ lj = select_lambda_J(sym, grid);
    kv(out, "J", static_cast<double>(lj.J));
    kv(out, "lambda_J", lj.lambda_J);
    kv(out, "gamma_floor", gamma_floor(lj.lambda_J, p));
    return kExitOk;
}

int cmd_make_datasets(const std::string& dir, int n, std::ostream& out) {
    make_out_dir(dir);
    for (const auto& name : synthetic_image_names()) {
        const fs::path p = fs::path(dir) / (name + ".pgm");
        save_pgm(synthetic_image(name, n), p);
        out << p.string() << '\n';
    }
    return kExitOk;
}

int cmd_datasets(const std::string& dir, std::ostream& out) {
    for (const auto& d : list_datasets(dir.empty() ? default_data_dir() : fs::path(dir)))
        out << d["name"].get<std::string>() << ' ' << d["source"].get<std::string>() << ' ' << d["width"].get<int>()
            << 'x' << d["height"].get<int>() << '\n';
    return kExitOk;
}

int cmd_serve(const std::string& host, int port, const std::string& runs, const std::string& data_dir, int workers,
              std::ostream& out) {
    // Block the stop signals before any thread starts so only the waiter
    // below receives them.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    ServiceOptions opts;
    opts.run_root = runs;
    opts.data_dir = data_dir.empty() ? default_data_dir() : fs::path(data_dir);
    opts.workers = workers;
    RunService svc(opts);
    HttpFrontend http(svc);
    const int bound = http.bind(host, port);
    if (bound < 0) throw IngestionError("cannot bind " + host + ":" + std::to_string(port));
    out << "listening on http://" << host << ':' << bound << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        http.stop();
    });
    http.listen();
    // listen() can also return on its own; wake the waiter.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return kExitOk;
}

int exit_code_for(const Error& e) {
    const std::string& k = e.kind();
    if (k == "parameter" || k == "infeasible-symbol") return kExitUsage;
    if (k == "ingestion" || k == "not-found") return kExitIngestion;
    if (k == "divergence") return kExitDivergence;
    return kExitInternal;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stabilized backward/forward Navier-Stokes marching for image data", "nsda"};
    app.require_subcommand(1);

    ParamFlags pf_assim, pf_march;
    InputFlags in_assim, in_march;
    std::string out_assim = "out", out_march = "out", direction = "backward";
    bool quiet = false;
    auto* assim = app.add_subcommand("assimilate", "march an image backward to t = 0 and forward again");
    pf_assim.add(*assim);
    in_assim.add(*assim);
    assim->add_option("--out", out_assim, "artifact directory")->capture_default_str();
    assim->add_flag("--quiet", quiet, "no progress lines");

    auto* mar = app.add_subcommand("march", "single-direction march of an image's vorticity");
    pf_march.add(*mar);
    in_march.add(*mar);
    mar->add_option("--direction", direction, "forward or backward")->capture_default_str();
    mar->add_option("--out", out_march, "artifact directory")->capture_default_str();

    LinearFlags lf;
    auto* lin = app.add_subcommand("linear-verify", "linear march vs exact solution and the theorem bounds");
    lin->add_option("--preset", lf.preset, "diffusion (a = b = 0) or advection (a = 4, b = 2)")->capture_default_str();
    lin->add_option("--n", lf.n, "grid size");
    lin->add_option("--a", lf.a, "advection speed in x");
    lin->add_option("--b", lf.b, "advection speed in y");
    lin->add_option("--nu", lf.nu, "viscosity");
    lin->add_option("--T", lf.T, "time span");
    lin->add_option("--steps", lf.steps, "steps per direction");
    lin->add_option("--gamma", lf.gamma, "smoothing strength (default: gamma_floor)");
    lin->add_option("--p", lf.p, "smoothing exponent");
    lin->add_option("--data", lf.data, "multimode or zero")->capture_default_str();
    lin->add_option("--order-levels", lf.levels, "run the temporal order study with this many step halvings");
    lin->add_option("--min-order", lf.min_order, "fail unless every observed order reaches this");
    lin->add_option("--out", lf.out_dir, "write report.txt and curves.csv here");

    auto* ana = app.add_subcommand("analyze", "closed-form estimates");
    ana->require_subcommand(1);
    KnopsPayneInput kp;
    std::optional<double> kp_t;
    auto* kpc = ana->add_subcommand("knops-payne", "log-convexity continuous-dependence bound");
    kpc->add_option("--E2", kp.E_sq, "E^2")->capture_default_str();
    kpc->add_option("--Q2", kp.Q_sq, "Q^2")->capture_default_str();
    kpc->add_option("--nu", kp.nu, "viscosity")->capture_default_str();
    kpc->add_option("--T", kp.T, "time span")->capture_default_str();
    kpc->add_option("--M", kp.M, "a-priori bound")->capture_default_str();
    kpc->add_option("--delta", kp.delta, "data error")->capture_default_str();
    kpc->add_option("--t", kp_t, "evaluation time (default T/2)");
    BudgetFlags bf;
    auto* bud = ana->add_subcommand("budget", "K1..K4 error-budget constants");
    bud->add_option("--lambda-J", bf.lambda_J, "lambda_J")->capture_default_str();
    bud->add_option("--p", bf.p, "smoothing exponent")->capture_default_str();
    bud->add_option("--T", bf.T, "time span")->capture_default_str();
    bud->add_option("--dt", bf.dt, "|dt|")->capture_default_str();
    bud->add_option("--B", bf.B, "B")->capture_default_str();
    bud->add_option("--delta", bf.delta, "data error for the total bound")->capture_default_str();
    bud->add_option("--norm-P-omega", bf.norm_P, "|||P omega|||");
    bud->add_option("--norm-omega-ttt", bf.norm_ttt, "|||omega_ttt|||");
    LinearSymbolConfig lsym;
    int lam_n = 64;
    double lam_p = 3.25;
    auto* lam = ana->add_subcommand("lambda", "lambda_J and gamma_floor for a constant-coefficient symbol");
    lam->add_option("--a", lsym.a, "advection speed in x")->capture_default_str();
    lam->add_option("--b", lsym.b, "advection speed in y")->capture_default_str();
    lam->add_option("--nu", lsym.nu, "viscosity")->capture_default_str();
    lam->add_option("--n", lam_n, "grid size")->capture_default_str();
    lam->add_option("--p", lam_p, "smoothing exponent")->capture_default_str();

    std::string host = "127.0.0.1", runs = "runs", serve_data;
    int port = 8080, workers = 2;
    auto* srv = app.add_subcommand("serve", "HTTP run service");
    srv->add_option("--host", host)->capture_default_str();
    srv->add_option("--port", port)->capture_default_str();
    srv->add_option("--runs", runs, "run directory root")->capture_default_str();
    srv->add_option("--data-dir", serve_data, "dataset directory (default $NSDA_DATA_DIR or ./data)");
    srv->add_option("--workers", workers)->capture_default_str();

    std::string ds_out = "data";
    int ds_n = 256;
    auto* mk = app.add_subcommand("make-datasets", "write the built-in synthetic images as PGM");
    mk->add_option("--out", ds_out)->capture_default_str();
    mk->add_option("--n", ds_n, "image side")->capture_default_str();

    std::string list_dir;
    auto* lst = app.add_subcommand("datasets", "list available datasets");
    lst->add_option("--data-dir", list_dir);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        // Subcommand help arrives as CallForHelp from the subcommand.
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error[usage]: " << msg << '\n';
        return kExitUsage;
    }

    try {
        if (*assim) return cmd_assimilate(pf_assim, in_assim, out_assim, quiet, out, err);
        if (*mar) return cmd_march(pf_march, in_march, direction, out_march, out, err);
        if (*lin) return cmd_linear_verify(lf, out);
        if (*kpc) return cmd_knops_payne(kp, kp_t, out);
        if (*bud) return cmd_budget(bf, out);
        if (*lam) return cmd_lambda(lsym, lam_n, lam_p, out);
        if (*srv) return cmd_serve(host, port, runs, serve_data, workers, out);
        if (*mk) return cmd_make_datasets(ds_out, ds_n, out);
        if (*lst) return cmd_datasets(list_dir, out);
    } catch (const DivergenceError& e) {
        err << "error[divergence]: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const Error& e) {
        err << "error[" << e.kind() << "]: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error[internal]: " << e.what() << '\n';
        return kExitInternal;
    }
    err << "error[usage]: no command\n";
    return kExitUsage;
}

}  // namespace nsda
