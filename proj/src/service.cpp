#include "nsda/service.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "nsda/workflow.hpp"

namespace nsda {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::queued: return "queued";
        case RunStatus::running: return "running";
        case RunStatus::done: return "done";
        case RunStatus::diverged: return "diverged";
        case RunStatus::failed: return "failed";
    }
    return "?";
}

namespace {

struct ArtifactName {
    const char* name;
    const char* file;
    const char* content_type;
};

constexpr ArtifactName kArtifacts[] = {
    {"desiredT.png", "desiredT.png", "image/png"},
    {"computed0.png", "computed0.png", "image/png"},
    {"evolvedT.png", "evolvedT.png", "image/png"},
    {"desiredT.pgm", "desiredT.pgm", "image/x-portable-graymap"},
    {"computed0.pgm", "computed0.pgm", "image/x-portable-graymap"},
    {"evolvedT.pgm", "evolvedT.pgm", "image/x-portable-graymap"},
    {"desiredT", "desiredT.png", "image/png"},
    {"computed0", "computed0.png", "image/png"},
    {"evolvedT", "evolvedT.png", "image/png"},
    {"report", "report.json", "application/json"},
    {"report.json", "report.json", "application/json"},
    {"report.txt", "report.txt", "text/plain"},
    {"norms", "norms.csv", "text/csv"},
    {"norms.csv", "norms.csv", "text/csv"},
};

const ArtifactName* find_artifact(const std::string& name) {
    for (const auto& a : kArtifacts)
        if (name == a.name) return &a;
    return nullptr;
}

bool valid_dataset_name(const std::string& s) {
    if (s.empty() || s.size() > 64) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '-'; });
}

json row_json(const std::string& phase, const NormRow& r) {
    return {{"phase", phase}, {"step", r.step}, {"time", r.time}, {"psi", r.psi}, {"u", r.u},
            {"v", r.v},       {"omega", r.omega}, {"u_max", r.u_max}};
}

void write_file(const fs::path& p, const std::string& s, std::ios::openmode mode = std::ios::trunc) {
    std::ofstream out(p, std::ios::binary | mode);
    if (!out) throw IngestionError("cannot write " + p.string());
    out << s;
}

struct Cancelled {};

}  // namespace

struct RunService::Impl {
    struct Record {
        std::string id;
        RunRequest req;
        IntensityImage image;
        fs::path dir;
        RunStatus status = RunStatus::queued;
        int step = 0;
        int total = 0;
        std::string phase;
        std::vector<std::pair<std::string, NormRow>> history;
        std::size_t flushed = 0;
        std::set<std::string> ready;  // files
        std::string error_kind;
        std::string error_message;
        std::optional<int> failing_step;
        std::string failing_phase;
        std::vector<double> norm_tail;
        json report;
    };

    ServiceOptions opts;
    mutable std::shared_mutex mu;
    mutable std::mutex wait_mu;
    mutable std::condition_variable_any changed;
    std::map<std::string, std::shared_ptr<Record>> runs;
    std::deque<std::string> queue;
    std::condition_variable_any queue_cv;
    std::atomic<bool> stopping{false};
    std::vector<std::thread> workers;
    std::uint64_t counter = 0;
    std::mt19937_64 id_rng{std::random_device{}()};

    void worker_loop();
    void execute(const std::shared_ptr<Record>& rec);
    void flush_norms(Record& rec, bool all);
    json status_of(const Record& r) const;
};

RunService::RunService(ServiceOptions opts) : impl_(std::make_unique<Impl>()) {
    if (opts.workers < 1) throw ParameterError("worker count must be >= 1");
    if (opts.flush_every < 1) throw ParameterError("flush interval must be >= 1");
    impl_->opts = std::move(opts);
    fs::create_directories(impl_->opts.run_root);
    for (int k = 0; k < impl_->opts.workers; ++k) impl_->workers.emplace_back([this] { impl_->worker_loop(); });
}

RunService::~RunService() {
    {
        std::unique_lock lock(impl_->mu);
        impl_->stopping = true;
    }
    impl_->queue_cv.notify_all();
    for (auto& t : impl_->workers) t.join();
}

const ServiceOptions& RunService::options() const { return impl_->opts; }

IntensityImage load_dataset(const fs::path& data_dir, const std::string& name) {
    if (!valid_dataset_name(name)) throw DatasetNotFound(name);
    if (!data_dir.empty()) {
        for (const char* ext : {".pgm", ".png"}) {
            const fs::path p = data_dir / (name + ext);
            if (fs::exists(p)) return load_image(p);
        }
    }
    const auto names = synthetic_image_names();
    if (std::find(names.begin(), names.end(), name) != names.end()) return synthetic_image(name);
    throw DatasetNotFound(name);
}

json list_datasets(const fs::path& data_dir) {
    json out = json::array();
    std::set<std::string> seen;
    const fs::path& dir = data_dir;
    if (!dir.empty() && fs::is_directory(dir)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir)) {
            const auto ext = e.path().extension();
            if (e.is_regular_file() && (ext == ".pgm" || ext == ".png")) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const std::string name = f.stem().string();
            if (!valid_dataset_name(name) || seen.count(name)) continue;
            try {
                const IntensityImage img = load_image(f);
                out.push_back({{"name", name}, {"source", "file"}, {"width", img.width}, {"height", img.height}});
                seen.insert(name);
            } catch (const IngestionError&) {
            }
        }
    }
    for (const auto& name : synthetic_image_names()) {
        if (seen.count(name)) continue;
        out.push_back({{"name", name}, {"source", "builtin"}, {"width", 256}, {"height", 256}});
    }
    return out;
}

IntensityImage RunService::load_dataset(const std::string& name) const {
    return nsda::load_dataset(impl_->opts.data_dir, name);
}

json RunService::datasets() const { return list_datasets(impl_->opts.data_dir); }

std::string RunService::submit(const RunRequest& req) {
    const FieldErrors errs = validate_fields(req.params);
    if (!errs.empty()) throw ParameterError(describe(errs));
    auto rec = std::make_shared<Impl::Record>();
    rec->req = req;
    if (req.image) {
        rec->image = *req.image;
        rec->req.image.reset();
    } else {
        if (req.dataset.empty()) throw ParameterError("dataset: required (or upload an image)");
        rec->image = load_dataset(req.dataset);
    }
    if (rec->image.width != rec->image.height || rec->image.width < 16 || !is_power_of_two(rec->image.width))
        throw IngestionError("expected a square image with a power-of-two side >= 16, got " +
                             std::to_string(rec->image.width) + "x" + std::to_string(rec->image.height));
    if (req.params.march.taper_width > rec->image.width / 4)
        throw ParameterError("taper: must be <= n/4 (" + std::to_string(rec->image.width / 4) + ")");
    rec->total = 2 * req.params.march.steps;

    {
        std::unique_lock lock(impl_->mu);
        char buf[64];
        std::snprintf(buf, sizeof buf, "run-%06llu-%08llx", static_cast<unsigned long long>(++impl_->counter),
                      static_cast<unsigned long long>(impl_->id_rng() & 0xffffffffULL));
        rec->id = buf;
        rec->dir = impl_->opts.run_root / rec->id;
        impl_->runs[rec->id] = rec;
    }
    fs::create_directories(rec->dir);
    json request = {{"run_id", rec->id}, {"parameters", to_json(req.params)}};
    request["dataset"] = req.image ? json("upload") : json(req.dataset);
    write_file(rec->dir / "request.json", request.dump(2) + "\n");
    if (req.image) save_pgm(rec->image, rec->dir / "input.pgm");
    {
        std::unique_lock lock(impl_->mu);
        impl_->queue.push_back(rec->id);
    }
    impl_->queue_cv.notify_one();
    return rec->id;
}

void RunService::Impl::worker_loop() {
    for (;;) {
        std::shared_ptr<Record> rec;
        {
            std::unique_lock lock(mu);
            queue_cv.wait(lock, [&] { return stopping.load() || !queue.empty(); });
            if (stopping) return;
            rec = runs.at(queue.front());
            queue.pop_front();
            rec->status = RunStatus::running;
        }
        changed.notify_all();
        execute(rec);
        changed.notify_all();
    }
}

void RunService::Impl::flush_norms(Record& rec, bool all) {
    // Caller holds the unique lock.
    if (!all && rec.history.size() - rec.flushed < static_cast<std::size_t>(opts.flush_every)) return;
    std::string chunk;
    if (rec.flushed == 0) chunk = norms_csv_header();
    for (std::size_t k = rec.flushed; k < rec.history.size(); ++k)
        chunk += norms_csv_row(rec.history[k].first, rec.history[k].second);
    write_file(rec.dir / "norms.csv", chunk, rec.flushed == 0 ? std::ios::trunc : std::ios::app);
    rec.flushed = rec.history.size();
    rec.ready.insert("norms.csv");
}

void RunService::Impl::execute(const std::shared_ptr<Record>& rec) {
    const RunParameters& p = rec->req.params;
    auto finish = [&](RunStatus s, const std::string& kind, const std::string& msg) {
        std::unique_lock lock(mu);
        rec->status = s;
        rec->error_kind = kind;
        rec->error_message = msg;
    };
    try {
        const ScalarField psi = intensity_to_stream(rec->image, p.scale, p.march.taper_width);
        {
            const IntensityImage d = field_to_image(psi, p.export_mode);
            save_png(d, rec->dir / "desiredT.png");
            save_pgm(d, rec->dir / "desiredT.pgm");
            std::unique_lock lock(mu);
            rec->ready.insert({"desiredT.png", "desiredT.pgm"});
        }
        const ProgressFn progress = [&](const std::string& phase, const NormRow& row, int done, int total) {
            if (stopping) throw Cancelled{};
            std::unique_lock lock(mu);
            rec->step = done;
            rec->total = total;
            rec->phase = phase;
            rec->history.emplace_back(phase, row);
            flush_norms(*rec, false);
        };
        const AssimilationResult r = assimilate(psi, p.march, progress);
        {
            std::unique_lock lock(mu);
            rec->ready.erase("norms.csv");
        }
        write_assimilation_artifacts(r, rec->dir, p.export_mode);
        std::unique_lock lock(mu);
        rec->report = r.report.to_json();
        rec->flushed = rec->history.size();
        for (const auto& a : kArtifacts) rec->ready.insert(a.file);
        rec->step = rec->total;
        rec->status = RunStatus::done;
    } catch (const DivergenceError& e) {
        std::unique_lock lock(mu);
        rec->failing_step = e.step();
        const auto& part = e.partial();
        const bool backward = part && !part->norms.empty() && part->norms.front().time != 0.0;
        rec->failing_phase = backward ? "backward" : "forward";
        rec->norm_tail = e.norm_tail();
        try {
            flush_norms(*rec, true);
        } catch (const std::exception&) {
        }
        rec->status = RunStatus::diverged;
        rec->error_kind = e.kind();
        rec->error_message = e.what();
    } catch (const Cancelled&) {
        finish(RunStatus::failed, "cancelled", "service shut down during the run");
    } catch (const Error& e) {
        finish(RunStatus::failed, e.kind(), e.what());
    } catch (const std::exception& e) {
        finish(RunStatus::failed, "internal", e.what());
    }
    std::shared_lock lock(mu);
    try {
        write_file(rec->dir / "status.json", status_of(*rec).dump(2) + "\n");
    } catch (const std::exception&) {
    }
}

json RunService::Impl::status_of(const Record& r) const {
    json j;
    j["run_id"] = r.id;
    j["status"] = to_string(r.status);
    j["dataset"] = r.req.dataset.empty() ? "upload" : r.req.dataset;
    j["parameters"] = to_json(r.req.params);
    j["step"] = r.step;
    j["total"] = r.total;
    j["progress"] = r.status == RunStatus::done ? 1.0 : (r.total > 0 ? static_cast<double>(r.step) / r.total : 0.0);
    j["phase"] = r.phase;
    j["history_length"] = r.history.size();
    j["latest"] = r.history.empty() ? json(nullptr) : row_json(r.history.back().first, r.history.back().second);
    json arts = json::array();
    for (const auto& a : kArtifacts)
        if (r.ready.count(a.file) && std::string(a.name) == a.file) arts.push_back(a.name);
    j["artifacts"] = arts;
    if (!r.error_kind.empty()) j["error"] = {{"kind", r.error_kind}, {"message", r.error_message}};
    if (r.failing_step) {
        j["failing_step"] = *r.failing_step;
        j["failing_phase"] = r.failing_phase;
        j["norm_tail"] = r.norm_tail;
    }
    if (r.status == RunStatus::done) j["report"] = r.report;
    return j;
}

std::optional<json> RunService::status(const std::string& run_id) const {
    std::shared_lock lock(impl_->mu);
    const auto it = impl_->runs.find(run_id);
    if (it == impl_->runs.end()) return std::nullopt;
    return impl_->status_of(*it->second);
}

std::vector<std::string> RunService::run_ids() const {
    std::shared_lock lock(impl_->mu);
    std::vector<std::string> ids;
    for (const auto& [id, rec] : impl_->runs) ids.push_back(id);
    return ids;
}

Artifact RunService::artifact(const std::string& run_id, const std::string& name) const {
    Artifact out;
    fs::path file;
    {
        std::shared_lock lock(impl_->mu);
        const auto it = impl_->runs.find(run_id);
        if (it == impl_->runs.end()) return out;
        const ArtifactName* a = find_artifact(name);
        if (!a) {
            out.state = Artifact::State::unknown_name;
            return out;
        }
        out.content_type = a->content_type;
        if (!it->second->ready.count(a->file)) {
            out.state = Artifact::State::not_ready;
            return out;
        }
        file = it->second->dir / a->file;
        // norms.csv may be appended to by the worker; read it under the lock.
        std::ifstream in(file, std::ios::binary);
        out.bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    out.state = Artifact::State::ok;
    return out;
}

bool RunService::wait(const std::string& run_id, std::chrono::milliseconds timeout) const {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::shared_lock lock(impl_->mu);
    return impl_->changed.wait_until(lock, deadline, [&] {
        const auto it = impl_->runs.find(run_id);
        if (it == impl_->runs.end()) return true;
        const RunStatus s = it->second->status;
        return s != RunStatus::queued && s != RunStatus::running;
    });
}

RunRequest request_from_json(const json& body, FieldErrors& errors) {
    RunRequest req;
    if (!body.is_object()) {
        errors["body"] = "expected a JSON object";
        return req;
    }
    json params = json::object();
    for (const auto& [k, v] : body.items()) {
        if (k == "dataset") {
            if (v.is_string()) req.dataset = v.get<std::string>();
            else errors["dataset"] = "expected a string";
        } else if (k == "parameters") {
            if (!v.is_object()) errors["parameters"] = "expected an object";
            else
                for (const auto& [pk, pv] : v.items()) params[pk] = pv;
        } else {
            params[k] = v;
        }
    }
    apply_parameters(params, req.params, errors);
    for (auto& [k, v] : validate_fields(req.params)) errors.emplace(k, v);
    return req;
}

struct HttpFrontend::Impl {
    RunService& svc;
    httplib::Server server;
    explicit Impl(RunService& s) : svc(s) {}
};

namespace {

void send_json(httplib::Response& res, int status, const json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& msg,
                const FieldErrors* fields = nullptr) {
    json j = {{"error", kind}, {"message", msg}};
    if (fields) j["fields"] = *fields;
    send_json(res, status, j);
}

}  // namespace

HttpFrontend::HttpFrontend(RunService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    RunService& svc = impl_->svc;

    srv.Get("/api/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"ok", true}}); });

    srv.Get("/api/datasets", [&svc](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"datasets", svc.datasets()}});
    });

    srv.Post("/api/runs", [&svc](const httplib::Request& req, httplib::Response& res) {
        json body = json::object();
        std::optional<IntensityImage> image;
        try {
            if (req.is_multipart_form_data()) {
                for (const auto& [name, part] : req.files) {
                    if (name == "image") {
                        const auto* b = reinterpret_cast<const std::uint8_t*>(part.content.data());
                        image = decode_image({b, part.content.size()});
                    } else if (name == "parameters") {
                        body["parameters"] = json::parse(part.content);
                    } else if (name == "dataset") {
                        body["dataset"] = part.content;
                    } else {
                        // Plain form fields: numbers when they parse as JSON.
                        try {
                            body[name] = json::parse(part.content);
                        } catch (const json::parse_error&) {
                            body[name] = part.content;
                        }
                    }
                }
            } else {
                body = req.body.empty() ? json::object() : json::parse(req.body);
            }
        } catch (const json::parse_error& e) {
            send_error(res, 400, "parameter", std::string("malformed JSON: ") + e.what());
            return;
        } catch (const IngestionError& e) {
            send_error(res, 400, e.kind(), e.what());
            return;
        }
        FieldErrors errors;
        RunRequest rr = request_from_json(body, errors);
        if (!image && rr.dataset.empty() && !errors.count("dataset")) errors["dataset"] = "required (or upload an image)";
        if (!errors.empty()) {
            send_error(res, 400, "parameter", describe(errors), &errors);
            return;
        }
        rr.image = std::move(image);
        try {
            const std::string id = svc.submit(rr);
            send_json(res, 202, {{"run_id", id}, {"status_url", "/api/runs/" + id}});
        } catch (const DatasetNotFound& e) {
            send_error(res, 404, e.kind(), e.what());
        } catch (const Error& e) {
            send_error(res, 400, e.kind(), e.what());
        }
    });

    srv.Get("/api/runs", [&svc](const httplib::Request&, httplib::Response& res) {
        json runs = json::array();
        for (const auto& id : svc.run_ids()) {
            const auto s = svc.status(id);
            if (s) runs.push_back({{"run_id", id}, {"status", (*s)["status"]}, {"progress", (*s)["progress"]}});
        }
        send_json(res, 200, {{"runs", runs}});
    });

    srv.Get(R"(/api/runs/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        const auto s = svc.status(req.matches[1]);
        if (!s) return send_error(res, 404, "not-found", "unknown run '" + std::string(req.matches[1]) + "'");
        send_json(res, 200, *s);
    });

    srv.Get(R"(/api/runs/([^/]+)/artifacts/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const std::string name = req.matches[2];
        Artifact a = svc.artifact(id, name);
        switch (a.state) {
            case Artifact::State::unknown_run: return send_error(res, 404, "not-found", "unknown run '" + id + "'");
            case Artifact::State::unknown_name:
                return send_error(res, 404, "not-found", "unknown artifact '" + name + "'");
            case Artifact::State::not_ready:
                return send_error(res, 409, "not-ready", "artifact '" + name + "' is not ready");
            case Artifact::State::ok: break;
        }
        res.status = 200;
        res.set_content(std::string(a.bytes.begin(), a.bytes.end()), a.content_type);
    });
}

HttpFrontend::~HttpFrontend() { stop(); }

int HttpFrontend::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpFrontend::listen() { return impl_->server.listen_after_bind(); }

void HttpFrontend::stop() { impl_->server.stop(); }

}  // namespace nsda
