#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsda/imageio.hpp"
#include "nsda/params.hpp"

namespace nsda {

enum class RunStatus { queued, running, done, diverged, failed };

std::string to_string(RunStatus s);

struct RunRequest {
    RunParameters params;
    /// Bundled dataset name, used when `image` is empty.
    std::string dataset;
    std::optional<IntensityImage> image;
};

struct ServiceOptions {
    std::filesystem::path run_root = "runs";
    /// Directory of bundled .pgm / .png datasets. Built-in synthetic images
    /// are always available under their own names.
    std::filesystem::path data_dir;
    int workers = 2;
    /// Norm rows are appended to the run's norms.csv every this many steps.
    int flush_every = 100;
};

struct Artifact {
    enum class State { ok, not_ready, unknown_run, unknown_name };
    State state = State::unknown_run;
    std::string content_type;
    std::vector<std::uint8_t> bytes;
};

/// Runs assimilations on a bounded worker pool and keeps one directory per
/// run under options.run_root. Records live in memory; a new instance does
/// not pick up runs from an earlier one.
class RunService {
public:
    explicit RunService(ServiceOptions opts);
    ~RunService();
    RunService(const RunService&) = delete;
    RunService& operator=(const RunService&) = delete;

    /// Throws ParameterError (with field-level detail in the message) or
    /// IngestionError. Unknown datasets throw DatasetNotFound.
    std::string submit(const RunRequest& req);

    /// Status document, nullopt for an unknown id.
    std::optional<nlohmann::json> status(const std::string& run_id) const;
    std::vector<std::string> run_ids() const;

    Artifact artifact(const std::string& run_id, const std::string& name) const;

    /// [{name, source, width, height}]
    nlohmann::json datasets() const;
    /// Resolves a dataset to its image; throws DatasetNotFound.
    IntensityImage load_dataset(const std::string& name) const;

    /// Blocks until the run leaves queued/running or the timeout passes.
    bool wait(const std::string& run_id, std::chrono::milliseconds timeout) const;

    const ServiceOptions& options() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class DatasetNotFound : public Error {
public:
    explicit DatasetNotFound(const std::string& name) : Error("not-found", "unknown dataset '" + name + "'") {}
};

/// Files named <name>.pgm / <name>.png in data_dir, then the built-in
/// synthetic images. [{name, source, width, height}]
nlohmann::json list_datasets(const std::filesystem::path& data_dir);
/// Throws DatasetNotFound.
IntensityImage load_dataset(const std::filesystem::path& data_dir, const std::string& name);

/// Parses field errors out of a submission body and builds a request.
/// `body` is {"dataset": name, "parameters": {...}}; parameter keys may also
/// sit at top level.
RunRequest request_from_json(const nlohmann::json& body, FieldErrors& errors);

/// HTTP front end:
///   POST /api/runs                       -> 202 {"run_id"}
///   GET  /api/runs                       -> {"runs": [...]}
///   GET  /api/runs/{id}                  -> status document
///   GET  /api/runs/{id}/artifacts/{name} -> bytes (409 while not ready)
///   GET  /api/datasets                   -> bundled images
///   GET  /api/health
class HttpFrontend {
public:
    explicit HttpFrontend(RunService& service);
    ~HttpFrontend();

    /// Returns the bound port (0 chooses a free one), or -1 on failure.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace nsda
