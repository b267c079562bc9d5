#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <thread>

#include <unistd.h>

#include <httplib.h>

#include "nsda/service.hpp"
#include "nsda/workflow.hpp"

using namespace nsda;
using nlohmann::json;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("nsda_service_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RunRequest small_request(double gamma = 5e-8, int steps = 20) {
    RunRequest r;
    r.image = synthetic_image("storm", 64);
    r.params.march.t_final = 2e-5;
    r.params.march.steps = steps;
    r.params.march.gamma = gamma;
    return r;
}

json reference_report(const RunRequest& r) {
    const ScalarField psi = intensity_to_stream(*r.image, r.params.scale, r.params.march.taper_width);
    return assimilate(psi, r.params.march).report.to_json();
}

std::string body_of(const Artifact& a) { return {a.bytes.begin(), a.bytes.end()}; }

}  // namespace

TEST_CASE("request parsing reports field-level errors") {
    FieldErrors e;
    RunRequest r = request_from_json({{"dataset", "storm"}, {"parameters", {{"gamma", 1e-7}, {"steps", 40}}}}, e);
    CHECK(e.empty());
    CHECK(r.dataset == "storm");
    CHECK(r.params.march.gamma == 1e-7);
    CHECK(r.params.march.steps == 40);

    e.clear();
    request_from_json({{"gamma", -1.0}, {"steps", "many"}, {"colour", 3}, {"eta", 0.5}}, e);
    CHECK(e.count("gamma"));
    CHECK(e.count("steps"));
    CHECK(e.count("colour"));
    CHECK(e.count("eta"));
    CHECK(e["steps"] == "expected an integer");

    e.clear();
    request_from_json({{"export", "log"}}, e);
    CHECK(e.count("export"));
    e.clear();
    request_from_json(json::array(), e);
    CHECK(e.count("body"));
}

TEST_CASE("datasets") {
    TempDir data("data");
    save_pgm(IntensityImage(32, 32, 9), data.path / "tiny.pgm");
    TempDir runs("runs_ds");
    RunService svc({runs.path, data.path, 1, 100});
    const json ds = svc.datasets();
    REQUIRE(ds.is_array());
    CHECK(ds[0]["name"] == "tiny");
    CHECK(ds[0]["source"] == "file");
    CHECK(ds[0]["width"] == 32);
    bool has_usaf = false;
    for (const auto& d : ds) has_usaf = has_usaf || d["name"] == "usaf_chart";
    CHECK(has_usaf);
    CHECK(svc.load_dataset("tiny") == IntensityImage(32, 32, 9));
    CHECK_THROWS_AS(svc.load_dataset("missing"), DatasetNotFound);
    CHECK_THROWS_AS(svc.load_dataset("../etc/passwd"), DatasetNotFound);
}

TEST_CASE("submission validation") {
    TempDir runs("runs_val");
    RunService svc({runs.path, {}, 1, 100});
    RunRequest bad = small_request(-1.0);
    CHECK_THROWS_AS(svc.submit(bad), ParameterError);
    RunRequest none = small_request();
    none.image.reset();
    CHECK_THROWS_AS(svc.submit(none), ParameterError);
    none.dataset = "nope";
    CHECK_THROWS_AS(svc.submit(none), DatasetNotFound);
    RunRequest odd = small_request();
    odd.image = IntensityImage(48, 48);
    CHECK_THROWS_AS(svc.submit(odd), IngestionError);
    CHECK_FALSE(svc.status("run-unknown").has_value());
    CHECK(svc.artifact("run-unknown", "report").state == Artifact::State::unknown_run);
}

TEST_CASE("run lifecycle, artifacts and determinism") {
    TempDir runs("runs_life");
    RunService svc({runs.path, {}, 2, 5});
    const RunRequest req = small_request();
    const std::string a = svc.submit(req);
    const std::string b = svc.submit(req);
    CHECK(a != b);

    const json early = *svc.status(a);
    CHECK((early["status"] == "queued" || early["status"] == "running" || early["status"] == "done"));

    REQUIRE(svc.wait(a, 60s));
    REQUIRE(svc.wait(b, 60s));
    const json sa = *svc.status(a);
    const json sb = *svc.status(b);
    CHECK(sa["status"] == "done");
    CHECK(sa["progress"] == 1.0);
    CHECK(sa["step"] == 40);
    CHECK(sa["latest"]["phase"] == "forward");
    CHECK(sa["report"] == sb["report"]);
    CHECK(sa["report"] == reference_report(req));

    const Artifact rep = svc.artifact(a, "report");
    REQUIRE(rep.state == Artifact::State::ok);
    CHECK(rep.content_type == "application/json");
    CHECK(json::parse(body_of(rep)) == sa["report"]);
    const Artifact img = svc.artifact(a, "evolvedT.png");
    REQUIRE(img.state == Artifact::State::ok);
    CHECK(decode_image(img.bytes).width == 64);
    const Artifact norms = svc.artifact(a, "norms");
    REQUIRE(norms.state == Artifact::State::ok);
    const std::string csv = body_of(norms);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 21);
    CHECK(svc.artifact(a, "secrets.txt").state == Artifact::State::unknown_name);
    CHECK(fs::exists(runs.path / a / "status.json"));
    CHECK(fs::exists(runs.path / a / "request.json"));
}

TEST_CASE("concurrent runs do not interleave state") {
    TempDir runs("runs_conc");
    RunService svc({runs.path, {}, 2, 100});
    const RunRequest r1 = small_request(5e-8, 30);
    const RunRequest r2 = small_request(1e-6, 30);
    const std::string a = svc.submit(r1);
    const std::string b = svc.submit(r2);
    REQUIRE(svc.wait(a, 60s));
    REQUIRE(svc.wait(b, 60s));
    CHECK((*svc.status(a))["report"] == reference_report(r1));
    CHECK((*svc.status(b))["report"] == reference_report(r2));
    CHECK((*svc.status(a))["report"] != (*svc.status(b))["report"]);
}

TEST_CASE("diverged run") {
    TempDir runs("runs_div");
    RunService svc({runs.path, {}, 1, 3});
    RunRequest r = small_request(0.0, 20);
    r.params.march.blowup_threshold = 1.0;
    const std::string id = svc.submit(r);
    REQUIRE(svc.wait(id, 60s));
    const json s = *svc.status(id);
    CHECK(s["status"] == "diverged");
    CHECK(s["failing_step"] == 1);
    CHECK(s["failing_phase"] == "backward");
    CHECK(s["error"]["kind"] == "divergence");
    CHECK_FALSE(s["norm_tail"].empty());
    CHECK(svc.artifact(id, "report").state == Artifact::State::not_ready);
    CHECK(svc.artifact(id, "evolvedT").state == Artifact::State::not_ready);
    CHECK(svc.artifact(id, "desiredT").state == Artifact::State::ok);
}

TEST_CASE("queued run artifacts are not ready") {
    TempDir runs("runs_queue");
    std::string second;
    {
        RunService svc({runs.path, {}, 1, 100});
        svc.submit(small_request(5e-8, 4000));
        second = svc.submit(small_request());
        CHECK((*svc.status(second))["status"] == "queued");
        CHECK(svc.artifact(second, "evolvedT").state == Artifact::State::not_ready);
        CHECK(svc.artifact(second, "report.json").state == Artifact::State::not_ready);
    }
    // Shutdown cancels the running march and never writes the queued run's report.
    CHECK_FALSE(fs::exists(runs.path / second / "report.json"));
}

TEST_CASE("http front end") {
    TempDir runs("runs_http");
    RunService svc({runs.path, {}, 2, 100});
    HttpFrontend http(svc);
    const int port = http.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread server([&] { http.listen(); });
    httplib::Client cli("127.0.0.1", port);
    cli.set_read_timeout(30, 0);
    for (int k = 0; k < 100 && !cli.Get("/api/health"); ++k) std::this_thread::sleep_for(10ms);

    auto health = cli.Get("/api/health");
    REQUIRE(health);
    CHECK(health->status == 200);

    auto ds = cli.Get("/api/datasets");
    REQUIRE(ds);
    CHECK(json::parse(ds->body)["datasets"].size() >= 4);

    auto missing = cli.Post("/api/runs", R"({"dataset": "nope"})", "application/json");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    auto bad = cli.Post("/api/runs", R"({"dataset": "storm", "parameters": {"gamma": -1}})", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body)["fields"].contains("gamma"));

    auto junk = cli.Post("/api/runs", "{not json", "application/json");
    REQUIRE(junk);
    CHECK(junk->status == 400);

    auto empty = cli.Post("/api/runs", "{}", "application/json");
    REQUIRE(empty);
    CHECK(empty->status == 400);
    CHECK(json::parse(empty->body)["fields"].contains("dataset"));

    const auto pgm = encode_pgm(synthetic_image("storm", 64));
    httplib::MultipartFormDataItems items = {
        {"image", std::string(pgm.begin(), pgm.end()), "storm.pgm", "image/x-portable-graymap"},
        {"parameters", R"({"T": 2e-5, "steps": 20})", "", ""},
        {"gamma", "5e-8", "", ""},
    };
    auto posted = cli.Post("/api/runs", items);
    REQUIRE(posted);
    CHECK(posted->status == 202);
    const std::string id = json::parse(posted->body)["run_id"];

    REQUIRE(svc.wait(id, 60s));
    auto st = cli.Get("/api/runs/" + id);
    REQUIRE(st);
    CHECK(st->status == 200);
    const json sj = json::parse(st->body);
    CHECK(sj["status"] == "done");
    CHECK(sj["report"] == reference_report(small_request()));

    auto rep = cli.Get("/api/runs/" + id + "/artifacts/report");
    REQUIRE(rep);
    CHECK(rep->status == 200);
    CHECK(json::parse(rep->body) == sj["report"]);
    auto png = cli.Get("/api/runs/" + id + "/artifacts/computed0.png");
    REQUIRE(png);
    CHECK(png->status == 200);
    CHECK(png->get_header_value("Content-Type") == "image/png");
    CHECK(png->body.substr(1, 3) == "PNG");
    auto nope = cli.Get("/api/runs/" + id + "/artifacts/nothing");
    REQUIRE(nope);
    CHECK(nope->status == 404);
    auto unknown = cli.Get("/api/runs/run-000000-00000000");
    REQUIRE(unknown);
    CHECK(unknown->status == 404);
    auto list = cli.Get("/api/runs");
    REQUIRE(list);
    CHECK(json::parse(list->body)["runs"].size() == 1);

    http.stop();
    server.join();
}
