#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "edvcm/commands.hpp"
#include "edvcm/dataset_csv.hpp"
#include "edvcm/simulate.hpp"

using namespace edvcm;
namespace fs = std::filesystem;

namespace {

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"edvcm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path root = fs::temp_directory_path() / "edvcm_cli_tests" / name;
  fs::remove_all(root);
  fs::create_directories(root);
  return root;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

long count_lines(const std::string& text) {
  long n = 0;
  for (char c : text) {
    if (c == '\n') ++n;
  }
  return n;
}

// Exposures, outcomes, and config for one cleanly matchable 2-day event.
void write_match_fixture(const fs::path& dir) {
  write_file(dir / "expo.csv", "area_id,start_date,duration\nA,2009-07-01,2\n");
  std::string outc = "area_id,date,count,person_time\n";
  for (const char* year : {"2008", "2009", "2010"}) {
    outc += "A," + std::string(year) + "-07-01,3,1\n";
    outc += "A," + std::string(year) + "-07-02,1,1\n";
  }
  write_file(dir / "outc.csv", outc);
  write_file(dir / "match.json", "{\"n_control_years\": 2}\n");
}

fs::path write_fit_dataset(const fs::path& dir) {
  LayoutSpec layout;
  layout.events_per_duration = {5, 4, 3};
  layout.baseline_rate = 3.0;
  ParameterSet truth = make_parameter_set(3, 0, 0);
  truth.beta(2, 1) = 0.3;
  const AnalyticDataset data = simulate_dataset(layout, truth, 99);
  const fs::path path = dir / "data.csv";
  write_dataset_csv(data, path.string(), "fixture");
  return path;
}

}  // namespace

TEST_CASE("bad invocations exit with the input-error code") {
  CHECK(run({}) == 2);
  CHECK(run({"frobnicate"}) == 2);
  CHECK(run({"fit"}) == 2);  // --data and --out are required
  CHECK(run({"--version"}) == 0);
}

TEST_CASE("match builds a dataset file and a report next to it") {
  const fs::path dir = fresh_dir("match");
  write_match_fixture(dir);
  const fs::path out = dir / "matched.csv";

  CHECK(run({"match", "--exposures", (dir / "expo.csv").string(), "--outcomes",
             (dir / "outc.csv").string(), "--config", (dir / "match.json").string(),
             "--out", out.string()}) == 0);

  REQUIRE(fs::exists(out));
  REQUIRE(fs::exists(dir / "matched.report.csv"));
  const AnalyticDataset data = read_dataset_csv(out.string());
  CHECK(data.strata.size() == 1);
  CHECK(data.strata[0].units.size() == 6);
  CHECK(data.max_duration == 2);

  const std::string report = slurp(dir / "matched.report.csv");
  CHECK(report.rfind("# edvcm", 0) == 0);
  CHECK(count_lines(report) == 2);  // stamp and header, no exclusions
}

TEST_CASE("match rejects unknown config keys and missing files") {
  const fs::path dir = fresh_dir("match_bad");
  write_match_fixture(dir);
  write_file(dir / "bad.json", "{\"bogus\": 1}\n");

  CHECK(run({"match", "--exposures", (dir / "expo.csv").string(), "--outcomes",
             (dir / "outc.csv").string(), "--config", (dir / "bad.json").string(),
             "--out", (dir / "o.csv").string()}) == 2);
  CHECK(run({"match", "--exposures", (dir / "absent.csv").string(), "--outcomes",
             (dir / "outc.csv").string(), "--config", (dir / "match.json").string(),
             "--out", (dir / "o.csv").string()}) == 2);
}

TEST_CASE("report paths derive from the dataset path") {
  CHECK(match_report_path("data.csv") == "data.report.csv");
  CHECK(match_report_path("out/data") == "out/data.report.csv");
}

TEST_CASE("fit writes the four outputs reproducibly") {
  const fs::path dir = fresh_dir("fit");
  const fs::path data = write_fit_dataset(dir);
  const std::vector<std::string> base{
      "fit",   "--data",    data.string(), "--chains", "2",  "--warmup",
      "60",    "--samples", "50",          "--seed",   "7"};

  auto with_out = [&](const std::string& out, const std::string& jobs) {
    std::vector<std::string> args = base;
    if (!jobs.empty()) {
      args.push_back("--jobs");
      args.push_back(jobs);
    }
    args.push_back("--out");
    args.push_back(out);
    return args;
  };

  CHECK(run(with_out((dir / "a").string(), "")) == 0);
  for (const char* f : {"draws.csv", "summary.csv", "cumulative.csv", "diagnostics.csv"}) {
    CHECK(fs::exists(dir / "a" / f));
  }

  const std::string draws = slurp(dir / "a" / "draws.csv");
  CHECK(draws.rfind("# edvcm", 0) == 0);
  CHECK(count_lines(draws) == 2 + 2 * 50);  // stamp, header, chains x samples

  const std::string cumulative = slurp(dir / "a" / "cumulative.csv");
  CHECK(cumulative.find("d,mean,ci_lo,ci_hi") != std::string::npos);
  CHECK(cumulative.find("\n1,") != std::string::npos);
  CHECK(cumulative.find("\n3,") != std::string::npos);

  // Same seed, fresh directory: byte-identical outputs.
  CHECK(run(with_out((dir / "b").string(), "")) == 0);
  // More workers than chains: still byte-identical.
  CHECK(run(with_out((dir / "c").string(), "3")) == 0);
  for (const char* f : {"draws.csv", "summary.csv", "cumulative.csv", "diagnostics.csv"}) {
    CHECK(slurp(dir / "b" / f) == slurp(dir / "a" / f));
    CHECK(slurp(dir / "c" / f) == slurp(dir / "a" / f));
  }
}

TEST_CASE("fit resolves priors from presets and files") {
  const fs::path dir = fresh_dir("fit_priors");
  const fs::path data = write_fit_dataset(dir);

  write_file(dir / "priors.json",
             "{\"beta\": {\"sd\": {\"family\": \"lognormal\", \"location\": 0, "
             "\"scale\": 0.5}}, \"zeta_sd\": 5.0}\n");
  CHECK(run({"fit", "--data", data.string(), "--priors", (dir / "priors.json").string(),
             "--chains", "1", "--warmup", "30", "--samples", "20", "--out",
             (dir / "ok").string()}) == 0);

  write_file(dir / "bad_priors.json",
             "{\"beta\": {\"sd\": {\"family\": \"gamma\", \"scale\": 1}}}\n");
  CHECK(run({"fit", "--data", data.string(), "--priors",
             (dir / "bad_priors.json").string(), "--chains", "1", "--warmup", "30",
             "--samples", "20", "--out", (dir / "bad").string()}) == 2);

  CHECK(run({"fit", "--data", data.string(), "--priors", "mystery", "--chains", "1",
             "--warmup", "30", "--samples", "20", "--out", (dir / "m").string()}) == 2);
  CHECK(run({"fit", "--data", (dir / "absent.csv").string(), "--out",
             (dir / "n").string()}) == 2);
}

TEST_CASE("an unwritable output directory is a runtime failure") {
  const fs::path dir = fresh_dir("fit_blocked");
  const fs::path data = write_fit_dataset(dir);
  write_file(dir / "blocker", "not a directory\n");
  CHECK(run({"fit", "--data", data.string(), "--chains", "1", "--warmup", "20",
             "--samples", "10", "--out", (dir / "blocker" / "sub").string()}) == 3);
}

TEST_CASE("simulate runs a protocol file deterministically") {
  const fs::path dir = fresh_dir("simulate");
  write_file(dir / "protocol.json", R"({
  "label": "toy",
  "max_duration": 2,
  "events_per_duration": [3, 2],
  "baseline_rate": 3.0,
  "methods": ["edvcm", "freq-glm"],
  "n_sim": 2,
  "seed": 5,
  "sampler": {"chains": 1, "warmup": 40, "samples": 40, "max_leapfrog_steps": 8}
})");

  const auto args = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> a{"simulate", "--protocol", (dir / "protocol.json").string()};
    for (auto& e : extra) a.push_back(std::move(e));
    a.push_back("--out");
    a.push_back(out);
    return a;
  };

  CHECK(run(args((dir / "a").string(), {})) == 0);
  REQUIRE(fs::exists(dir / "a" / "report.csv"));
  REQUIRE(fs::exists(dir / "a" / "provenance.json"));

  const auto provenance = nlohmann::json::parse(slurp(dir / "a" / "provenance.json"));
  CHECK(provenance.at("n_replicates").get<long>() == 2);
  CHECK(provenance.at("config_hash").get<std::string>().size() == 16);
  CHECK(provenance.at("n_failures").get<long>() == 0);

  const std::string report = slurp(dir / "a" / "report.csv");
  CHECK(report.rfind("# edvcm", 0) == 0);
  CHECK(report.find("method,param,d,t,metric,value") != std::string::npos);
  CHECK(report.find("edvcm,beta,1,1,rmse,") != std::string::npos);
  CHECK(report.find("freq-glm,beta,2,2,coverage,") != std::string::npos);

  CHECK(run(args((dir / "b").string(), {})) == 0);
  CHECK(slurp(dir / "b" / "report.csv") == report);
  CHECK(run(args((dir / "c").string(), {"--jobs", "3"})) == 0);
  CHECK(slurp(dir / "c" / "report.csv") == report);

  CHECK(run(args((dir / "d").string(), {"--nsim", "1"})) == 0);
  const auto pd = nlohmann::json::parse(slurp(dir / "d" / "provenance.json"));
  CHECK(pd.at("n_replicates").get<long>() == 1);
}

TEST_CASE("simulate validates protocols and preset names") {
  const fs::path dir = fresh_dir("simulate_bad");
  CHECK(run({"simulate", "--protocol", "no-such-preset", "--out",
             (dir / "o").string()}) == 2);

  write_file(dir / "unknown_key.json",
             "{\"max_duration\": 2, \"events_first\": 3, \"frobs\": 1}\n");
  CHECK(run({"simulate", "--protocol", (dir / "unknown_key.json").string(), "--out",
             (dir / "o").string()}) == 2);

  write_file(dir / "both_layouts.json",
             "{\"max_duration\": 2, \"events_first\": 3, "
             "\"events_per_duration\": [1, 1]}\n");
  CHECK(run({"simulate", "--protocol", (dir / "both_layouts.json").string(), "--out",
             (dir / "o").string()}) == 2);

  write_file(dir / "bad_method.json",
             "{\"max_duration\": 2, \"events_first\": 3, \"n_sim\": 1, "
             "\"methods\": [\"psychic\"]}\n");
  CHECK(run({"simulate", "--protocol", (dir / "bad_method.json").string(), "--out",
             (dir / "o").string()}) == 2);
}
