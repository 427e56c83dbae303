#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  std::string cmd = std::string(POSEDIST_CLI) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + 1)) ++n;
  return n;
}

fs::path workdir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "posedist_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("build-model validates its inputs") {
  auto d = workdir();
  {
    std::ofstream(d / "bad_sym.json") << R"({"kind": "discrete", "axis": [0, 0, 1], "order": 0})";
  }
  CHECK(run("build-model --object hex_prism --max-points 0 --out " + (d / "x.pdm").string()) == 2);
  CHECK(run("build-model --object no_such_object --out " + (d / "x.pdm").string()) == 2);
  CHECK(run("build-model --mesh missing.ply --symmetry " + (d / "bad_sym.json").string() + " --out " +
            (d / "x.pdm").string()) == 4);
  CHECK(run("build-model --out " + (d / "x.pdm").string()) == 2);

  // A PLY of a bundled mesh plus an invalid symmetry is a validation error.
  CHECK(run("build-model --object hex_prism --max-points 2000 --seed 3 --out " + (d / "a.pdm").string()) == 0);
  CHECK(run("build-model --object hex_prism --max-points 2000 --seed 3 --out " + (d / "b.pdm").string()) == 0);
  CHECK(slurp(d / "a.pdm") == slurp(d / "b.pdm"));
}

TEST_CASE("run is deterministic and writes every artifact") {
  auto d = workdir() / "hex";
  REQUIRE(run("init --object hex_prism --max-points 20000 --seed 2 --dir " + d.string()) == 0);
  REQUIRE(run("run " + (d / "manifest.json").string() + " --output-dir " + (d / "r1").string()) == 0);
  REQUIRE(run("run " + (d / "manifest.json").string() + " --threads 3 --output-dir " + (d / "r2").string()) == 0);
  for (auto name : {"distribution.json", "pr_report.json", "pr_curves.csv", "gt_set.json", "mollweide.svg"}) {
    CHECK(fs::exists(d / "r1" / name));
    CHECK(slurp(d / "r1" / name) == slurp(d / "r2" / name));
  }
  auto dist = nlohmann::json::parse(slurp(d / "r1" / "distribution.json"));
  CHECK(dist["status"] == "ok");
  CHECK(dist["poses"].size() >= 6);
  auto hash = dist["manifest_hash"].get<std::string>();
  CHECK(slurp(d / "r1" / "mollweide.svg").find(hash) != std::string::npos);
  CHECK(slurp(d / "r1" / "pr_curves.csv").find(hash) != std::string::npos);
  CHECK(count(slurp(d / "r1" / "mollweide.svg"), "stroke-width") == 1);

  REQUIRE(run("run " + (d / "manifest.json").string() + " --tau-score 0.95 --output-dir " + (d / "r3").string()) == 0);
  auto other = nlohmann::json::parse(slurp(d / "r3" / "distribution.json"));
  CHECK(other["manifest_hash"] != dist["manifest_hash"]);

  REQUIRE(run("run " + (d / "manifest.json").string() + " --dump-stages --output-dir " + (d / "r4").string()) == 0);
  auto circles = [&](const char* f) { return count(slurp(d / "r4" / f), "<circle"); };
  CHECK(circles("stage_initial.svg") >= circles("stage_pruned.svg"));
  CHECK(circles("stage_pruned.svg") >= circles("stage_final.svg"));
}

TEST_CASE("error exit codes") {
  auto d = workdir() / "hex";
  CHECK(run("run " + (d / "no_manifest.json").string()) == 4);
  CHECK(run("run " + (d / "manifest.json").string() + " --k 12 --output-dir " + (d / "rk").string()) == 2);
  CHECK(run("run " + (d / "manifest.json").string() + " --tau-dens 1000000000 --output-dir " + (d / "rn").string()) ==
        3);
  auto svg = slurp(d / "rn" / "mollweide.svg");
  CHECK(svg.find("NoPoseFound") != std::string::npos);
  CHECK(run("sweep " + (d / "manifest.json").string() + " --axis beta --values 1") == 2);
  CHECK(run("no-such-command") == 2);
}

TEST_CASE("single-value sweep matches run") {
  auto d = workdir() / "hex";
  REQUIRE(run("sweep " + (d / "manifest.json").string() + " --axis tau_score --values 0.9 --output-dir " +
              (d / "s").string()) == 0);
  auto csv = slurp(d / "s" / "sweep_tau_score.csv");
  auto pr = nlohmann::json::parse(slurp(d / "r1" / "pr_report.json"));
  auto dist = nlohmann::json::parse(slurp(d / "r1" / "distribution.json"));
  std::istringstream rows(csv);
  std::string header, line;
  std::getline(rows, header);
  std::getline(rows, line);
  std::vector<std::string> cells;
  std::stringstream ls(line);
  for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
  REQUIRE(cells.size() == 10);
  CHECK(std::stoul(cells[1]) == dist["poses"].size());
  CHECK(std::stod(cells[5]) == pr["precision_msd"].get<double>());
  CHECK(std::stod(cells[6]) == pr["recall_msd"].get<double>());
  CHECK(cells[9] == dist["manifest_hash"].get<std::string>());
}

TEST_CASE("losses and gt-set commands") {
  auto d = workdir() / "hex";
  CHECK(run("losses --model " + (d / "model.pdm").string() + " --renders 2 --seed 4") == 0);
  CHECK(run("gt-set --model " + (d / "model.pdm").string() + " --scenario " + (d / "scenario.json").string() +
            " --occlusion-aware") == 0);
}
