#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using Catch::Matchers::ContainsSubstring;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "sdd_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string config(const char* name) { return std::string(SDD_TEST_CONFIG_DIR) + "/" + name; }

/// Run the CLI with stderr captured; returns the exit code.
int run(const std::string& args, std::string* err = nullptr) {
  const auto err_path = scratch() / "stderr.txt";
  const std::string cmd = std::string(SDD_CLI) + " " + args + " 2> " + err_path.string();
  const int status = std::system(cmd.c_str());
  if (err) {
    std::ifstream in(err_path);
    std::stringstream ss;
    ss << in.rdbuf();
    *err = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

/// Write a modified copy of a shipped config.
std::string variant_of(const char* name, const std::function<void(json&)>& edit, const char* out_name) {
  std::ifstream in(config(name));
  json j = json::parse(in);
  edit(j);
  const auto path = scratch() / out_name;
  std::ofstream(path) << j.dump(2);
  return path.string();
}

}  // namespace

TEST_CASE("simulate writes one row per step after the history") {
  const auto out = scratch() / "const.csv";
  const auto res = scratch() / "const.json";
  REQUIRE(run("simulate --config " + config("constant_delay.json") + " --out " + out.string() + " --no-history --residual " +
              res.string()) == 0);
  const auto rows = lines(out);
  CHECK(rows.front() == "t,v_0");
  CHECK(rows.size() == 1 + 2001);
  const auto rep = json::parse(slurp(res));
  CHECK(rep["mild_residual"].get<double>() <= 10 * 1e-3);
  CHECK(rep["sample_times"].size() == 10);

  const auto with_hist = scratch() / "const_hist.csv";
  REQUIRE(run("simulate --config " + config("constant_delay.json") + " --out " + with_hist.string()) == 0);
  const auto hist_rows = lines(with_hist);
  CHECK(hist_rows.size() > rows.size());
  CHECK(hist_rows[1].rfind("-1,", 0) == 0);
}

TEST_CASE("simulate rejects dt larger than the horizon") {
  const auto cfg = variant_of("constant_delay.json", [](json& j) { j["solver"]["dt"] = 1.5; }, "bad_dt.json");
  std::string err;
  CHECK(run("simulate --config " + cfg + " --out " + (scratch() / "x.csv").string(), &err) == 3);
  CHECK_THAT(err, ContainsSubstring("dt exceeds delay horizon"));
  CHECK(std::count(err.begin(), err.end(), '\n') == 1);
  CHECK_FALSE(fs::exists(scratch() / "x.csv"));
}

TEST_CASE("simulate the Nicholson PDE") {
  const auto out = scratch() / "nich.csv";
  REQUIRE(run("simulate --config " + config("nicholson_pde.json") + " --out " + out.string()) == 0);
  const auto rows = lines(out);
  std::stringstream last(rows.back());
  std::string cell;
  std::size_t cells = 0;
  while (std::getline(last, cell, ',')) {
    CHECK(std::isfinite(std::stod(cell)));
    ++cells;
  }
  CHECK(cells == 65);
}

TEST_CASE("check-delay reports the nested segment") {
  const auto out = scratch() / "seg.json";
  REQUIRE(run("check-delay --config " + config("nicholson_pde.json") + " --seed 1 --out " + out.string()) == 0);
  const auto rep = json::parse(slurp(out));
  CHECK(rep["segment"]["interval"] == json::array({-1.0, -0.5}));
  CHECK(rep["ignorance"]["pass"] == true);
}

TEST_CASE("verify catches the planted violation") {
  const auto out = scratch() / "planted.json";
  REQUIRE(run("verify --config " + config("planted_opaque.json") + " --suite ignorance --seed 3 --out " + out.string()) ==
          1);
  const auto rep = json::parse(slurp(out));
  CHECK(rep["pass"] == false);
  CHECK(rep["sections"]["ignorance"]["counterexample"]["times"].size() >= 2);
}

TEST_CASE("verify requires a seed") {
  const auto cfg = variant_of("constant_delay.json", [](json& j) { j.erase("verify"); }, "no_seed.json");
  std::string err;
  CHECK(run("verify --config " + cfg + " --suite uniqueness --out -", &err) == 3);
  CHECK_THAT(err, ContainsSubstring("seed"));
  CHECK(run("verify --config " + cfg + " --suite uniqueness --seed 4 --out " + (scratch() / "u.json").string()) == 0);
}

TEST_CASE("reports are byte-identical across runs") {
  const auto a = scratch() / "a.json";
  const auto b = scratch() / "b.json";
  const std::string args = "verify --config " + config("constant_delay.json") + " --suite all --seed 8 --out ";
  REQUIRE(run(args + a.string()) == 0);
  REQUIRE(run(args + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));
  const auto rep = json::parse(slurp(a));
  CHECK(rep["well_posedness"] == "certified");
  CHECK(rep["config_hash"].get<std::string>().size() == 40);
  CHECK(rep["schema_version"] == 1);
}

TEST_CASE("attractor reports regularity estimates") {
  const auto out = scratch() / "att.json";
  REQUIRE(run("attractor --config " + config("nicholson_attractor.json") +
              " --t-long 40 --ensemble-size 2 --seed 2 --out " + out.string()) == 0);
  const auto rep = json::parse(slurp(out));
  const auto& m = rep["sections"]["regularity"]["measurements"];
  CHECK(std::isfinite(m["L0"].get<double>()));
  CHECK(std::isfinite(m["L_tilde"].get<double>()));
}

TEST_CASE("malformed input maps to exit code 3") {
  const auto broken = scratch() / "broken.json";
  std::ofstream(broken) << "{ not json";
  CHECK(run("simulate --config " + broken.string() + " --out " + (scratch() / "y.csv").string()) == 3);
  CHECK(run("verify --config " + config("constant_delay.json") + " --suite nonsense --seed 1") == 3);
}
