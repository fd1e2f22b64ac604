// Drives the pcaplab binary: golden CSVs for the shipped configs and exit codes.

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = PCAP_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("pcaplab_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int pcaplab(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PCAPLAB_EXE) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Csv read_csv(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE_MESSAGE(in, p.string());
  Csv c;
  std::string line;
  std::getline(in, line);
  std::stringstream h(line);
  for (std::string cell; std::getline(h, cell, ',');) c.header.push_back(cell);
  while (std::getline(in, line)) {
    std::stringstream r(line);
    std::vector<double> row;
    for (std::string cell; std::getline(r, cell, ',');) row.push_back(std::stod(cell));
    c.rows.push_back(row);
  }
  return c;
}

std::vector<double> column(const Csv& c, const std::string& name) {
  const auto it = std::find(c.header.begin(), c.header.end(), name);
  REQUIRE(it != c.header.end());
  std::vector<double> out;
  for (const auto& r : c.rows) out.push_back(r.at(static_cast<std::size_t>(it - c.header.begin())));
  return out;
}

void compare_golden(const fs::path& out_dir, const std::string& experiment) {
  for (const auto& entry : fs::directory_iterator(kRoot / "tests/golden" / experiment)) {
    const auto got = read_csv(out_dir / experiment / entry.path().filename());
    const auto want = read_csv(entry.path());
    CHECK(got.header == want.header);
    REQUIRE(got.rows.size() == want.rows.size());
    for (std::size_t i = 0; i < want.rows.size(); ++i)
      for (std::size_t k = 0; k < want.rows[i].size(); ++k)
        CHECK_MESSAGE(std::abs(got.rows[i][k] - want.rows[i][k]) <= 1e-9 * (1 + std::abs(want.rows[i][k])),
                      entry.path().filename().string() << " row " << i << " col " << want.header[k]);
  }
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  std::ofstream(dir / name) << text;
  return dir / name;
}

}  // namespace

TEST_CASE("golden: Euclidean F_p and G_p") {
  const auto out = scratch("euclid");
  CHECK(pcaplab("run " + (kRoot / "configs/euclidean_fp.json").string() + " --out " + out.string(),
                out / "log") == 0);
  compare_golden(out, "euclidean_fp");
  for (double v : column(read_csv(out / "euclidean_fp/euclidean_p2_a2_F_p.csv"), "value"))
    CHECK(std::abs(v + 2 * std::numbers::pi) < 1e-8);
  const auto report = nlohmann::json::parse(slurp(out / "euclidean_fp/report.json"));
  CHECK(report["experiment"] == "euclidean_fp");
  CHECK(report["environment"]["seed"] == 0);
  for (const auto& c : report["checks"]) CHECK(c["verdict"] == "pass");
  CHECK(slurp(out / "summary.txt").find("euclidean_fp: 3 checks, 0 failed") != std::string::npos);
}

TEST_CASE("golden: Schwarzschild Hawking mass") {
  const auto out = scratch("schw");
  CHECK(pcaplab("--jobs 2 run " + (kRoot / "configs/schwarzschild_geroch.json").string() + " --out " +
                    out.string(),
                out / "log") == 0);
  compare_golden(out, "schwarzschild_geroch");
  for (double m : column(read_csv(out / "schwarzschild_geroch/schwarzschild1_hawking.csv"), "m_H"))
    CHECK(std::abs(m - 1.0) < 1e-9);
}

TEST_CASE("parallel runs write the same bytes as serial runs") {
  const auto dir = scratch("jobs");
  const auto cfg = write(dir, "multi.json", R"({"experiments": [
    {"experiment": "a", "model": {"id": "cone", "aperture": 0.5}, "p": 1.5, "levels": {"count": 6}},
    {"experiment": "b", "model": {"id": "schwarzschild"}, "r0": 3, "p": 1.5, "levels": {"count": 6}},
    {"experiment": "c", "suite": "equality", "p": 1.2, "alpha": 1, "levels": {"count": 6}}]})");
  CHECK(pcaplab("run " + cfg.string() + " --out " + (dir / "s").string(), dir / "log1") == 0);
  CHECK(pcaplab("run " + cfg.string() + " --jobs 3 --out " + (dir / "p").string(), dir / "log2") == 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "s")) {
    if (!e.is_regular_file()) continue;
    ++files;
    CHECK_MESSAGE(slurp(e.path()) == slurp(dir / "p" / fs::relative(e.path(), dir / "s")), e.path().string());
  }
  CHECK(files >= 7);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  SUBCASE("missing file") { CHECK(pcaplab("run " + (dir / "none.json").string(), dir / "log") == 64); }
  SUBCASE("no subcommand") { CHECK(pcaplab("", dir / "log") == 64); }
  SUBCASE("bad option") { CHECK(pcaplab("--jobs 0 list-models", dir / "log") == 64); }
  SUBCASE("malformed JSON names the line") {
    const auto cfg = write(dir, "bad.json", "{\n\"experiment\": \"x\",\n\"p\": [1.5,\n}\n");
    CHECK(pcaplab("run " + cfg.string(), dir / "log") == 64);
    CHECK(slurp(dir / "log").find("line 4") != std::string::npos);
  }
  SUBCASE("unknown key names the field") {
    const auto cfg = write(dir, "key.json", R"({"experiment": "x", "model": {"id": "euclidean", "radius": 2}})");
    CHECK(pcaplab("run " + cfg.string(), dir / "log") == 64);
    CHECK(slurp(dir / "log").find("model.radius: unknown key") != std::string::npos);
  }
  SUBCASE("a failing check") {
    const auto cfg = write(dir, "fail.json", R"({"experiment": "x", "suite": "eps_to_0", "R": 4,
      "p": 1.5, "eps": [0.01, 0.005], "tolerances": {"eps_sup": 1e-12}})");
    CHECK(pcaplab("run " + cfg.string() + " --out " + (dir / "o").string(), dir / "log") == 1);
    CHECK(fs::exists(dir / "o/x/report.json"));
  }
  SUBCASE("a solver error") {
    // the inner boundary sits inside the horizon
    const auto cfg = write(dir, "solver.json",
                           R"({"experiment": "x", "model": {"id": "schwarzschild"}, "r0": 1.5, "p": 1.5})");
    CHECK(pcaplab("run " + cfg.string() + " --out " + (dir / "o").string(), dir / "log") == 2);
    CHECK(slurp(dir / "log").find("solver error") != std::string::npos);
  }
}

TEST_CASE("list-models") {
  const auto dir = scratch("list");
  CHECK(pcaplab("list-models", dir / "plain") == 0);
  const auto text = slurp(dir / "plain");
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  for (const char* id : {"euclidean", "cone", "schwarzschild", "tabulated"}) CHECK(text.find(id) != std::string::npos);
  CHECK(pcaplab("list-models --json --verbose", dir / "json") == 0);
  const auto arr = nlohmann::json::parse(slurp(dir / "json"));
  REQUIRE(arr.is_array());
  CHECK(arr.size() == 4);
  CHECK(arr[0]["avr"] == 1.0);
  CHECK(arr[3]["r_min"].is_null());
}
