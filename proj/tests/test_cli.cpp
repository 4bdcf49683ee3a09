#include "rdsym/cli.hpp"
#include "rdsym/config.hpp"
#include "rdsym/errors.hpp"
#include "rdsym/io.hpp"
#include "rdsym/symmetry.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace rdsym;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const fs::path kRoot = fs::temp_directory_path() / ("rdsym_cli_" + std::to_string(::getpid()));

struct Cleanup {
  ~Cleanup() { fs::remove_all(kRoot); }
} cleanup;

fs::path scratch(const std::string& name) {
  auto p = kRoot / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

int count_lines(const std::string& text, const std::string& needle) {
  int n = 0;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) n += line.find(needle) != std::string::npos;
  return n;
}

}  // namespace

TEST_CASE("verify-case exit codes") {
  auto dir = scratch("vc");
  auto ok = run({"verify-case", "--case", "2", "--params", "d1=1,d2=2,d3=0.5", "--samples", "200", "--tol", "1e-9",
                 "--out", dir.string()});
  CHECK(ok.code == 0);
  auto rep = read_json(dir / "report.json");
  REQUIRE(rep["reports"].size() == 1);
  CHECK(rep["reports"][0]["children"].size() == 2);
  CHECK(rep["reports"][0]["pass"] == true);
  CHECK(rep["reports"][0]["params_exact"]["d3"] == "1/2");
  auto man = read_json(dir / "manifest.json");
  CHECK(man["seed"].is_number());
  CHECK(man["tol"] == 1e-9);
  CHECK(man["params"]["d1"] == "1");

  auto bad = run({"verify-case", "--case", "2", "--params", "d1=1,d2=1,d3=0.5", "--out", dir.string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("d1 ≠ d2") != std::string::npos);

  CHECK(run({"verify-case", "--out", dir.string()}).code == 2);
  CHECK(run({"verify-case", "--case", "2", "--params", "d1=", "--out", dir.string()}).code == 2);
  CHECK(run({"no-such-verb"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  auto help = run({"simulate", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("--max-error") != std::string::npos);
}

TEST_CASE("full suite renders thirteen PASS lines") {
  auto dir = scratch("all");
  auto r = run({"verify-case", "--all", "--samples", "50", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(count_lines(r.out, "PASS") == 13);
  CHECK(count_lines(r.out, "FAIL") == 0);
}

TEST_CASE("render with an injected perturbed operator") {
  std::vector<Report> reports;
  std::mt19937_64 rng(1);
  for (int id = 1; id <= kCaseCount; ++id) {
    TableCase tc = table_case(id, random_case_params(id, rng));
    Report r;
    r.label = "Case " + std::to_string(id);
    r.pass = true;
    for (auto q : tc.operators) {
      if (id == 7) q.eta[1] = q.eta[1] * Expr(Number(1.01));
      r.absorb(verify_invariance(q, tc.system));
    }
    reports.push_back(r);
  }
  auto text = render_reports(reports);
  CHECK(count_lines(text, "FAIL") == 1);
  CHECK(count_lines(text, "PASS") == 12);
  CHECK_THROWS_AS(render_reports({}), Error);
}

TEST_CASE("verify-solution sub-checks") {
  auto dir = scratch("vs");
  auto r = run({"verify-solution", "--id", "4-11", "--params", "k=0.25,alpha=0,beta=0.6,d1=1,d2=2,d3=0.5", "--out",
                dir.string()});
  CHECK(r.code == 0);
  auto rep = read_json(dir / "report.json");
  std::vector<std::string> labels;
  for (const auto& c : rep["reports"][0]["children"]) labels.push_back(c["check"]);
  CHECK(std::find(labels.begin(), labels.end(), "sol_4_11 u + v = 1") != labels.end());
  CHECK(std::count_if(labels.begin(), labels.end(), [](const std::string& s) { return s.find("asymptotics") != std::string::npos; }) == 1);
  CHECK(run({"verify-solution", "--id", "4-11", "--params", "d1=1,d2=2,d3=3", "--out", dir.string()}).code == 2);
  CHECK(run({"verify-solution", "--id", "4-16", "--params", "d1=1,d2=2,d3=5/9", "--phi1", "cos(x)", "--out",
             dir.string()}).code == 1);
  CHECK(run({"verify-solution", "--id", "4-16", "--params", "d1=1,d2=2,d3=5/9", "--phi1", "cos(x/2)^3", "--out",
             dir.string()}).code == 0);
  CHECK(run({"verify-solution", "--id", "4-22", "--out", dir.string()}).code == 0);
}

TEST_CASE("fig1 data is reproducible") {
  auto a = scratch("fa"), b = scratch("fb");
  CHECK(run({"fig1", "--panel", "right", "--out", a.string()}).code == 0);
  CHECK(run({"fig1", "--panel", "right", "--out", b.string()}).code == 0);
  auto csv = slurp(a / "fig1_right.csv");
  CHECK(csv == slurp(b / "fig1_right.csv"));
  CHECK(csv.rfind("t,x,u,v,w\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 101 * 101 + 1);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  for (int i = 0; i <= 50; ++i) std::getline(is, line);
  double t, x, u, v, w;
  char c;
  std::istringstream row(line);
  row >> t >> c >> x >> c >> u >> c >> v >> c >> w;
  CHECK(t == 0);
  CHECK(std::abs(u - 0.35) <= 1e-12);
  CHECK(std::abs(v - 0.65) <= 1e-12);
  CHECK(std::abs(w - 0.25) <= 1e-12);
  auto gp = slurp(a / "fig1_right.gp");
  CHECK(gp.find("splot 'fig1_right.csv'") != std::string::npos);
  for (const auto& e : fs::directory_iterator(a)) CHECK(e.path().string().find(".tmp") == std::string::npos);
  CHECK(run({"fig1", "--panel", "middle", "--out", a.string()}).code == 2);

  auto l = scratch("fl");
  CHECK(run({"fig1", "--panel", "left", "--t-max", "20", "--out", l.string()}).code == 0);
  auto lead = slurp(l / "fig1_left.csv").substr(10, 60);
  CHECK(lead.rfind("0,0,0.59999999999999998,0.40000000000000002,0", 0) == 0);
}

TEST_CASE("toml subset") {
  auto j = parse_toml(R"(# definition
case = 2
P = "x*t"   # trailing comment
[params]
d1 = 1
d2 = 2.5
d3 = "5/9"
flags.on = true
list = [1, 2,
  3]
inline = { a = 'lit', b = -4 }
)");
  CHECK(j["case"] == 2);
  CHECK(j["P"] == "x*t");
  CHECK(j["params"]["d2"] == 2.5);
  CHECK(j["params"]["d3"] == "5/9");
  CHECK(j["params"]["flags"]["on"] == true);
  CHECK(j["params"]["list"].size() == 3);
  CHECK(j["params"]["inline"]["a"] == "lit");
  CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), Error);
  CHECK_THROWS_AS(parse_toml("a = \"open\n"), Error);
  CHECK_THROWS_AS(parse_toml("[[arr]]\n"), Error);
}

TEST_CASE("definitions and config files") {
  nlohmann::json j = {{"case", 2}, {"params", {{"d1", 1}, {"d2", 2}, {"d3", "1/2"}}}};
  auto d = parse_definition(j);
  CHECK(*d.case_id == 2);
  CHECK(d.params.at("d3") == Number::ratio(1, 2));
  CHECK(d.params.at("d2") == Number(2));
  CHECK(parse_definition({{"case", 2}, {"params", {{"d2", 0.5}}}}).params.at("d2") == Number::ratio(1, 2));
  CHECK_THROWS_AS(parse_definition(nlohmann::json::object()), Error);

  auto dir = scratch("cfg");
  {
    std::ofstream(dir / "case.toml") << "case = 2\n[params]\nd1 = 1\nd2 = 2\nd3 = \"1/2\"\n";
    std::ofstream(dir / "case.json") << R"({"case": 2, "params": {"d1": 1, "d2": 2, "d3": 0.5}, "samples": 50})";
    std::ofstream(dir / "bad.toml") << "case = 2\nbogus = 1\n";
    // Lotka-Volterra pair with the trivial operator d/dt: eta = 0 always passes.
    std::ofstream(dir / "user.json")
        << R"j({"d": [1, 2, "1/2"], "C": ["u*(1-u-a*v)", "v*(1-v)", "0"], "xi": "0", "eta": ["0", "0", "0"], "params": {"a": 2}})j";
  }
  auto out = (dir / "o").string();
  CHECK(run({"verify-case", "--config", (dir / "case.toml").string(), "--out", out}).code == 0);
  CHECK(read_json(dir / "o" / "report.json")["reports"][0]["params"]["d3"] == 0.5);
  CHECK(run({"verify-case", "--config", (dir / "case.json").string(), "--out", out}).code == 0);
  CHECK(read_json(dir / "o" / "report.json")["reports"][0]["children"][0]["samples"] == 100);
  // Command-line params override the file.
  CHECK(run({"verify-case", "--config", (dir / "case.json").string(), "--params", "d2=1", "--out", out}).code == 2);
  CHECK(run({"verify-case", "--config", (dir / "bad.toml").string(), "--out", out}).code == 2);
  CHECK(run({"verify-case", "--config", (dir / "missing.toml").string(), "--out", out}).code == 2);
  CHECK(run({"verify-operator", "--config", (dir / "user.json").string(), "--out", out}).code == 0);
  CHECK(run({"verify-operator", "--d", "1,2,1/2", "--C", "u*(1-u-v);v;0", "--xi", "0", "--eta", "0;u;0", "--out", out})
            .code == 1);
  CHECK(run({"verify-operator", "--case", "2", "--op", "2", "--params", "d1=1,d2=2,d3=1/2", "--determining", "--out",
             out}).code == 0);
}

TEST_CASE("seed from the environment") {
  auto dir = scratch("seed");
  ::setenv("RDSYM_SEED", "12345", 1);
  auto r = run({"verify-case", "--case", "2", "--params", "d1=1,d2=2,d3=0.5", "--out", dir.string()});
  ::unsetenv("RDSYM_SEED");
  CHECK(r.code == 0);
  auto rep = read_json(dir / "report.json");
  CHECK(rep["reports"][0]["seed"] == 12345);
  CHECK(read_json(dir / "manifest.json")["RDSYM_SEED"] == "12345");
}

TEST_CASE("simulate and converge") {
  auto dir = scratch("sim");
  CHECK(run({"simulate", "--id", "4-11", "--params", "d1=1,d2=2,d3=1/2", "--cells", "32", "--t-end", "0.2",
             "--max-error", "1e-3", "--out", dir.string()}).code == 0);
  auto first = slurp(dir / "snapshots.csv");
  CHECK(run({"simulate", "--id", "4-11", "--params", "d1=1,d2=2,d3=1/2", "--cells", "32", "--t-end", "0.2",
             "--max-error", "1e-3", "--out", dir.string()}).code == 0);
  CHECK(first == slurp(dir / "snapshots.csv"));
  CHECK(run({"simulate", "--id", "4-11", "--params", "d1=1,d2=2,d3=1/2", "--cells", "32", "--t-end", "0.2",
             "--max-error", "1e-9", "--out", dir.string()}).code == 1);
  CHECK(run({"simulate", "--case", "2", "--params", "d1=1,d2=2,d3=1/2", "--initial", "0.6;0.4;0", "--cells", "16",
             "--t-end", "0.1", "--out", dir.string()}).code == 0);
  CHECK(run({"simulate", "--id", "4-22", "--params", "d=2", "--cells", "16", "--t-end", "20", "--out", dir.string()})
            .code == 1);
  CHECK(read_json(dir / "report.json")["extra"].contains("blow_up_after"));
  CHECK(run({"simulate", "--id", "4-11", "--params", "d1=1,d2=2,d3=1/2", "--cells", "4", "--out", dir.string()}).code == 2);
  CHECK(run({"converge", "--id", "4-11", "--params", "d1=1,d2=2,d3=1/2", "--cells", "16", "--t-end", "0.2", "--out",
             dir.string()}).code == 0);
}

TEST_CASE("reduce verb") {
  auto dir = scratch("red");
  CHECK(run({"reduce", "--ansatz", "Q2", "--params", "d1=1,d2=2,d3=1/2", "--out", dir.string()}).code == 0);
  CHECK(run({"reduce", "--ansatz", "Q1", "--params", "d1=1,d2=2,d3=1/2", "--phi0", "0.6,0.4,0", "--dphi0", "0,0,0.25",
             "--stride", "20", "--tol", "1e-6", "--out", dir.string()}).code == 0);
  auto csv = slurp(dir / "trajectory.csv");
  CHECK(csv.rfind("x,phi1,phi1',phi2,phi2',phi3,phi3'\n", 0) == 0);
  CHECK(run({"reduce", "--ode", "4-20", "--params", "d1=2", "--out", dir.string()}).code == 0);
  CHECK(run({"reduce", "--ode", "4-13", "--params", "d1=1", "--phi0", "-0.5", "--x-end", "5", "--out", dir.string()})
            .code == 0);
  CHECK(run({"reduce", "--ansatz", "Q3", "--params", "d1=1,d2=2,d3=1/2", "--out", dir.string()}).code == 2);
  CHECK(run({"reduce", "--ansatz", "Q1", "--params", "d1=1,d2=1,d3=1/2", "--out", dir.string()}).code == 2);
}
