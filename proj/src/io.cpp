#include "rdsym/io.hpp"

#include "rdsym/compiled.hpp"
#include "rdsym/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace rdsym {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string short_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string params_text(const ParamSet& p, bool compact) {
  std::string s;
  for (const auto& [k, v] : p) {
    if (!s.empty()) s += ' ';
    s += k + '=';
    if (compact && !v.is_exact()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4g", v.value());
      s += buf;
    } else {
      s += v.str();
    }
  }
  return s;
}

nlohmann::json report_to_json(const Report& r) {
  nlohmann::json j;
  j["check"] = r.label;
  j["params"] = nlohmann::json::object();
  j["params_exact"] = nlohmann::json::object();
  for (const auto& [k, v] : r.params) {
    j["params"][k] = v.value();
    j["params_exact"][k] = v.str();
  }
  j["samples"] = r.samples;
  j["redraws"] = r.redraws;
  j["max_residual"] = r.max_abs_residual;
  j["max_scaled_residual"] = r.max_scaled_residual;
  j["tol"] = r.tol;
  j["per_equation"] = nlohmann::json::array();
  for (const auto& eq : r.per_equation)
    j["per_equation"].push_back({{"name", eq.name}, {"max_abs", eq.max_abs}, {"max_scaled", eq.max_scaled}});
  j["pass"] = r.pass;
  j["seed"] = r.seeds.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.seeds.front());
  j["seeds"] = r.seeds;
  j["notes"] = r.notes;
  j["children"] = nlohmann::json::array();
  for (const auto& c : r.children) j["children"].push_back(report_to_json(c));
  return j;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream os;
  std::size_t n = tr.phi.empty() ? 0 : tr.phi.front().size();
  os << 'x';
  for (std::size_t c = 0; c < n; ++c) {
    std::string name = n == 1 ? "phi" : "phi" + std::to_string(c + 1);
    os << ',' << name << ',' << name << '\'';
  }
  os << '\n';
  for (std::size_t i = 0; i < tr.x.size(); ++i) {
    os << format_double(tr.x[i]);
    for (std::size_t c = 0; c < n; ++c) os << ',' << format_double(tr.phi[i][c]) << ',' << format_double(tr.dphi[i][c]);
    os << '\n';
  }
  return os.str();
}

std::string surface_csv(const ExactSolution& s, const Grid& g) {
  CompiledExpr prog({s.fields.begin(), s.fields.end()}, {"t", "x"});
  auto work = prog.workspace();
  std::ostringstream os;
  os << "t,x,u,v,w\n";
  std::array<double, 3> f{};
  for (double t : g.ts())
    for (double x : g.xs()) {
      std::array<double, 2> in{t, x};
      if (!prog.eval(in, f, work)) throw DomainError("solution undefined at x = " + format_double(x));
      os << format_double(t) << ',' << format_double(x) << ',' << format_double(f[0]) << ','
         << format_double(f[1]) << ',' << format_double(f[2]) << '\n';
    }
  return os.str();
}

std::string snapshot_csv(const SimResult& r) {
  std::ostringstream os;
  os << "t,x,u,v,w\n";
  for (const auto& s : r.snapshots)
    for (std::size_t i = 0; i < r.x.size(); ++i)
      os << format_double(s.t) << ',' << format_double(r.x[i]) << ',' << format_double(s.f[0][i]) << ','
         << format_double(s.f[1][i]) << ',' << format_double(s.f[2][i]) << '\n';
  return os.str();
}

std::string surface_plot_script(const std::string& csv_name, const std::string& title, int nt, int nx) {
  std::string stem = csv_name.substr(0, csv_name.rfind('.'));
  std::ostringstream os;
  os << "# gnuplot " << stem << ".gp\n"
     << "set terminal pngcairo size 900,700\n"
     << "set output '" << stem << ".png'\n"
     << "set datafile separator ','\n"
     << "set title '" << title << "'\n"
     << "set xlabel 't'\nset ylabel 'x'\nset zlabel 'density'\n"
     << "set dgrid3d " << nt << ',' << nx << "\n"
     << "set hidden3d\n"
     << "splot '" << csv_name << "' skip 1 using 1:2:3 with lines title 'u', \\\n"
     << "      '" << csv_name << "' skip 1 using 1:2:4 with lines title 'v', \\\n"
     << "      '" << csv_name << "' skip 1 using 1:2:5 with lines title 'w'\n";
  return os.str();
}

std::string render_reports(const std::vector<Report>& reports) {
  if (reports.empty()) throw Error("no reports to render");
  std::size_t wl = 5, wp = 6;
  for (const auto& r : reports) {
    wl = std::max(wl, r.label.size());
    wp = std::max(wp, params_text(r.params, true).size());
  }
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  std::ostringstream os;
  os << pad("check", wl) << "  " << pad("params", wp) << "  " << pad("max_scaled", 10) << "  result\n";
  for (const auto& r : reports)
    os << pad(r.label, wl) << "  " << pad(params_text(r.params, true), wp) << "  " << pad(short_double(r.max_scaled_residual), 10)
       << "  " << (r.pass ? "PASS" : "FAIL") << '\n';
  return os.str();
}

}  // namespace rdsym
