#pragma once

#include "rdsym/pdesim.hpp"
#include "rdsym/reduction.hpp"
#include "rdsym/report.hpp"
#include "rdsym/solutions.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace rdsym {

/// {check, params, params_exact, samples, redraws, max_residual,
///  max_scaled_residual, tol, per_equation, pass, seed, seeds, notes, children}
nlohmann::json report_to_json(const Report& r);

/// Writes next to `path` and renames into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Doubles as %.17g so reruns are byte-identical.
std::string format_double(double v);

std::string trajectory_csv(const Trajectory& tr);
std::string surface_csv(const ExactSolution& s, const Grid& g);
std::string snapshot_csv(const SimResult& r);

/// gnuplot script drawing u, v, w surfaces from a t,x,u,v,w CSV.
std::string surface_plot_script(const std::string& csv_name, const std::string& title, int nt, int nx);

/// One line per report: label, params, max scaled residual, PASS/FAIL.
/// Throws Error on an empty list.
std::string render_reports(const std::vector<Report>& reports);

/// "k=v k=v"; compact prints inexact values with four digits.
std::string params_text(const ParamSet& p, bool compact = false);

}  // namespace rdsym
