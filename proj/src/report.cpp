#include "codim2/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "codim2/torus_fields.hpp"

namespace c2 {

CheckRecord check_relative(std::string id, std::string anchor, double computed, double reference, double tol,
                           double floor) {
  CheckRecord r{std::move(id), std::move(anchor), computed, reference, 0.0, tol, false, ""};
  double scale = std::max(std::abs(reference), floor);
  r.residual = scale > 0 ? std::abs(computed - reference) / scale : std::abs(computed - reference);
  r.pass = std::isfinite(r.residual) && r.residual <= tol;
  return r;
}

CheckRecord check_absolute(std::string id, std::string anchor, double computed, double reference, double tol) {
  CheckRecord r{std::move(id), std::move(anchor), computed, reference, std::abs(computed - reference), tol, false, ""};
  r.pass = std::isfinite(r.residual) && r.residual <= tol;
  return r;
}

CheckRecord check_bool(std::string id, std::string anchor, bool ok, double computed, double reference,
                       double residual, double tol) {
  return {std::move(id), std::move(anchor), computed, reference, residual, tol, ok, ""};
}

CheckRecord failed_record(std::string id, std::string anchor, const std::string& error) {
  CheckRecord r{std::move(id), std::move(anchor), NAN, NAN, NAN, 0.0, false, error};
  return r;
}

bool Report::all_pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
}

namespace {
nlohmann::json num(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}
}  // namespace

nlohmann::json Report::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["seed"] = seed;
  j["pass"] = all_pass();
  j["meta"] = meta;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json r;
    r["id"] = c.id;
    r["anchor"] = c.anchor;
    r["computed"] = num(c.computed);
    r["reference"] = num(c.reference);
    r["residual"] = num(c.residual);
    r["tolerance"] = c.tolerance;
    r["pass"] = c.pass;
    if (!c.note.empty()) r["note"] = c.note;
    j["checks"].push_back(r);
  }
  return j;
}

void write_report_json(const std::string& path, const Report& r) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << r.to_json().dump(2) << "\n";
}

ConvergenceFit fit_order(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size()) throw Error("resolution and residual lists differ in length");
  if (h.size() < 3) throw Error("convergence needs at least 3 resolutions");
  bool inc = true, dec = true;
  for (std::size_t i = 1; i < h.size(); ++i) {
    inc = inc && h[i] > h[i - 1];
    dec = dec && h[i] < h[i - 1];
  }
  if (!inc && !dec) throw Error("resolutions must be strictly monotone");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0) || !(err[i] > 0)) throw Error("convergence fit needs positive values");
    double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  ConvergenceFit fit;
  fit.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.log_constant = (sy - fit.order * sx) / n;
  return fit;
}

std::string csv_string(const Table& t) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

void write_csv(const std::string& path, const Table& t) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << csv_string(t);
}

}  // namespace c2
