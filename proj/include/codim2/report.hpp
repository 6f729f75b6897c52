// Check records, reports, convergence fits and table export.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace c2 {

struct CheckRecord {
  std::string id;
  std::string anchor = "plumbing";  // identity being verified, or "plumbing"
  double computed = 0.0;
  double reference = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

// residual = |computed - reference| / max(|reference|, floor); pass iff residual <= tol
CheckRecord check_relative(std::string id, std::string anchor, double computed, double reference, double tol,
                           double floor = 0.0);
CheckRecord check_absolute(std::string id, std::string anchor, double computed, double reference, double tol);
// pass iff predicate; residual carried through
CheckRecord check_bool(std::string id, std::string anchor, bool ok, double computed = 0.0, double reference = 0.0,
                       double residual = 0.0, double tol = 0.0);
CheckRecord failed_record(std::string id, std::string anchor, const std::string& error);

struct Report {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<CheckRecord> checks;
  nlohmann::json meta = nlohmann::json::object();

  bool all_pass() const;
  void add(CheckRecord r) { checks.push_back(std::move(r)); }
  void add(const std::vector<CheckRecord>& rs) { checks.insert(checks.end(), rs.begin(), rs.end()); }
  nlohmann::json to_json() const;
};

void write_report_json(const std::string& path, const Report& r);

struct ConvergenceFit {
  double order = 0.0;
  double log_constant = 0.0;
};
// least-squares slope of log(err) vs log(h); needs >= 3 strictly monotone h values
ConvergenceFit fit_order(const std::vector<double>& h, const std::vector<double>& err);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
void write_csv(const std::string& path, const Table& t);
std::string csv_string(const Table& t);

}  // namespace c2
