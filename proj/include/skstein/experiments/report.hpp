#pragma once

// Scaling reports and their on-disk form: report.json (17 significant digits
// for every float) and series.csv.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "skstein/errors.hpp"
#include "skstein/experiments/config.hpp"
#include "skstein/experiments/fit.hpp"

namespace skstein::experiments {

inline constexpr const char* report_schema_version = "1.0.0";

// Values at or below this count as exact zeros (symmetric corners) and are
// kept out of slope fits.
inline constexpr double zero_threshold = 1e-24;

struct ReportRow {
  std::size_t n = 0;
  double mean_sq_discrepancy = 0.0;
  double std_error = 0.0;
  std::size_t replications = 0;
  std::uint64_t row_seed = 0;
  nlohmann::ordered_json extras = nlohmann::ordered_json::object();
};

struct SeriesPoint {
  std::size_t n = 0;
  double value = 0.0;
  double std_error = 0.0;
};

struct NamedSeries {
  std::string name;
  std::vector<SeriesPoint> points;
  std::optional<SlopeFit> fit;
};

enum class check_status { pass, fail, skipped };

struct Check {
  std::string name;
  check_status status = check_status::skipped;
  std::string detail;
};

struct ScalingReport {
  ExperimentConfig config;
  std::optional<double> q;
  std::vector<ReportRow> rows;
  std::optional<SlopeFit> fit;
  std::vector<std::size_t> excluded_zero_rows;
  std::vector<NamedSeries> series;
  std::vector<Check> checks;
  std::vector<std::string> notes;
  double runtime_seconds = 0.0;  // kept out of report.json

  bool all_checks_pass() const {
    for (const auto& c : checks) {
      if (c.status == check_status::fail) return false;
    }
    return true;
  }
};

inline const char* to_string(check_status s) {
  switch (s) {
    case check_status::pass:
      return "pass";
    case check_status::fail:
      return "fail";
    default:
      return "skipped";
  }
}

inline std::string format_double(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Fit over the rows whose value is above the zero threshold; needs three.
inline std::optional<SlopeFit> fit_positive(const std::vector<SeriesPoint>& points,
                                            std::vector<std::size_t>* excluded = nullptr) {
  std::vector<double> n;
  std::vector<double> v;
  for (const auto& p : points) {
    if (p.value > zero_threshold) {
      n.push_back(static_cast<double>(p.n));
      v.push_back(p.value);
    } else if (excluded) {
      excluded->push_back(p.n);
    }
  }
  if (n.size() < 3) return std::nullopt;
  return fit_decay_exponent(n, v);
}

namespace detail {

inline void emit(std::ostream& out, const nlohmann::ordered_json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case nlohmann::ordered_json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (const auto& item : j.items()) {
        if (!first) out << ",\n";
        first = false;
        out << inner << nlohmann::ordered_json(item.key()).dump() << ": ";
        emit(out, item.value(), indent + 1);
      }
      out << '\n' << pad << '}';
      return;
    }
    case nlohmann::ordered_json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k > 0) out << ",\n";
        out << inner;
        emit(out, j[k], indent + 1);
      }
      out << '\n' << pad << ']';
      return;
    }
    case nlohmann::ordered_json::value_t::number_float:
      out << format_double(j.get<double>());
      return;
    default:
      out << j.dump();
  }
}

inline nlohmann::ordered_json fit_json(const std::optional<SlopeFit>& fit) {
  if (!fit) return nullptr;
  return {{"slope", fit->slope}, {"slope_stderr", fit->std_error}, {"intercept", fit->intercept}};
}

}  // namespace detail

inline std::string dump_json(const nlohmann::ordered_json& j) {
  std::ostringstream out;
  detail::emit(out, j, 0);
  out << '\n';
  return out.str();
}

inline nlohmann::ordered_json to_json(const ScalingReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = report_schema_version;
  j["experiment"] = std::string(to_string(r.config.experiment));
  j["config"] = to_json(r.config);
  j["master_seed"] = r.config.master_seed;
  j["q"] = r.q ? nlohmann::ordered_json(*r.q) : nlohmann::ordered_json(nullptr);
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["n"] = row.n;
    o["mean_sq_discrepancy"] = row.mean_sq_discrepancy;
    o["stderr"] = row.std_error;
    o["replications"] = row.replications;
    o["row_seed"] = row.row_seed;
    o["extras"] = row.extras;
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  j["fitted_slope"] = r.fit ? nlohmann::ordered_json(r.fit->slope) : nlohmann::ordered_json(nullptr);
  j["fitted_slope_stderr"] = r.fit ? nlohmann::ordered_json(r.fit->std_error) : nlohmann::ordered_json(nullptr);
  j["excluded_zero_rows"] = r.excluded_zero_rows;
  auto series = nlohmann::ordered_json::array();
  for (const auto& s : r.series) {
    nlohmann::ordered_json o;
    o["name"] = s.name;
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : s.points) pts.push_back({{"n", p.n}, {"value", p.value}, {"stderr", p.std_error}});
    o["points"] = std::move(pts);
    o["fit"] = detail::fit_json(s.fit);
    series.push_back(std::move(o));
  }
  j["series"] = std::move(series);
  auto checks = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"status", to_string(c.status)}, {"detail", c.detail}});
  j["checks"] = std::move(checks);
  j["notes"] = r.notes;
  return j;
}

inline std::string series_csv(const ScalingReport& r) {
  std::string out = "n,mean_sq_discrepancy,stderr,replications\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.n) + ',' + format_double(row.mean_sq_discrepancy) + ',' + format_double(row.std_error) +
           ',' + std::to_string(row.replications) + '\n';
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// report.json and series.csv are deterministic; wall-clock time goes to
// runtime.json next to them.
inline void write_report(const ScalingReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", dump_json(to_json(r)));
  write_file(dir / "series.csv", series_csv(r));
  nlohmann::ordered_json t;
  t["experiment"] = std::string(to_string(r.config.experiment));
  t["runtime_seconds"] = r.runtime_seconds;
  write_file(dir / "runtime.json", dump_json(t));
}

}  // namespace skstein::experiments
