#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "polgrad/experiments.hpp"

namespace polgrad {

/// Formats a double with 17 significant digits, enough to round-trip exactly.
inline std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("CSV: malformed numeric field '" + s + "'");
  }
}

inline long long parse_ll(const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("CSV: malformed integer field '" + s + "'");
  }
}

/// Reads lines, captures leading '#' comments, checks the header row.
inline std::vector<std::vector<std::string>> read_csv_rows(std::istream& in,
                                                           const std::string& expected_header) {
  std::string line;
  bool header_seen = false;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    if (!header_seen) {
      if (line != expected_header)
        throw std::runtime_error("CSV: unexpected header '" + line + "', wanted '" +
                                 expected_header + "'");
      header_seen = true;
      continue;
    }
    rows.push_back(split_csv_line(line));
  }
  if (!header_seen) throw std::runtime_error("CSV: missing header row");
  return rows;
}

}  // namespace detail

inline constexpr const char* kSweepHeader =
    "algorithm,gamma,baseline,b_over_rbar,steps,replicas,mean_rel_error,std_rel_error";

inline std::string baseline_field(const SweepRecord& r) {
  switch (r.baseline_mode) {
    case BaselineMode::kNone: return "none";
    case BaselineMode::kAdaptiveAverage: return "adaptive";
    case BaselineMode::kConstant: return format_g17(r.baseline_b);
  }
  throw std::logic_error("unreachable");
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records,
                            const std::string& comment) {
  out << "# " << comment << "\n" << kSweepHeader << "\n";
  for (const auto& r : records) {
    out << r.algorithm << ',' << format_g17(r.gamma) << ',' << baseline_field(r) << ','
        << format_g17(r.b_over_rbar) << ',' << r.steps << ',' << r.replicas << ','
        << format_g17(r.mean_rel_error) << ',' << format_g17(r.std_rel_error) << "\n";
  }
}

inline std::vector<SweepRecord> read_sweep_csv(std::istream& in) {
  std::vector<SweepRecord> out;
  for (const auto& f : detail::read_csv_rows(in, kSweepHeader)) {
    if (f.size() != 8) throw std::runtime_error("CSV: sweep row has wrong field count");
    SweepRecord r;
    r.algorithm = f[0];
    r.gamma = detail::parse_double(f[1]);
    if (f[2] == "none") {
      r.baseline_mode = BaselineMode::kNone;
    } else if (f[2] == "adaptive") {
      r.baseline_mode = BaselineMode::kAdaptiveAverage;
    } else {
      r.baseline_mode = BaselineMode::kConstant;
      r.baseline_b = detail::parse_double(f[2]);
    }
    r.b_over_rbar = detail::parse_double(f[3]);
    r.steps = detail::parse_ll(f[4]);
    r.replicas = static_cast<int>(detail::parse_ll(f[5]));
    r.mean_rel_error = detail::parse_double(f[6]);
    r.std_rel_error = detail::parse_double(f[7]);
    out.push_back(std::move(r));
  }
  return out;
}

inline constexpr const char* kCurveHeader = "algorithm,seed,step,avg_reward,status";

inline void write_curves_csv(std::ostream& out, const std::vector<TrainingCurve>& curves,
                             const std::string& comment) {
  out << "# " << comment << "\n" << kCurveHeader << "\n";
  for (const auto& c : curves) {
    for (const auto& [step, value] : c.points)
      out << c.algorithm << ',' << c.seed << ',' << step << ',' << format_g17(value) << ",ok\n";
    if (c.diverged)
      out << c.algorithm << ',' << c.seed << ',' << c.diverged_at << ",nan,diverged\n";
  }
}

inline std::vector<TrainingCurve> read_curves_csv(std::istream& in) {
  std::vector<TrainingCurve> out;
  auto find_curve = [&](const std::string& algo, std::uint64_t seed) -> TrainingCurve& {
    for (auto& c : out)
      if (c.algorithm == algo && c.seed == seed) return c;
    out.emplace_back();
    out.back().algorithm = algo;
    out.back().seed = seed;
    return out.back();
  };
  for (const auto& f : detail::read_csv_rows(in, kCurveHeader)) {
    if (f.size() != 5) throw std::runtime_error("CSV: curve row has wrong field count");
    TrainingCurve& c = find_curve(f[0], static_cast<std::uint64_t>(detail::parse_ll(f[1])));
    if (f[4] == "diverged") {
      c.diverged = true;
      c.diverged_at = detail::parse_ll(f[2]);
    } else if (f[4] == "ok") {
      c.points.emplace_back(detail::parse_ll(f[2]), detail::parse_double(f[3]));
    } else {
      throw std::runtime_error("CSV: unknown row status '" + f[4] + "'");
    }
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace polgrad
