#pragma once

// CSV import/export. Numbers use the shortest round-trip representation, so
// export -> ingest reproduces every double exactly and reruns are byte-identical.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "seqsoc/cell_model.hpp"
#include "seqsoc/profile.hpp"
#include "seqsoc/signal_lab.hpp"

namespace seqsoc::csv {

/// Malformed or schema-violating input; message names the row or column.
class CsvError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kUniformTolerance = 1e-6; // s

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Column-oriented table with a fixed header order.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  void add(std::string name, std::vector<double> values) {
    header.push_back(std::move(name));
    columns.push_back(std::move(values));
  }

  std::string render() const {
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c) out += ',';
      out += header[c];
    }
    out += '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) out += ',';
        out += format_number(columns[c][r]);
      }
      out += '\n';
    }
    return out;
  }
};

/// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Table measurement_table(const MeasurementSequence& m, bool with_truth = true) {
  Table t;
  t.add("t_s", m.time);
  t.add("i_A", m.current);
  t.add("v_V", m.voltage);
  if (with_truth && m.has_truth()) {
    std::vector<double> z, vc;
    for (const auto& s : m.truth) {
      z.push_back(s.z);
      vc.push_back(s.v_c);
    }
    t.add("z_true", std::move(z));
    t.add("vc_true", std::move(vc));
  }
  return t;
}

inline Table profile_table(const CurrentProfile& p, double time_offset = 0.0) {
  std::vector<double> time(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) time[k] = time_offset + static_cast<double>(k) * p.t_s;
  Table t;
  t.add("t_s", std::move(time));
  t.add("i_A", p.samples);
  return t;
}

inline Table breakdown_table(const ComponentBreakdown& b) {
  Table t;
  t.add("t_s", b.time);
  t.add("init_V", b.init);
  t.add("socvar_V", b.socvar);
  t.add("ohmic_V", b.ohmic);
  t.add("rc_V", b.rc);
  return t;
}

/// Parsed CSV keyed by header name, so column order in the file is free.
struct ParsedCsv {
  std::map<std::string, std::vector<double>> columns;
  std::size_t rows = 0;

  bool has(const std::string& name) const { return columns.count(name) != 0; }
  const std::vector<double>& require(const std::string& name, const std::string& source) const {
    const auto it = columns.find(name);
    if (it == columns.end()) throw CsvError(source + ": missing required column '" + name + "'");
    return it->second;
  }
};

namespace detail {
inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}
} // namespace detail

inline ParsedCsv parse(std::string_view text, const std::string& source = "<csv>") {
  ParsedCsv out;
  std::vector<std::string> names;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = detail::trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split(line);
    if (names.empty()) {
      for (auto f : fields) {
        std::string name(f);
        if (name.empty()) throw CsvError(source + ": empty column name in header");
        if (out.columns.count(name)) throw CsvError(source + ": duplicate column '" + name + "'");
        out.columns[name];
        names.push_back(std::move(name));
      }
      continue;
    }
    if (fields.size() != names.size()) {
      throw CsvError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                     " fields, header has " + std::to_string(names.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      const auto f = fields[c];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw CsvError(source + ": line " + std::to_string(line_no) + " column '" + names[c] +
                       "' is not a number: '" + std::string(f) + "'");
      }
      out.columns[names[c]].push_back(v);
    }
    ++out.rows;
  }
  if (names.empty()) throw CsvError(source + ": empty file");
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CsvError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Checks uniform sampling and returns the period. Rows are 1-based data rows
/// (the header is line 1, so data row r is file line r + 1).
inline double check_uniform(const std::vector<double>& time, const std::string& source) {
  if (time.size() < 2) throw CsvError(source + ": need at least two samples to infer the sample period");
  const double t_s = time[1] - time[0];
  if (!(t_s > 0.0)) throw CsvError(source + ": timestamps must increase (line 3)");
  for (std::size_t k = 1; k < time.size(); ++k) {
    const double expected = time[0] + static_cast<double>(k) * t_s;
    if (std::abs(time[k] - expected) > kUniformTolerance) {
      throw CsvError(source + ": non-uniform timestamp at line " + std::to_string(k + 2) + " (t=" +
                     format_number(time[k]) + ", expected " + format_number(expected) + ")");
    }
  }
  return t_s;
}

inline CurrentProfile profile_from_csv(std::string_view text, const std::string& source = "<csv>") {
  const auto parsed = parse(text, source);
  const auto& time = parsed.require("t_s", source);
  CurrentProfile p;
  p.t_s = check_uniform(time, source);
  p.samples = parsed.require("i_A", source);
  p.label = source;
  return p;
}

inline MeasurementSequence measurements_from_csv(std::string_view text, const std::string& source = "<csv>") {
  const auto parsed = parse(text, source);
  MeasurementSequence m;
  m.time = parsed.require("t_s", source);
  m.current = parsed.require("i_A", source);
  m.voltage = parsed.require("v_V", source);
  m.t_s = check_uniform(m.time, source);
  if (parsed.has("z_true") && parsed.has("vc_true")) {
    const auto& z = parsed.columns.at("z_true");
    const auto& vc = parsed.columns.at("vc_true");
    for (std::size_t k = 0; k < z.size(); ++k) m.truth.push_back({vc[k], z[k]});
  }
  return m;
}

inline CurrentProfile ingest_profile(const std::filesystem::path& path) {
  return profile_from_csv(read_file(path), path.string());
}

inline MeasurementSequence ingest_measurements(const std::filesystem::path& path) {
  return measurements_from_csv(read_file(path), path.string());
}

} // namespace seqsoc::csv
