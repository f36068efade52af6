#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fixbias/errors.hpp"

namespace fixbias::report {

/// 17 significant digits: round-trips every double.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes `content` to a sibling temp file and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

/// Numeric table with a header row. Missing cells serialize as empty fields.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw InvalidArgument("CSV table needs at least one column");
  }

  void add_row(std::vector<std::optional<double>> row) {
    if (row.size() != header_.size()) throw InvalidArgument("CSV row width does not match the header");
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::optional<double>>>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  std::optional<std::size_t> column_index(const std::string& name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    return std::nullopt;
  }

  /// Values of a named column; throws listing the available columns.
  std::vector<std::optional<double>> column(const std::string& name) const {
    const auto idx = column_index(name);
    if (!idx) throw InvalidArgument("no column '" + name + "'; available columns: " + joined_header());
    std::vector<std::optional<double>> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r[*idx]);
    return out;
  }

  std::string joined_header() const {
    std::string s;
    for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
    return s;
  }

  std::string to_string() const {
    std::string s = joined_header() + "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) s += ',';
        if (r[i]) s += format_number(*r[i]);
      }
      s += '\n';
    }
    return s;
  }

  void write(const std::filesystem::path& path) const { write_atomic(path, to_string()); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::optional<double>>> rows_;
};

inline CsvTable parse_csv(std::istream& in, const std::string& source = "csv") {
  std::string line;
  if (!std::getline(in, line) || line.find_first_not_of(" \t\r") == std::string::npos) {
    throw InvalidArgument(source + ": empty CSV (no header row)");
  }
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(l);
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      cells.push_back(cell);
    }
    if (!l.empty() && (l.back() == ',')) cells.emplace_back();
    return cells;
  };
  CsvTable table(split(line));
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != table.header().size()) {
      throw InvalidArgument(source + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(table.header().size()) + " fields");
    }
    std::vector<std::optional<double>> row;
    for (const auto& c : cells) {
      if (c.empty()) {
        row.emplace_back();
        continue;
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size()) throw InvalidArgument(source + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      row.emplace_back(v);
    }
    table.add_row(std::move(row));
  }
  return table;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open CSV '" + path.string() + "'");
  return parse_csv(in, path.string());
}

}  // namespace fixbias::report
