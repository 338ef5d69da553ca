#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eitstore/homodyne.hpp"
#include "eitstore/units.hpp"

namespace eitstore {

/// Rectangular named-column table with optional scalar metadata, serialized
/// as CSV: "# meta: key = value" lines, one "# column: name [unit]" line per
/// column, then comma-separated rows at 17 significant digits (doubles
/// round-trip exactly).
struct Table {
  struct Column {
    std::string name;
    std::string unit;
    std::vector<double> values;
  };
  std::vector<Column> columns;
  std::map<std::string, double> meta;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().values.size(); }

  Table& add(std::string name, std::string unit, std::vector<double> values) {
    if (!columns.empty() && values.size() != rows())
      throw std::invalid_argument("Table: column '" + name + "' breaks rectangularity");
    columns.push_back({std::move(name), std::move(unit), std::move(values)});
    return *this;
  }

  Table& add_complex(const std::string& name, const std::string& unit,
                     const std::vector<complexd>& values) {
    std::vector<double> re(values.size()), im(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      re[k] = values[k].real();
      im[k] = values[k].imag();
    }
    add(name + "_re", unit, std::move(re));
    add(name + "_im", unit, std::move(im));
    return *this;
  }

  const Column& column(const std::string& name) const {
    for (const auto& c : columns)
      if (c.name == name) return c;
    throw std::out_of_range("Table: no column '" + name + "'");
  }
};

namespace detail {
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

inline void write_timeseries(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_timeseries: cannot open '" + path.string() + "'");
  for (const auto& [key, value] : table.meta)
    out << "# meta: " << key << " = " << detail::format_g17(value) << "\n";
  for (const auto& col : table.columns)
    out << "# column: " << col.name << " [" << col.unit << "]\n";
  const std::size_t n = table.rows();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out << ',';
      out << detail::format_g17(table.columns[c].values[r]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_timeseries: write failed for '" + path.string() + "'");
}

inline Table read_timeseries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_timeseries: cannot open '" + path.string() + "'");
  Table table;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# meta: ", 0) == 0) {
      const auto eq = line.find(" = ", 8);
      if (eq == std::string::npos)
        throw std::runtime_error("read_timeseries: malformed meta line in '" + path.string() + "'");
      table.meta[line.substr(8, eq - 8)] = std::strtod(line.c_str() + eq + 3, nullptr);
      continue;
    }
    if (line.rfind("# column: ", 0) == 0) {
      const auto open = line.rfind(" [");
      if (open == std::string::npos || line.back() != ']')
        throw std::runtime_error("read_timeseries: malformed column line in '" + path.string() +
                                 "'");
      Table::Column col;
      col.name = line.substr(10, open - 10);
      col.unit = line.substr(open + 2, line.size() - open - 3);
      table.columns.push_back(std::move(col));
      continue;
    }
    if (line[0] == '#') continue;
    std::size_t c = 0;
    const char* p = line.c_str();
    while (*p && c < table.columns.size()) {
      char* end = nullptr;
      table.columns[c].values.push_back(std::strtod(p, &end));
      if (end == p)
        throw std::runtime_error("read_timeseries: bad number at row " + std::to_string(row) +
                                 " of '" + path.string() + "'");
      p = (*end == ',') ? end + 1 : end;
      ++c;
    }
    if (c != table.columns.size())
      throw std::runtime_error("read_timeseries: short row " + std::to_string(row) + " in '" +
                               path.string() + "'");
    ++row;
  }
  return table;
}

/// Homodyne ensembles travel as tables: scan phases and the storage window in
/// the metadata, one intensity column per record. External experimental data
/// in the same layout feeds the same pipeline.
inline Table ensemble_to_table(const HomodyneEnsemble& e) {
  Table t;
  t.meta["i_c"] = e.i_c;
  t.meta["t_off_s"] = e.t_off;
  t.meta["t_on_s"] = e.t_on;
  t.meta["records"] = static_cast<double>(e.k_count());
  for (std::size_t k = 0; k < e.k_count(); ++k) {
    char key[32];
    std::snprintf(key, sizeof key, "scan_phase_%03zu", k);
    t.meta[key] = e.scan_phases[k];
  }
  t.add("time_s", "s", e.t);
  for (std::size_t k = 0; k < e.k_count(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "record_%03zu", k);
    t.add(name, "arb", e.records[k]);
  }
  return t;
}

inline HomodyneEnsemble ensemble_from_table(const Table& t) {
  HomodyneEnsemble e;
  auto need = [&](const char* key) {
    const auto it = t.meta.find(key);
    if (it == t.meta.end())
      throw std::runtime_error(std::string("ensemble_from_table: missing meta '") + key + "'");
    return it->second;
  };
  e.i_c = need("i_c");
  e.t_off = need("t_off_s");
  e.t_on = need("t_on_s");
  const auto k_count = static_cast<std::size_t>(need("records"));
  e.t = t.column("time_s").values;
  for (std::size_t k = 0; k < k_count; ++k) {
    char key[32];
    std::snprintf(key, sizeof key, "scan_phase_%03zu", k);
    e.scan_phases.push_back(need(key));
    char name[32];
    std::snprintf(name, sizeof name, "record_%03zu", k);
    e.records.push_back(t.column(name).values);
  }
  e.validate();
  return e;
}

}  // namespace eitstore
