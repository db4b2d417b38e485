#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crlm/error.hpp"
#include "crlm/survival.hpp"

namespace crlm::survstats {

// Column-major cohort: one column per named covariate.
struct CohortTable {
  std::vector<std::string> ids;
  std::vector<SurvivalLabel> labels;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t size() const { return ids.size(); }

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return columns[k];
    throw InvalidArgument("cohort: no covariate named '" + name + "'");
  }

  void add_column(std::string name, std::vector<double> values) {
    if (values.size() != ids.size()) throw InvalidArgument("cohort: column '" + name + "' has wrong length");
    names.push_back(std::move(name));
    columns.push_back(std::move(values));
  }

  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& l : labels) t.push_back(l.time);
    return t;
  }
  std::vector<bool> events() const {
    std::vector<bool> e;
    for (const auto& l : labels) e.push_back(l.event);
    return e;
  }
  std::size_t event_count() const {
    std::size_t n = 0;
    for (const auto& l : labels) n += l.event ? 1 : 0;
    return n;
  }

  CohortTable subset(const std::vector<std::size_t>& rows) const {
    CohortTable out;
    out.names = names;
    out.columns.resize(columns.size());
    for (auto r : rows) {
      out.ids.push_back(ids.at(r));
      out.labels.push_back(labels.at(r));
      for (std::size_t k = 0; k < columns.size(); ++k) out.columns[k].push_back(columns[k][r]);
    }
    return out;
  }

  void validate() const {
    if (labels.size() != ids.size()) throw InvalidArgument("cohort: ids/labels length mismatch");
    if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size())
      throw InvalidArgument("cohort: duplicate patient ids");
    if (columns.size() != names.size()) throw InvalidArgument("cohort: names/columns mismatch");
    for (const auto& c : columns)
      if (c.size() != ids.size()) throw InvalidArgument("cohort: ragged covariate column");
    for (const auto& l : labels) crlm::validate(l);
  }
};

// CSV: patient_id,time,event,<covariates...>
inline void write_cohort_csv(std::ostream& os, const CohortTable& t) {
  os << "patient_id,time,event";
  for (const auto& n : t.names) os << "," << n;
  os << "\n" << std::setprecision(17);
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << t.ids[i] << "," << t.labels[i].time << "," << (t.labels[i].event ? 1 : 0);
    for (const auto& c : t.columns) os << "," << c[i];
    os << "\n";
  }
}

inline CohortTable read_cohort_csv(std::istream& is) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(is, line)) throw IoError(IoErrorKind::bad_header, "cohort csv: missing header");
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "patient_id" || header[1] != "time" || header[2] != "event")
    throw IoError(IoErrorKind::bad_header, "cohort csv: header must start with patient_id,time,event");
  CohortTable t;
  t.names.assign(header.begin() + 3, header.end());
  t.columns.resize(t.names.size());
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw IoError(IoErrorKind::truncated_payload, "cohort csv: line " + std::to_string(lineno) + " has wrong width");
    try {
      t.ids.push_back(cells[0]);
      t.labels.push_back({std::stod(cells[1]), std::stoi(cells[2]) != 0});
      for (std::size_t k = 0; k < t.names.size(); ++k) t.columns[k].push_back(std::stod(cells[3 + k]));
    } catch (const std::logic_error&) {
      throw IoError(IoErrorKind::bad_header, "cohort csv: bad value on line " + std::to_string(lineno));
    }
  }
  t.validate();
  return t;
}

inline void save_cohort_csv(const std::filesystem::path& p, const CohortTable& t) {
  std::ofstream os(p);
  if (!os) throw IoError(IoErrorKind::write_failed, "cannot write " + p.string());
  write_cohort_csv(os, t);
}

inline CohortTable load_cohort_csv(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError(IoErrorKind::not_found, "cannot open " + p.string());
  return read_cohort_csv(is);
}

}  // namespace crlm::survstats
