#include "causalstab/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace cstab {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

double parse_cell(const std::string& cell, int row, const std::string& col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || cell.empty()) {
    throw CsvFormatError("non-numeric cell in column '" + col + "' at data row " +
                         std::to_string(row));
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& outcome_col,
                 const std::string& treatment_col) {
  std::ifstream in(path);
  if (!in) throw CsvFormatError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw CsvFormatError("empty file: " + path);
  const std::vector<std::string> header = split_line(line);

  int outcome_idx = -1;
  int treatment_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == outcome_col) outcome_idx = static_cast<int>(j);
    if (header[j] == treatment_col) treatment_idx = static_cast<int>(j);
  }
  if (outcome_idx < 0) throw ColumnNotFoundError("outcome column '" + outcome_col + "' not found");
  if (treatment_idx < 0) {
    throw ColumnNotFoundError("treatment column '" + treatment_col + "' not found");
  }
  if (outcome_idx == treatment_idx) {
    throw ColumnNotFoundError("outcome and treatment must be distinct columns");
  }

  std::vector<std::string> names;
  std::vector<int> feature_idx;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<int>(j) == outcome_idx || static_cast<int>(j) == treatment_idx) continue;
    names.push_back(header[j]);
    feature_idx.push_back(static_cast<int>(j));
  }
  if (names.empty()) throw CsvFormatError("p = 0: no feature columns besides outcome/treatment");

  std::vector<std::vector<double>> rows;
  std::vector<double> y_vals;
  std::vector<int> z_vals;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw CsvFormatError("row " + std::to_string(row) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(header.size()));
    }
    std::vector<double> feat(names.size());
    for (std::size_t k = 0; k < feature_idx.size(); ++k) {
      feat[k] = parse_cell(cells[static_cast<std::size_t>(feature_idx[k])], row, names[k]);
    }
    y_vals.push_back(parse_cell(cells[static_cast<std::size_t>(outcome_idx)], row, outcome_col));
    double zv = parse_cell(cells[static_cast<std::size_t>(treatment_idx)], row, treatment_col);
    if (zv != 0.0 && zv != 1.0) {
      throw CsvFormatError("treatment not binary at data row " + std::to_string(row));
    }
    z_vals.push_back(static_cast<int>(zv));
    rows.push_back(std::move(feat));
    ++row;
  }
  // Minimum 4 file rows: the header plus 3 data rows.
  if (row < 3) {
    throw CsvFormatError("need at least 4 rows (header plus 3 data rows), got " +
                         std::to_string(row) + " data rows");
  }

  Dataset data;
  data.X.resize(row, static_cast<Eigen::Index>(names.size()));
  data.y.resize(row);
  data.z.resize(row);
  for (int i = 0; i < row; ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      data.X(i, static_cast<Eigen::Index>(j)) = rows[static_cast<std::size_t>(i)][j];
    }
    data.y[i] = y_vals[static_cast<std::size_t>(i)];
    data.z[i] = z_vals[static_cast<std::size_t>(i)];
  }
  data.feature_names = std::move(names);
  data.validate();
  return data;
}

void write_csv(const std::string& path, const Dataset& data,
               const std::string& outcome_col, const std::string& treatment_col) {
  std::ofstream out(path);
  if (!out) throw CsvFormatError("cannot write file: " + path);
  for (const auto& name : data.feature_names) out << name << ',';
  out << outcome_col << ',' << treatment_col << '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.p(); ++j) out << format_double(data.X(i, j)) << ',';
    out << format_double(data.y[i]) << ',' << data.z[i] << '\n';
  }
}

std::string format_double(double v) {
  char buf[40];
  // Try increasing precision until the value round-trips.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return std::string(buf);
}

}  // namespace cstab
