#include "csis/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace csis {

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool row_started = false;
  long line = 1;

  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&]() {
    end_field();
    rows.push_back(row);
    row.clear();
    row_started = false;
  };

  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') {
          ++line;
        }
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field.empty() && !field_started) {
          in_quotes = true;
          field_started = true;
          row_started = true;
        } else {
          throw DataError("csv parse error at line " + std::to_string(line) +
                          ": quote inside unquoted field");
        }
        break;
      case ',':
        end_field();
        row_started = true;
        break;
      case '\r':
        break;  // tolerate CRLF
      case '\n':
        ++line;
        if (row_started || field_started || !field.empty() || !row.empty()) {
          end_row();
        }
        break;
      default:
        field.push_back(c);
        field_started = true;
        row_started = true;
        break;
    }
  }
  if (in_quotes) {
    throw DataError("csv parse error: unterminated quoted field");
  }
  if (row_started || !field.empty() || !row.empty()) {
    end_row();
  }
  return rows;
}

std::vector<std::vector<std::string>> parse_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file: " + path);
  }
  return parse_csv(in);
}

namespace {

double parse_number(const std::string& s, size_t row, const std::string& column) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  while (end && *end == ' ') {
    ++end;
  }
  if (end == begin || (end && *end != '\0') || !std::isfinite(v)) {
    throw DataError("non-numeric value '" + s + "' at data row " + std::to_string(row + 1) +
                    ", column '" + column + "'");
  }
  return v;
}

}  // namespace

LoadedCsv load_csv(const std::string& path, const std::string& response,
                   const std::vector<std::string>& conditioning,
                   const LoadOptions& opts) {
  auto rows = parse_csv_file(path);
  if (rows.size() < 2) {
    throw DataError("csv needs a header row and at least one data row: " + path);
  }
  const std::vector<std::string>& header = rows[0];
  const size_t ncol = header.size();
  auto column_index = [&](const std::string& name) -> long {
    for (size_t j = 0; j < ncol; ++j) {
      if (header[j] == name) {
        return static_cast<long>(j);
      }
    }
    return -1;
  };

  long ycol = column_index(response);
  if (ycol < 0) {
    throw DataError("response column '" + response + "' not found in header");
  }
  std::vector<long> cond_cols;
  for (const auto& name : conditioning) {
    long j = column_index(name);
    if (j < 0) {
      throw DataError("conditioning column '" + name + "' not found in header");
    }
    if (j == ycol) {
      throw DataError("conditioning column '" + name + "' is the response");
    }
    if (std::find(cond_cols.begin(), cond_cols.end(), j) != cond_cols.end()) {
      throw DataError("duplicate conditioning column '" + name + "'");
    }
    cond_cols.push_back(j);
  }

  const size_t n = rows.size() - 1;
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != ncol) {
      throw DataError("data row " + std::to_string(i) + " has " +
                      std::to_string(rows[i].size()) + " fields, expected " +
                      std::to_string(ncol));
    }
  }

  LoadedCsv out;
  out.data.y.resize(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    out.data.y[static_cast<Eigen::Index>(i)] =
        parse_number(rows[i + 1][static_cast<size_t>(ycol)], i, response);
  }

  // Conditioning columns first (passed through), then candidates in file order.
  std::vector<long> cand_cols;
  for (size_t j = 0; j < ncol; ++j) {
    long lj = static_cast<long>(j);
    if (lj == ycol ||
        std::find(cond_cols.begin(), cond_cols.end(), lj) != cond_cols.end()) {
      continue;
    }
    cand_cols.push_back(lj);
  }

  std::vector<long> kept_cands;
  std::vector<Eigen::VectorXd> columns;
  columns.reserve(cond_cols.size() + cand_cols.size());
  std::vector<std::string> names;

  for (long j : cond_cols) {
    Eigen::VectorXd col(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
      col[static_cast<Eigen::Index>(i)] =
          parse_number(rows[i + 1][static_cast<size_t>(j)], i, header[static_cast<size_t>(j)]);
    }
    if (opts.center_conditioning) {
      col.array() -= col.mean();
    }
    columns.push_back(std::move(col));
    names.push_back(header[static_cast<size_t>(j)]);
  }
  for (long j : cand_cols) {
    Eigen::VectorXd col(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
      col[static_cast<Eigen::Index>(i)] =
          parse_number(rows[i + 1][static_cast<size_t>(j)], i, header[static_cast<size_t>(j)]);
    }
    double mean = col.mean();
    double var = n > 1 ? (col.array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
    if (var <= 0.0) {
      out.warnings.push_back("excluded constant column '" + header[static_cast<size_t>(j)] + "'");
      continue;
    }
    if (opts.standardize) {
      col = (col.array() - mean) / std::sqrt(var);
    }
    columns.push_back(std::move(col));
    names.push_back(header[static_cast<size_t>(j)]);
    kept_cands.push_back(j);
  }

  if (kept_cands.empty()) {
    throw DataError("no usable candidate columns in " + path);
  }

  out.data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (size_t j = 0; j < columns.size(); ++j) {
    out.data.x.col(static_cast<Eigen::Index>(j)) = columns[j];
  }
  out.data.column_names = names;
  for (size_t k = 0; k < cond_cols.size(); ++k) {
    out.cond.indices.push_back(static_cast<int>(k));
  }
  return out;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) {
    return field;
  }
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') {
      quoted += "\"\"";
    } else {
      quoted.push_back(c);
    }
  }
  quoted.push_back('"');
  return quoted;
}

namespace {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const auto n = data.x.rows();
  const auto p = data.x.cols();
  out << "y";
  for (Eigen::Index j = 0; j < p; ++j) {
    std::string name = static_cast<size_t>(j) < data.column_names.size()
                           ? data.column_names[static_cast<size_t>(j)]
                           : "x" + std::to_string(j + 1);
    out << "," << csv_quote(name);
  }
  out << "\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    out << format_full(data.y[i]);
    for (Eigen::Index j = 0; j < p; ++j) {
      out << "," << format_full(data.x(i, j));
    }
    out << "\n";
  }
}

void write_dataset_csv_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write file: " + path);
  }
  write_dataset_csv(out, data);
}

}  // namespace csis
