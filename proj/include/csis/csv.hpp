#pragma once

// CSV ingestion (RFC-style quoting, header required) and dataset export.
// Candidate columns are standardized to sample mean 0 / variance 1 on load,
// matching the convention the screening statistics assume; conditioning
// columns are passed through (optionally centered).

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "csis/screening.hpp"

namespace csis {

// User-data problems (missing files, malformed cells, unknown columns).
// The CLI maps this to its data-error exit code.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw parse: rows of string fields.  Quoted fields may contain commas,
// doubled quotes, and embedded newlines.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);
std::vector<std::vector<std::string>> parse_csv_file(const std::string& path);

struct LoadOptions {
  bool standardize = true;   // standardize candidate columns
  bool center_conditioning = false;
};

struct LoadedCsv {
  Dataset data;                      // conditioning columns first, then candidates
  ConditioningSet cond;              // indices into data.x
  std::vector<std::string> warnings; // e.g. excluded constant columns
};

// Header-addressed load: `response` names the y column, `conditioning` the
// always-included columns; every other column is a screening candidate.
// Constant candidate columns are excluded with a warning (they cannot be
// standardized); any non-numeric cell raises DataError with its location.
LoadedCsv load_csv(const std::string& path, const std::string& response,
                   const std::vector<std::string>& conditioning,
                   const LoadOptions& opts = {});

// Export a dataset as CSV with the response in a column named "y".
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv_file(const std::string& path, const Dataset& data);

// Quote a field per RFC rules if it contains a comma, quote, or newline.
std::string csv_quote(const std::string& field);

}  // namespace csis
