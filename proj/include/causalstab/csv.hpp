#pragma once

#include <stdexcept>
#include <string>

#include "causalstab/dataset.hpp"

namespace cstab {

// Named column absent from the header; the CLI maps this to a usage error.
struct ColumnNotFoundError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CsvFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reads a UTF-8, comma-delimited file with a header row. Remaining columns
// (in file order) become features. Rejects non-numeric or missing cells,
// non-binary treatment values, p = 0, and n < 4.
Dataset load_csv(const std::string& path, const std::string& outcome_col,
                 const std::string& treatment_col);

// Inverse of load_csv: features first (file order), then outcome, then
// treatment. Numerics are written with enough digits to round-trip.
void write_csv(const std::string& path, const Dataset& data,
               const std::string& outcome_col = "y",
               const std::string& treatment_col = "z");

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace cstab
