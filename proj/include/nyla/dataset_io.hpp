#pragma once

#include <stdexcept>
#include <string>

#include "nyla/kernels.hpp"

namespace nyla {

/// Parse or format failure on a dataset file; the message carries the line
/// number where applicable.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DatasetFormat { csv, sparse_index_value };

DatasetFormat parse_format(const std::string& name);

/// Load a dataset.
///
/// csv: one row per point, comma-separated. If the file has >= 2 columns and
/// every entry of the last column is +-1, that column is taken as labels.
///
/// sparse-index-value: "label idx:val idx:val ..." with 1-based indices
/// (libsvm style); dimension is the largest index seen.
///
/// Labels are mapped to {-1,+1}: values already in {-1,+1} pass through,
/// otherwise exactly two distinct values are required and the smaller maps
/// to -1. Throws io_error on parse problems (with line number), inconsistent
/// dimensions, or more than two label classes.
Dataset ingest(const std::string& path, DatasetFormat format);

/// Write a dataset in csv form (used by round-trip tests and experiments).
void write_csv(const std::string& path, const Dataset& data);

}  // namespace nyla
