#pragma once

#include <string>

#include "exset/posterior_methods.hpp"
#include "exset/sparse.hpp"

namespace exset {

// Matrix Market coordinate format, real symmetric (general patterns are
// accepted and validated for symmetry).
SparseSymmetricMatrix read_matrix_market(const std::string& path);
Matrix read_matrix_market_dense(const std::string& path);
void write_matrix_market(const std::string& path,
                         const SparseSymmetricMatrix& m);

// Plain CSV, one value per line.
Vector read_csv_vector(const std::string& path);
void write_csv_vector(const std::string& path, const Vector& v);

// Node coordinates: one row per node, comma-separated components.
Matrix read_csv_matrix(const std::string& path);

// Configuration sets: JSON array of
//   {"theta": {...}, "weight": w,
//    "precision_file"|"covariance_file": ..., "mean_file": ...}
// with file paths resolved relative to the JSON file's directory.
ParamConfigSet read_config_set(const std::string& path);

// Stable content digest used by run manifests (fnv1a-64, hex).
std::string file_digest(const std::string& path);

// Shortest decimal form that round-trips a double.
std::string format_double(double v);

}  // namespace exset
