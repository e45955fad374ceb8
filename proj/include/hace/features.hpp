#pragma once

// Feature files for linear probing.
//
// Binary layout (little endian):
//   "HACEFEAT" | u32 version (1) | u32 S | u32 D | u32 label width in bits (32)
//   then S records of D float32 values followed by a u32 label.
// CSV alternative: header `label,f0,...,f{D-1}`, one sample per line.
//
// Prediction dumps reuse both layouts; their CSV columns are named p0, p1, ...

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "hace/matrix.hpp"

namespace hace {

enum class Split { kTrain, kTest };

struct FeatureDataset {
  Matrix x;                        // S x D
  std::vector<std::size_t> y;      // leaf labels
  Split split = Split::kTrain;

  std::size_t size() const { return x.rows(); }
  std::size_t dim() const { return x.cols(); }
  // Scales each row to unit L2 norm; all-zero rows are left alone.
  void normalize_rows();
};

struct FeatureLoadOptions {
  std::optional<std::size_t> num_classes;  // labels must be < this when set
  bool l2_normalize = false;
  Split split = Split::kTrain;
};

inline constexpr std::uint32_t kFeatureFormatVersion = 1;

FeatureDataset load_features(const std::filesystem::path& path,
                             const FeatureLoadOptions& options = {});
void write_features_binary(const FeatureDataset& data, const std::filesystem::path& path);
void write_features_csv(const FeatureDataset& data, const std::filesystem::path& path);

// Throws when train and test disagree on feature dimension.
void check_compatible(const FeatureDataset& train, const FeatureDataset& test);

// Shared reader behind features and prediction dumps. `column_prefix` is the
// expected CSV column stem ('f' for features, 'p' for predictions).
struct LabeledMatrix {
  Matrix values;
  std::vector<std::size_t> labels;
};
LabeledMatrix read_labeled_matrix(const std::filesystem::path& path, char column_prefix);
void write_labeled_matrix_csv(const Matrix& values, const std::vector<std::size_t>& labels,
                              char column_prefix, const std::filesystem::path& path);

}  // namespace hace
