#include "hace/features.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "hace/errors.hpp"
#include "numeric_text.hpp"

namespace hace {

namespace {

constexpr std::string_view kMagic = "HACEFEAT";
constexpr std::uint32_t kLabelBits = 32;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

LabeledMatrix parse_binary(std::string_view bytes, const std::string& where) {
  constexpr std::size_t kHeader = 8 + 4 * 4;
  if (bytes.size() < kHeader) throw ValidationError(where + ": truncated header");
  auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = read_u32(p + 8);
  const std::uint32_t rows = read_u32(p + 12);
  const std::uint32_t cols = read_u32(p + 16);
  const std::uint32_t label_bits = read_u32(p + 20);
  if (version != kFeatureFormatVersion)
    throw ValidationError(where + ": unsupported version " + std::to_string(version));
  if (label_bits != kLabelBits)
    throw ValidationError(where + ": unsupported label width " + std::to_string(label_bits));
  if (cols == 0) throw ValidationError(where + ": zero feature dimension");
  const std::size_t record = (static_cast<std::size_t>(cols) + 1) * 4;
  if (bytes.size() != kHeader + record * rows)
    throw ValidationError(where + ": size does not match header");

  LabeledMatrix out{Matrix(rows, cols), std::vector<std::size_t>(rows)};
  const unsigned char* cursor = p + kHeader;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c, cursor += 4)
      out.values(r, c) = static_cast<double>(std::bit_cast<float>(read_u32(cursor)));
    out.labels[r] = read_u32(cursor);
    cursor += 4;
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

LabeledMatrix parse_csv(std::string_view text, char prefix, const std::string& where) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
  }
  if (lines.empty()) throw ValidationError(where + ": malformed header (empty file)");

  auto header = split_commas(lines.front());
  if (header.size() < 2 || header.front() != "label")
    throw ValidationError(where + ": malformed header");
  for (std::size_t c = 1; c < header.size(); ++c)
    if (header[c] != std::string(1, prefix) + std::to_string(c - 1))
      throw ValidationError(where + ": malformed header at column " + std::to_string(c));
  const std::size_t cols = header.size() - 1;

  LabeledMatrix out{Matrix(lines.size() - 1, cols), std::vector<std::size_t>(lines.size() - 1)};
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = split_commas(lines[r]);
    const std::string at = where + ":" + std::to_string(r + 1);
    if (fields.size() != cols + 1) throw ValidationError(at + ": wrong number of fields");
    std::size_t label = 0;
    auto [lp, lec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), label);
    if (lec != std::errc() || lp != fields[0].data() + fields[0].size())
      throw ValidationError(at + ": bad label '" + std::string(fields[0]) + "'");
    out.labels[r - 1] = label;
    for (std::size_t c = 0; c < cols; ++c) {
      auto f = fields[c + 1];
      double v = 0.0;
      auto [fp, fec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (fec != std::errc() || fp != f.data() + f.size())
        throw ValidationError(at + ": bad number '" + std::string(f) + "'");
      if (!std::isfinite(v)) throw ValidationError(at + ": non-finite value");
      out.values(r - 1, c) = v;
    }
  }
  return out;
}

}  // namespace

void FeatureDataset::normalize_rows() {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : row) v *= inv;
  }
}

LabeledMatrix read_labeled_matrix(const std::filesystem::path& path, char column_prefix) {
  const std::string bytes = slurp(path);
  const std::string where = path.string();
  LabeledMatrix out = bytes.starts_with(kMagic) ? parse_binary(bytes, where)
                                                : parse_csv(bytes, column_prefix, where);
  for (double v : out.values.data())
    if (!std::isfinite(v)) throw ValidationError(where + ": non-finite value");
  return out;
}

FeatureDataset load_features(const std::filesystem::path& path,
                             const FeatureLoadOptions& options) {
  auto raw = read_labeled_matrix(path, 'f');
  if (options.num_classes) {
    for (std::size_t r = 0; r < raw.labels.size(); ++r)
      if (raw.labels[r] >= *options.num_classes)
        throw ValidationError(path.string() + ": label " + std::to_string(raw.labels[r]) +
                              " out of range (n=" + std::to_string(*options.num_classes) + ")");
  }
  FeatureDataset data{std::move(raw.values), std::move(raw.labels), options.split};
  if (options.l2_normalize) data.normalize_rows();
  return data;
}

void write_features_binary(const FeatureDataset& data, const std::filesystem::path& path) {
  std::string out(kMagic);
  put_u32(out, kFeatureFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  put_u32(out, static_cast<std::uint32_t>(data.dim()));
  put_u32(out, kLabelBits);
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (double v : data.x.row(r)) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    put_u32(out, static_cast<std::uint32_t>(data.y[r]));
  }
  std::ofstream file(path, std::ios::binary);
  if (!file.write(out.data(), static_cast<std::streamsize>(out.size())))
    throw std::runtime_error("failed writing " + path.string());
}

void write_labeled_matrix_csv(const Matrix& values, const std::vector<std::size_t>& labels,
                              char column_prefix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "label";
  for (std::size_t c = 0; c < values.cols(); ++c) out << ',' << column_prefix << c;
  out << '\n';
  for (std::size_t r = 0; r < values.rows(); ++r) {
    out << labels[r];
    for (double v : values.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_features_csv(const FeatureDataset& data, const std::filesystem::path& path) {
  write_labeled_matrix_csv(data.x, data.y, 'f', path);
}

void check_compatible(const FeatureDataset& train, const FeatureDataset& test) {
  if (train.dim() != test.dim())
    throw ValidationError("feature dimension mismatch: train D=" + std::to_string(train.dim()) +
                          ", test D=" + std::to_string(test.dim()));
}

}  // namespace hace
