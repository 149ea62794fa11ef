#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nngp/dataset.hpp"
#include "nngp/rng.hpp"

namespace nngp {

enum class DataSource { MNIST, CIFAR10, CSV, Synthetic };

/// Loaded image/feature set before normalisation: pixels scaled to [0, 1]
/// (byte 255 -> 1.0) and integer class labels.
struct RawImageSet {
  Eigen::MatrixXd pixels;  // N x D0
  std::vector<int> labels;
  DataSource source = DataSource::Synthetic;

  Eigen::Index n() const { return pixels.rows(); }
  Eigen::Index dim() const { return pixels.cols(); }
};

enum class NormMode { None, UnitNorm, CenterScale };

inline NormMode parse_norm_mode(const std::string& s) {
  if (s == "none") return NormMode::None;
  if (s == "unit_norm") return NormMode::UnitNorm;
  if (s == "center_scale") return NormMode::CenterScale;
  throw std::invalid_argument("unknown normalisation mode '" + s + "'");
}

namespace detail {

inline std::uint32_t read_be_u32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error(path + ": truncated header");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

}  // namespace detail

/// Load the first `limit` examples from a pair of IDX files (big-endian, the
/// published MNIST layout: magic 0x803 for images, 0x801 for labels).
inline RawImageSet load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                                  int limit) {
  if (limit < 1) throw std::invalid_argument("load_mnist_idx: limit must be at least 1");
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot open " + labels_path);

  if (detail::read_be_u32(img, images_path) != 0x00000803u)
    throw std::runtime_error(images_path + ": bad magic, expected IDX image file");
  const std::uint32_t n_img = detail::read_be_u32(img, images_path);
  const std::uint32_t rows = detail::read_be_u32(img, images_path);
  const std::uint32_t cols = detail::read_be_u32(img, images_path);

  if (detail::read_be_u32(lab, labels_path) != 0x00000801u)
    throw std::runtime_error(labels_path + ": bad magic, expected IDX label file");
  const std::uint32_t n_lab = detail::read_be_u32(lab, labels_path);

  if (n_img != n_lab)
    throw std::runtime_error("image/label count mismatch: " + std::to_string(n_img) + " vs " +
                             std::to_string(n_lab));
  if (static_cast<std::uint32_t>(limit) > n_img)
    throw std::runtime_error("requested " + std::to_string(limit) + " examples but files hold " +
                             std::to_string(n_img));

  const Eigen::Index dim = static_cast<Eigen::Index>(rows) * cols;
  RawImageSet set;
  set.source = DataSource::MNIST;
  set.pixels.resize(limit, dim);
  set.labels.resize(limit);

  std::vector<unsigned char> buf(static_cast<std::size_t>(dim));
  for (int i = 0; i < limit; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), dim);
    if (!img) throw std::runtime_error(images_path + ": truncated image data");
    for (Eigen::Index d = 0; d < dim; ++d) set.pixels(i, d) = buf[d] / 255.0;
    char l;
    lab.read(&l, 1);
    if (!lab) throw std::runtime_error(labels_path + ": truncated label data");
    set.labels[i] = static_cast<unsigned char>(l);
  }
  return set;
}

/// Load the first `limit` records from CIFAR-10 binary batches (1 label byte
/// followed by 3072 channel-major pixel bytes per record).
inline RawImageSet load_cifar10_bin(const std::vector<std::string>& batch_paths, int limit) {
  if (limit < 1) throw std::invalid_argument("load_cifar10_bin: limit must be at least 1");
  constexpr Eigen::Index kDim = 3072;
  constexpr std::streamoff kRecord = kDim + 1;

  RawImageSet set;
  set.source = DataSource::CIFAR10;
  set.pixels.resize(limit, kDim);
  set.labels.resize(limit);

  int loaded = 0;
  std::vector<unsigned char> buf(kRecord);
  for (const auto& path : batch_paths) {
    if (loaded == limit) break;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    if (size % kRecord != 0)
      throw std::runtime_error(path + ": size " + std::to_string(size) +
                               " is not a multiple of the 3073-byte record");
    in.seekg(0);
    const std::streamoff n_records = size / kRecord;
    for (std::streamoff r = 0; r < n_records && loaded < limit; ++r) {
      in.read(reinterpret_cast<char*>(buf.data()), kRecord);
      if (!in) throw std::runtime_error(path + ": truncated record");
      set.labels[loaded] = buf[0];
      for (Eigen::Index d = 0; d < kDim; ++d) set.pixels(loaded, d) = buf[d + 1] / 255.0;
      ++loaded;
    }
  }
  if (loaded < limit)
    throw std::runtime_error("requested " + std::to_string(limit) + " records but batches hold " +
                             std::to_string(loaded));
  return set;
}

/// CSV with header x0,...,x{D-1},label; feature cells are reals, label an
/// integer class index.
inline RawImageSet load_csv(const std::string& path, int limit) {
  if (limit < 1) throw std::invalid_argument("load_csv: limit must be at least 1");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (line.rfind("x0,", 0) != 0 || line.find("label") == std::string::npos)
    throw std::runtime_error(path + ": header must be x0,...,label");
  const Eigen::Index dim = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  while (static_cast<int>(rows.size()) < limit && std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<Eigen::Index>(row.size()) != dim + 1)
      throw std::runtime_error(path + ": row " + std::to_string(rows.size() + 1) + " has " +
                               std::to_string(row.size()) + " cells, expected " +
                               std::to_string(dim + 1));
    labels.push_back(static_cast<int>(std::lround(row.back())));
    row.pop_back();
    rows.push_back(std::move(row));
  }
  if (static_cast<int>(rows.size()) < limit)
    throw std::runtime_error(path + ": requested " + std::to_string(limit) + " rows but file holds " +
                             std::to_string(rows.size()));

  RawImageSet set;
  set.source = DataSource::CSV;
  set.pixels.resize(limit, dim);
  for (int i = 0; i < limit; ++i)
    for (Eigen::Index d = 0; d < dim; ++d) set.pixels(i, d) = rows[i][d];
  set.labels = std::move(labels);
  return set;
}

/// 1-D regression data: x evenly spaced over [lo, hi], y = sin(2 pi x) plus
/// Gaussian observation noise of standard deviation noise_sd.
inline Dataset make_sinusoid(int n_train, double lo, double hi, double noise_sd,
                             std::uint64_t seed) {
  if (n_train < 1) throw std::invalid_argument("make_sinusoid: n_train must be at least 1");
  Dataset data;
  data.inputs.resize(n_train, 1);
  data.targets.resize(n_train, 1);
  Rng rng(seed);
  for (int i = 0; i < n_train; ++i) {
    const double x = n_train == 1 ? 0.5 * (lo + hi)
                                  : lo + (hi - lo) * static_cast<double>(i) / (n_train - 1);
    data.inputs(i, 0) = x;
    data.targets(i, 0) = std::sin(2.0 * M_PI * x) + noise_sd * rng.normal();
  }
  data.row_ids = Dataset::default_ids(n_train);
  return data;
}

/// Normalise raw inputs into a Dataset whose targets column carries the raw
/// labels (classification callers re-encode via the task codec).
inline Dataset normalize_inputs(const RawImageSet& set, NormMode mode) {
  if (set.n() < 1) throw std::invalid_argument("normalize_inputs: empty set");
  Dataset data;
  data.inputs = set.pixels;
  switch (mode) {
    case NormMode::None:
      break;
    case NormMode::UnitNorm: {
      // scale each row to unit mean square (<x,x>/D0 = 1), so the
      // dimension-normalised input-layer kernel sees k0(x,x) = 1
      const double target = std::sqrt(static_cast<double>(data.inputs.cols()));
      for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
        const double norm = data.inputs.row(i).norm();
        if (norm == 0.0)
          throw std::invalid_argument("unit_norm: row " + std::to_string(i) + " has zero norm");
        data.inputs.row(i) *= target / norm;
      }
      break;
    }
    case NormMode::CenterScale: {
      const Eigen::RowVectorXd mean = data.inputs.colwise().mean();
      data.inputs.rowwise() -= mean;
      const Eigen::RowVectorXd sd =
          (data.inputs.array().square().colwise().sum() / std::max<Eigen::Index>(1, data.inputs.rows() - 1))
              .sqrt();
      for (Eigen::Index d = 0; d < data.inputs.cols(); ++d)
        if (sd(d) > 0.0) data.inputs.col(d) /= sd(d);
      break;
    }
  }
  data.targets.resize(set.n(), 1);
  for (Eigen::Index i = 0; i < set.n(); ++i) data.targets(i, 0) = set.labels[i];
  data.row_ids = Dataset::default_ids(set.n());
  return data;
}

}  // namespace nngp
