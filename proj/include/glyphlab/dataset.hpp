#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "glyphlab/tensor.hpp"

namespace glyphlab {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Images in [0,1] as [n, h, w]; labels index into class_names, which is
/// sorted by code point and duplicate-free.
struct LabeledDataset {
  Tensor images{Shape{0, 0, 0}};
  std::vector<std::uint32_t> labels;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t height() const { return images.extent(1); }
  std::size_t width() const { return images.extent(2); }
  std::size_t num_classes() const noexcept { return class_names.size(); }
  std::vector<std::size_t> class_counts() const;

  /// Throws Argument if any invariant is broken.
  void validate() const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

struct SplitSpec {
  double train_frac = 0.70;
  double val_frac = 0.15;
  double test_frac = 0.15;
  std::uint64_t seed = 0;
};

struct Split {
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;
};

// Binary "P5" graymap with maxval 255. Header comments are accepted.
GrayImage load_pgm(std::span<const std::uint8_t> bytes);
GrayImage load_pgm_file(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

/// Center-aligned bilinear resampling with edge clamping, rounded half-up.
GrayImage resize_bilinear(const GrayImage& img, std::size_t out_w, std::size_t out_h);

/// root/<class>/<name>.pgm -> side x side images scaled to [0,1].
LabeledDataset ingest_dir(const std::filesystem::path& root, std::size_t side);

Split split_stratified(const LabeledDataset& ds, const SplitSpec& spec);

/// Samples whose class is in `names`, relabelled against the sorted selection.
LabeledDataset select_classes(const LabeledDataset& ds, const std::vector<std::string>& names);
LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> indices);

/// Pixel byte on the original 0..255 scale.
std::uint8_t to_byte(double v) noexcept;
GrayImage image_at(const LabeledDataset& ds, std::size_t i);

// GLY1 container, little-endian.
std::size_t write_gly(const LabeledDataset& ds, std::ostream& out);
LabeledDataset read_gly(std::istream& in);
std::size_t write_gly_file(const LabeledDataset& ds, const std::filesystem::path& path);
LabeledDataset read_gly_file(const std::filesystem::path& path);

}  // namespace glyphlab
