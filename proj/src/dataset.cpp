#include "glyphlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <set>

#include "byteio.hpp"
#include "glyphlab/error.hpp"
#include "glyphlab/rng.hpp"

namespace glyphlab {

namespace fs = std::filesystem;

namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Reads one unsigned decimal header field, skipping whitespace and '#' comments.
std::size_t pgm_field(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
    fail(ErrorCode::CorruptFile, "malformed PGM header");
  std::size_t v = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    v = v * 10 + (bytes[pos] - '0');
    if (v > (std::size_t{1} << 31)) fail(ErrorCode::CorruptFile, "PGM header value too large");
    ++pos;
  }
  return v;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

bool has_pgm_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm";
}

}  // namespace

GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    fail(ErrorCode::UnsupportedFormat, "not a binary P5 graymap");
  std::size_t pos = 2;
  if (pos < bytes.size() && !is_space(bytes[pos]) && bytes[pos] != '#')
    fail(ErrorCode::UnsupportedFormat, "not a binary P5 graymap");
  GrayImage img;
  img.width = pgm_field(bytes, pos);
  img.height = pgm_field(bytes, pos);
  const std::size_t maxval = pgm_field(bytes, pos);
  if (img.width == 0 || img.height == 0) fail(ErrorCode::CorruptFile, "PGM with zero extent");
  if (maxval != 255) fail(ErrorCode::UnsupportedDepth, "PGM maxval " + std::to_string(maxval) + " (need 255)");
  if (pos >= bytes.size() || !is_space(bytes[pos])) fail(ErrorCode::CorruptFile, "truncated PGM header");
  ++pos;
  const std::size_t need = img.width * img.height;
  if (bytes.size() - pos < need)
    fail(ErrorCode::CorruptFile,
         "PGM payload has " + std::to_string(bytes.size() - pos) + " of " + std::to_string(need) + " bytes");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return img;
}

GrayImage load_pgm_file(const fs::path& path) {
  const auto bytes = read_file(path);
  return load_pgm(bytes);
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, std::size_t out_w, std::size_t out_h) {
  require(out_w >= 1 && out_h >= 1, ErrorCode::Argument, "resize target must be at least 1x1");
  require(img.width >= 1 && img.height >= 1 && img.pixels.size() == img.width * img.height, ErrorCode::Argument,
          "resize of malformed image");
  GrayImage out{out_w, out_h, std::vector<std::uint8_t>(out_w * out_h)};
  const double sx_scale = static_cast<double>(img.width) / static_cast<double>(out_w);
  const double sy_scale = static_cast<double>(img.height) / static_cast<double>(out_h);
  const double max_x = static_cast<double>(img.width - 1);
  const double max_y = static_cast<double>(img.height - 1);
  auto px = [&](std::size_t x, std::size_t y) { return static_cast<double>(img.pixels[y * img.width + x]); };

  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const double sy = std::clamp((static_cast<double>(oy) + 0.5) * sy_scale - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double sx = std::clamp((static_cast<double>(ox) + 0.5) * sx_scale - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - static_cast<double>(x0);
      const double top = px(x0, y0) + fx * (px(x1, y0) - px(x0, y0));
      const double bottom = px(x0, y1) + fx * (px(x1, y1) - px(x0, y1));
      const double v = top + fy * (bottom - top);
      out.pixels[oy * out_w + ox] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (auto l : labels)
    if (l < counts.size()) ++counts[l];
  return counts;
}

void LabeledDataset::validate() const {
  require(images.rank() == 3, ErrorCode::Argument, "dataset images must be [n,h,w]");
  require(images.extent(0) == labels.size(), ErrorCode::Argument, "dataset label count differs from image count");
  for (std::size_t i = 1; i < class_names.size(); ++i)
    require(class_names[i - 1] < class_names[i], ErrorCode::Argument,
            "class names must be sorted and unique: '" + class_names[i - 1] + "', '" + class_names[i] + "'");
  for (auto l : labels)
    require(l < class_names.size(), ErrorCode::Argument, "label " + std::to_string(l) + " has no class name");
}

LabeledDataset ingest_dir(const fs::path& root, std::size_t side) {
  require(side >= 1, ErrorCode::Argument, "side must be >= 1");
  std::error_code ec;
  if (!fs::is_directory(root, ec)) fail(ErrorCode::Io, "not a directory: " + root.string());

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    class_dirs.push_back(entry.path());
  }
  // std::string ordering on UTF-8 bytes equals code point ordering.
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  if (class_dirs.empty()) fail(ErrorCode::EmptyDataset, "no class subdirectories under " + root.string());

  LabeledDataset ds;
  std::vector<double> pixels;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    ds.class_names.push_back(class_dirs[c].filename().string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[c]))
      if (entry.is_regular_file() && has_pgm_extension(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    for (const auto& file : files) {
      GrayImage img;
      try {
        img = load_pgm_file(file);
      } catch (const Error& e) {
        fail(ErrorCode::CorruptFile, file.string() + ": " + e.what());
      }
      const GrayImage sized = (img.width == side && img.height == side) ? img : resize_bilinear(img, side, side);
      for (auto p : sized.pixels) pixels.push_back(static_cast<double>(p) / 255.0);
      ds.labels.push_back(static_cast<std::uint32_t>(c));
    }
  }
  if (ds.labels.empty()) fail(ErrorCode::EmptyDataset, "no .pgm images under " + root.string());
  ds.images = Tensor({ds.labels.size(), side, side}, std::move(pixels));
  return ds;
}

LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> indices) {
  const std::size_t h = ds.height(), w = ds.width();
  LabeledDataset out;
  out.class_names = ds.class_names;
  std::vector<double> pixels;
  pixels.reserve(indices.size() * h * w);
  for (auto i : indices) {
    require(i < ds.size(), ErrorCode::Argument, "subset index out of range");
    const auto slab = ds.images.slab(i);
    pixels.insert(pixels.end(), slab.begin(), slab.end());
    out.labels.push_back(ds.labels[i]);
  }
  out.images = Tensor({indices.size(), h, w}, std::move(pixels));
  return out;
}

Split split_stratified(const LabeledDataset& ds, const SplitSpec& spec) {
  require(spec.train_frac > 0 && spec.val_frac > 0 && spec.test_frac > 0, ErrorCode::Argument,
          "split fractions must be positive");
  require(std::abs(spec.train_frac + spec.val_frac + spec.test_frac - 1.0) <= 1e-9, ErrorCode::Argument,
          "split fractions must sum to 1");
  ds.validate();

  std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);

  Rng rng(spec.seed);
  std::vector<std::size_t> train, val, test;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& members = by_class[c];
    const std::size_t n = members.size();
    if (n < 3)
      fail(ErrorCode::Stratification,
           "class '" + ds.class_names[c] + "' has " + std::to_string(n) + " samples (need >= 3)");
    const auto perm = permutation(rng, n);
    // The 1e-9 slack keeps products such as 10 * 0.7 from flooring to 6.
    const auto cut1 = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.train_frac + 1e-9));
    const auto cut2 = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * (spec.train_frac + spec.val_frac) + 1e-9));
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = members[perm[k]];
      (k < cut1 ? train : k < cut2 ? val : test).push_back(idx);
    }
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());
  return {subset(ds, train), subset(ds, val), subset(ds, test)};
}

LabeledDataset select_classes(const LabeledDataset& ds, const std::vector<std::string>& names) {
  require(!names.empty(), ErrorCode::Argument, "empty class selection");
  std::vector<std::string> chosen = names;
  std::sort(chosen.begin(), chosen.end());
  require(std::adjacent_find(chosen.begin(), chosen.end()) == chosen.end(), ErrorCode::Argument,
          "duplicate class in selection");
  std::map<std::uint32_t, std::uint32_t> remap;
  for (std::uint32_t k = 0; k < chosen.size(); ++k) {
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), chosen[k]);
    if (it == ds.class_names.end()) fail(ErrorCode::Argument, "unknown class '" + chosen[k] + "'");
    remap[static_cast<std::uint32_t>(it - ds.class_names.begin())] = k;
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (remap.count(ds.labels[i])) keep.push_back(i);
  LabeledDataset out = subset(ds, keep);
  for (auto& l : out.labels) l = remap.at(l);
  out.class_names = std::move(chosen);
  return out;
}

std::uint8_t to_byte(double v) noexcept {
  const double s = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(s);
}

GrayImage image_at(const LabeledDataset& ds, std::size_t i) {
  GrayImage img{ds.width(), ds.height(), {}};
  const auto slab = ds.images.slab(i);
  img.pixels.reserve(slab.size());
  for (double v : slab) img.pixels.push_back(to_byte(v));
  return img;
}

namespace {
constexpr std::uint8_t kGlyMagic[4] = {0x47, 0x4C, 0x59, 0x31};
constexpr std::uint32_t kGlyVersion = 1;
}  // namespace

std::size_t write_gly(const LabeledDataset& ds, std::ostream& out) {
  ds.validate();
  require(!ds.class_names.empty(), ErrorCode::Argument, "GLY1 needs at least one class");
  require(ds.num_classes() <= 65536, ErrorCode::Argument, "GLY1 labels are 16-bit");
  const auto u32max = std::numeric_limits<std::uint32_t>::max();
  require(ds.size() <= u32max && ds.height() <= u32max && ds.width() <= u32max, ErrorCode::Argument,
          "dataset too large for GLY1");

  detail::LeWriter w(out);
  w.bytes(kGlyMagic, 4);
  w.u32(kGlyVersion);
  w.u32(static_cast<std::uint32_t>(ds.size()));
  w.u32(static_cast<std::uint32_t>(ds.height()));
  w.u32(static_cast<std::uint32_t>(ds.width()));
  w.u32(static_cast<std::uint32_t>(ds.num_classes()));
  for (const auto& name : ds.class_names) {
    require(name.size() <= 0xFFFF, ErrorCode::Argument, "class name too long for GLY1");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
  }
  for (auto l : ds.labels) w.u16(static_cast<std::uint16_t>(l));
  std::vector<std::uint8_t> pixels;
  pixels.reserve(ds.images.size());
  for (double v : ds.images.values()) pixels.push_back(to_byte(v));
  w.bytes(pixels.data(), pixels.size());
  return w.count();
}

LabeledDataset read_gly(std::istream& in) {
  detail::LeReader r(in, "GLY1");
  std::uint8_t magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kGlyMagic)) fail(ErrorCode::CorruptFile, "GLY1: bad magic");
  const auto version = r.u32();
  if (version != kGlyVersion) fail(ErrorCode::CorruptFile, "GLY1: unsupported version " + std::to_string(version));
  const std::size_t n = r.u32(), h = r.u32(), w = r.u32(), n_classes = r.u32();
  if (n_classes == 0) fail(ErrorCode::CorruptFile, "GLY1: empty class table");
  if (n > 0 && (h == 0 || w == 0)) fail(ErrorCode::CorruptFile, "GLY1: zero image extent");

  LabeledDataset ds;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const std::size_t len = r.u16();
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    if (!ds.class_names.empty() && !(ds.class_names.back() < name))
      fail(ErrorCode::CorruptFile, "GLY1: class table not sorted/unique");
    ds.class_names.push_back(std::move(name));
  }
  ds.labels.resize(n);
  for (auto& l : ds.labels) {
    l = r.u16();
    if (l >= n_classes) fail(ErrorCode::CorruptFile, "GLY1: label out of range");
  }
  // Read pixels in bounded chunks so a lying header cannot force a huge allocation.
  const std::size_t total = n * h * w;
  if (h != 0 && w != 0 && n != 0 && total / n / h != w) fail(ErrorCode::CorruptFile, "GLY1: size overflow");
  std::vector<double> values;
  std::vector<std::uint8_t> chunk;
  for (std::size_t done = 0; done < total;) {
    const std::size_t take = std::min<std::size_t>(total - done, 1 << 20);
    chunk.resize(take);
    r.bytes(chunk.data(), take);
    for (auto b : chunk) values.push_back(static_cast<double>(b) / 255.0);
    done += take;
  }
  r.expect_end();
  ds.images = Tensor({n, h, w}, std::move(values));
  return ds;
}

std::size_t write_gly_file(const LabeledDataset& ds, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  const auto n = write_gly(ds, out);
  out.flush();
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
  return n;
}

LabeledDataset read_gly_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return read_gly(in);
}

}  // namespace glyphlab
