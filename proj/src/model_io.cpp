#include <fstream>

#include "byteio.hpp"
#include "glyphlab/error.hpp"
#include "glyphlab/models.hpp"

namespace glyphlab {

namespace {

constexpr std::uint8_t kGmdMagic[4] = {0x47, 0x4D, 0x44, 0x31};
constexpr std::uint32_t kGmdVersion = 1;

enum class Kind : std::uint8_t { Mlr = 0, Cnn = 1 };

enum class Tag : std::uint8_t { Conv2d = 1, MaxPool2x2 = 2, Relu = 3, Flatten = 4, Dense = 5, Sigmoid = 6 };

void put_shape(detail::LeWriter& w, const Shape& s) {
  w.u32(static_cast<std::uint32_t>(s.size()));
  for (auto e : s) w.u32(static_cast<std::uint32_t>(e));
}

std::uint64_t put_payload(detail::LeWriter& w, const Tensor& a, const Tensor& b) {
  for (double v : a.values()) w.f64(v);
  for (double v : b.values()) w.f64(v);
  return a.size() + b.size();
}

std::uint64_t put_layer(detail::LeWriter& w, const Layer& layer) {
  if (const auto* c = std::get_if<Conv2d>(&layer)) {
    w.u8(static_cast<std::uint8_t>(Tag::Conv2d));
    put_shape(w, c->weight.shape());
    return put_payload(w, c->weight, c->bias);
  }
  if (const auto* d = std::get_if<Dense>(&layer)) {
    w.u8(static_cast<std::uint8_t>(Tag::Dense));
    put_shape(w, d->weight.shape());
    return put_payload(w, d->weight, d->bias);
  }
  if (const auto* f = std::get_if<Flatten>(&layer)) {
    w.u8(static_cast<std::uint8_t>(Tag::Flatten));
    put_shape(w, f->input);
    return 0;
  }
  const Tag tag = std::holds_alternative<MaxPool2x2>(layer) ? Tag::MaxPool2x2
                  : std::holds_alternative<Relu>(layer)     ? Tag::Relu
                                                            : Tag::Sigmoid;
  w.u8(static_cast<std::uint8_t>(tag));
  put_shape(w, {});
  return 0;
}

Tensor get_tensor(detail::LeReader& r, Shape shape) {
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = r.f64();
  return Tensor(std::move(shape), std::move(v));
}

Layer get_layer(detail::LeReader& r, std::uint64_t& payload) {
  const auto tag = static_cast<Tag>(r.u8());
  const std::uint32_t rank = r.u32();
  if (rank > 8) fail(ErrorCode::CorruptFile, "GMD1: implausible shape rank");
  Shape shape(rank);
  for (auto& e : shape) {
    e = r.u32();
    if (e > (1u << 24)) fail(ErrorCode::CorruptFile, "GMD1: implausible extent");
  }
  switch (tag) {
    case Tag::Conv2d: {
      if (rank != 4 || shape[2] != 3 || shape[3] != 3 || shape[0] == 0 || shape[1] == 0)
        fail(ErrorCode::CorruptFile, "GMD1: bad conv2d shape " + shape_string(shape));
      Conv2d c{shape[1], shape[0], get_tensor(r, shape), {}};
      c.bias = get_tensor(r, {shape[0]});
      payload += c.weight.size() + c.bias.size();
      return c;
    }
    case Tag::Dense: {
      if (rank != 2 || shape[0] == 0 || shape[1] == 0) fail(ErrorCode::CorruptFile, "GMD1: bad dense shape");
      Dense d{shape[1], shape[0], get_tensor(r, shape), {}};
      d.bias = get_tensor(r, {shape[0]});
      payload += d.weight.size() + d.bias.size();
      return d;
    }
    case Tag::Flatten:
      if (rank != 3) fail(ErrorCode::CorruptFile, "GMD1: flatten must record [c,h,w]");
      return Flatten{shape};
    case Tag::MaxPool2x2:
    case Tag::Relu:
    case Tag::Sigmoid:
      if (rank != 0) fail(ErrorCode::CorruptFile, "GMD1: parameterless layer with a shape");
      if (tag == Tag::MaxPool2x2) return MaxPool2x2{};
      if (tag == Tag::Relu) return Relu{};
      return Sigmoid{};
  }
  fail(ErrorCode::CorruptFile, "GMD1: unknown layer tag " + std::to_string(static_cast<int>(tag)));
}

// Recovers the input shape and checks that consecutive layers compose into
// a scalar probability.
Shape infer_input_shape(const std::vector<Layer>& layers) {
  std::size_t flat_at = layers.size();
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (std::holds_alternative<Flatten>(layers[i])) {
      flat_at = i;
      break;
    }
  if (flat_at == layers.size()) fail(ErrorCode::CorruptFile, "GMD1: CNN without a flatten layer");
  Shape s = std::get<Flatten>(layers[flat_at]).input;
  for (std::size_t i = flat_at; i-- > 0;) {
    if (std::holds_alternative<MaxPool2x2>(layers[i])) {
      s[1] *= 2;
      s[2] *= 2;
    } else if (const auto* c = std::get_if<Conv2d>(&layers[i])) {
      if (c->out_ch != s[0]) fail(ErrorCode::CorruptFile, "GMD1: conv channels do not compose");
      s[0] = c->in_ch;
    } else if (!std::holds_alternative<Relu>(layers[i])) {
      fail(ErrorCode::CorruptFile, "GMD1: unexpected layer before flatten");
    }
  }
  std::size_t width = shape_size(std::get<Flatten>(layers[flat_at]).input);
  for (std::size_t i = flat_at + 1; i < layers.size(); ++i) {
    if (const auto* d = std::get_if<Dense>(&layers[i])) {
      if (d->in != width) fail(ErrorCode::CorruptFile, "GMD1: dense widths do not compose");
      width = d->out;
    } else if (!std::holds_alternative<Relu>(layers[i]) && !std::holds_alternative<Sigmoid>(layers[i])) {
      fail(ErrorCode::CorruptFile, "GMD1: unexpected layer after flatten");
    }
  }
  if (width != 1 || !std::holds_alternative<Sigmoid>(layers.back()))
    fail(ErrorCode::CorruptFile, "GMD1: CNN must end in a single sigmoid unit");
  if (s[0] != 1) fail(ErrorCode::CorruptFile, "GMD1: CNN input must be single-channel");
  return s;
}

}  // namespace

std::size_t write_gmd(const Model& model, std::ostream& out) {
  detail::LeWriter w(out);
  w.bytes(kGmdMagic, 4);
  w.u32(kGmdVersion);
  std::uint64_t payload = 0;
  if (const auto* mlr = std::get_if<MlrModel>(&model)) {
    w.u8(static_cast<std::uint8_t>(Kind::Mlr));
    w.u32(1);
    payload += put_layer(w, Dense{mlr->num_features(), mlr->num_classes(), mlr->w, mlr->b});
  } else {
    const auto& cnn = std::get<CnnModel>(model);
    w.u8(static_cast<std::uint8_t>(Kind::Cnn));
    w.u32(static_cast<std::uint32_t>(cnn.layers.size()));
    for (const auto& layer : cnn.layers) payload += put_layer(w, layer);
  }
  w.u64(payload);
  return w.count();
}

Model read_gmd(std::istream& in) {
  detail::LeReader r(in, "GMD1");
  std::uint8_t magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kGmdMagic)) fail(ErrorCode::CorruptFile, "GMD1: bad magic");
  const auto version = r.u32();
  if (version != kGmdVersion) fail(ErrorCode::CorruptFile, "GMD1: unsupported version " + std::to_string(version));
  const auto kind = r.u8();
  if (kind > 1) fail(ErrorCode::CorruptFile, "GMD1: unknown model kind");
  const std::uint32_t count = r.u32();
  if (count == 0 || count > 4096) fail(ErrorCode::CorruptFile, "GMD1: implausible layer count");
  std::uint64_t payload = 0;
  std::vector<Layer> layers;
  for (std::uint32_t i = 0; i < count; ++i) layers.push_back(get_layer(r, payload));
  if (r.u64() != payload) fail(ErrorCode::CorruptFile, "GMD1: parameter count check failed");
  r.expect_end();

  if (static_cast<Kind>(kind) == Kind::Mlr) {
    const auto* d = layers.size() == 1 ? std::get_if<Dense>(&layers[0]) : nullptr;
    if (!d || d->out < 2) fail(ErrorCode::CorruptFile, "GMD1: MLR model must be one dense layer with >= 2 classes");
    return MlrModel{d->weight, d->bias, {}};
  }
  CnnModel cnn;
  cnn.input_shape = infer_input_shape(layers);
  cnn.layers = std::move(layers);
  return cnn;
}

std::size_t write_gmd_file(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  const auto n = write_gmd(model, out);
  out.flush();
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
  return n;
}

Model read_gmd_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return read_gmd(in);
}

}  // namespace glyphlab
