#include "glyphlab/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "glyphlab/error.hpp"

namespace glyphlab {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void svg_open(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n"
      << "<title>" << escape_xml(title) << "</title>\n"
      << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"#ffffff\"/>\n";
}

void svg_axes(std::ostream& out, double x0, double y0, double x1, double y1) {
  out << "<line x1=\"" << px(x0) << "\" y1=\"" << px(y1) << "\" x2=\"" << px(x1) << "\" y2=\"" << px(y1)
      << "\" stroke=\"#000000\"/>\n"
      << "<line x1=\"" << px(x0) << "\" y1=\"" << px(y0) << "\" x2=\"" << px(x0) << "\" y2=\"" << px(y1)
      << "\" stroke=\"#000000\"/>\n";
}

void svg_legend(std::ostream& out, std::span<const std::string> names, double x, double y) {
  for (std::size_t k = 0; k < names.size(); ++k) {
    const double yy = y + 16.0 * static_cast<double>(k);
    out << "<rect x=\"" << px(x) << "\" y=\"" << px(yy - 9) << "\" width=\"10\" height=\"10\" fill=\""
        << class_color(k, names.size()) << "\"/>\n"
        << "<text x=\"" << px(x + 14) << "\" y=\"" << px(yy) << "\" font-size=\"11\">" << escape_xml(names[k])
        << "</text>\n";
  }
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string class_color(std::size_t k, std::size_t count) {
  const double hue = count <= 1 ? 0.0 : 240.0 * static_cast<double>(k) / static_cast<double>(count - 1);
  // HSV with s = 1, v = 0.85.
  const double v = 0.85, c = v;
  const double hp = hue / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  char buf[8];
  auto byte = [](double t) { return static_cast<int>(std::lround(t * 255.0)); };
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", byte(r), byte(g), byte(b));
  return buf;
}

void write_history_csv(const TrainHistory& h, std::ostream& out) {
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (std::size_t e = 0; e < h.epochs(); ++e)
    out << e << ',' << format_real(h.train_loss[e]) << ',' << format_real(h.train_acc[e]) << ','
        << format_real(h.val_loss[e]) << ',' << format_real(h.val_acc[e]) << '\n';
}

void write_embedding_csv(const Embedding& e, std::span<const std::uint32_t> labels,
                         std::span<const std::string> class_names, std::ostream& out) {
  const std::size_t n = e.y.extent(0), dims = e.y.extent(1);
  require(labels.size() == n, ErrorCode::Argument, "embedding/label length mismatch");
  static const char* kAxis[] = {"x", "y", "z"};
  for (std::size_t d = 0; d < dims; ++d) out << (d < 3 ? std::string(kAxis[d]) : "d" + std::to_string(d + 1)) << ',';
  out << "label,class_name\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dims; ++d) out << format_real(e.y[i * dims + d]) << ',';
    out << labels[i] << ',' << csv_field(class_names[labels[i]]) << '\n';
  }
  for (std::size_t t = 0; t < e.kl_history.size(); ++t) out << "#kl," << t << ',' << format_real(e.kl_history[t]) << '\n';
}

void write_scatter_svg(const Embedding& e, std::span<const std::uint32_t> labels,
                       std::span<const std::string> class_names, std::ostream& out) {
  const std::size_t n = e.y.extent(0), dims = e.y.extent(1);
  require(labels.size() == n, ErrorCode::Argument, "embedding/label length mismatch");
  const double x0 = 60, y0 = 40, x1 = 660, y1 = 560;
  double lo[2] = {0, 0}, hi[2] = {1, 1};
  for (std::size_t d = 0; d < 2 && d < dims; ++d) {
    lo[d] = std::numeric_limits<double>::infinity();
    hi[d] = -lo[d];
    for (std::size_t i = 0; i < n; ++i) {
      lo[d] = std::min(lo[d], e.y[i * dims + d]);
      hi[d] = std::max(hi[d], e.y[i * dims + d]);
    }
    if (!(hi[d] > lo[d])) hi[d] = lo[d] + 1.0;
  }
  svg_open(out, "tSNE embedding (axes 1-2)");
  svg_axes(out, x0, y0, x1, y1);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = e.y[i * dims];
    const double b = dims > 1 ? e.y[i * dims + 1] : 0.0;
    const double sx = x0 + (a - lo[0]) / (hi[0] - lo[0]) * (x1 - x0);
    const double sy = y1 - (b - lo[1]) / (hi[1] - lo[1]) * (y1 - y0);
    out << "<circle cx=\"" << px(sx) << "\" cy=\"" << px(sy) << "\" r=\"3\" fill=\""
        << class_color(labels[i], class_names.size()) << "\"/>\n";
  }
  svg_legend(out, class_names, 680, 50);
  out << "</svg>\n";
}

void write_distmap_csv(const ClusteredMap& map, std::ostream& out) {
  const std::size_t n = map.order.size();
  out << "id";
  for (auto id : map.order) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << map.order[i];
    for (std::size_t j = 0; j < n; ++j) out << ',' << format_real(map.reordered[i * n + j]);
    out << '\n';
  }
}

void write_distmap_svg(const ClusteredMap& map, std::span<const std::string> class_names, std::ostream& out) {
  const std::size_t n = map.order.size();
  const double ribbon = 14.0, gap = 2.0;
  const double x0 = 60 + ribbon + gap, y0 = 30 + ribbon + gap;
  const double size = kHeight - y0 - 20;
  const double cell = n ? size / static_cast<double>(n) : size;
  double dmax = 0.0;
  for (double v : map.reordered) dmax = std::max(dmax, v);
  if (dmax <= 0) dmax = 1.0;

  svg_open(out, "Clustered distance map");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string color = class_color(map.ribbon[i], class_names.size());
    const double off = static_cast<double>(i) * cell;
    out << "<rect class=\"ribbon\" x=\"" << px(x0 + off) << "\" y=\"" << px(y0 - ribbon - gap) << "\" width=\""
        << px(cell) << "\" height=\"" << px(ribbon) << "\" fill=\"" << color << "\"/>\n"
        << "<rect class=\"ribbon\" x=\"" << px(x0 - ribbon - gap) << "\" y=\"" << px(y0 + off) << "\" width=\""
        << px(ribbon) << "\" height=\"" << px(cell) << "\" fill=\"" << color << "\"/>\n";
  }
  // Darker cells are closer pairs.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const int g = static_cast<int>(std::lround(255.0 * map.reordered[i * n + j] / dmax));
      char color[8];
      std::snprintf(color, sizeof color, "#%02x%02x%02x", g, g, g);
      out << "<rect x=\"" << px(x0 + static_cast<double>(j) * cell) << "\" y=\""
          << px(y0 + static_cast<double>(i) * cell) << "\" width=\"" << px(cell) << "\" height=\"" << px(cell)
          << "\" fill=\"" << color << "\"/>\n";
    }
  }
  svg_legend(out, class_names, x0 + size + 20, y0 + 10);
  out << "</svg>\n";
}

Evaluation evaluate(const Model& model, const LabeledDataset& data) {
  data.validate();
  Evaluation ev;
  ev.class_names = data.class_names;
  const std::size_t n = data.size();
  require(n > 0, ErrorCode::Argument, "evaluation set is empty");
  Tensor probs;
  std::vector<std::uint32_t> predicted(n);
  double loss = 0.0;
  if (const auto* mlr = std::get_if<MlrModel>(&model)) {
    require(mlr->num_classes() == data.num_classes(), ErrorCode::Dimension,
            "model has " + std::to_string(mlr->num_classes()) + " classes, data has " +
                std::to_string(data.num_classes()));
    probs = predict_proba(*mlr, data.images);
    const std::size_t c = mlr->num_classes();
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = probs.slab(i);
      predicted[i] = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
      loss -= std::log(std::max(row[data.labels[i]], 1e-12));
    }
    (void)c;
  } else {
    const auto& cnn = std::get<CnnModel>(model);
    require(data.num_classes() == 2, ErrorCode::Dimension, "CNN models score exactly 2 classes");
    const Tensor p = predict_proba(cnn, data.images);
    probs = Tensor({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
      probs[2 * i] = 1.0 - p[i];
      probs[2 * i + 1] = p[i];
      predicted[i] = p[i] > 0.5 ? 1 : 0;
      loss += bce_loss(p[i], static_cast<double>(data.labels[i]));
    }
  }
  ev.loss = loss / static_cast<double>(n);
  ev.auc = macro_auc_ovr(probs, data.labels, data.class_names);
  const std::size_t c = data.num_classes();
  std::vector<double> col(n);
  std::vector<std::uint8_t> bin(n);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = probs[i * c + k];
      bin[i] = data.labels[i] == k;
    }
    ev.curves.push_back(roc_curve(col, bin));
  }
  ev.confusion = confusion_matrix(predicted, data.labels, c);
  ev.accuracy = accuracy(ev.confusion);
  return ev;
}

void write_evaluation_csv(const Evaluation& ev, std::ostream& out) {
  out << "metric,class,value\n";
  for (std::size_t k = 0; k < ev.class_names.size(); ++k)
    out << "auc," << csv_field(ev.class_names[k]) << ',' << format_real(ev.auc.per_class[k]) << '\n';
  out << "macro_auc,," << format_real(ev.auc.macro) << '\n'
      << "accuracy,," << format_real(ev.accuracy) << '\n'
      << "loss,," << format_real(ev.loss) << '\n';
  out << "confusion";
  for (const auto& name : ev.class_names) out << ',' << csv_field(name);
  out << '\n';
  for (std::size_t t = 0; t < ev.confusion.classes; ++t) {
    out << csv_field(ev.class_names[t]);
    for (std::size_t p = 0; p < ev.confusion.classes; ++p) out << ',' << ev.confusion(t, p);
    out << '\n';
  }
}

void write_roc_svg(const Evaluation& ev, std::ostream& out) {
  const double x0 = 60, y0 = 40, x1 = 560, y1 = 540;
  auto sx = [&](double f) { return x0 + f * (x1 - x0); };
  auto sy = [&](double t) { return y1 - t * (y1 - y0); };
  svg_open(out, "ROC curves (one-vs-rest)");
  svg_axes(out, x0, y0, x1, y1);
  out << "<line class=\"chance\" x1=\"" << px(sx(0)) << "\" y1=\"" << px(sy(0)) << "\" x2=\"" << px(sx(1))
      << "\" y2=\"" << px(sy(1)) << "\" stroke=\"#888888\" stroke-dasharray=\"4 4\"/>\n";
  for (std::size_t k = 0; k < ev.curves.size(); ++k) {
    std::string pts, raw;
    for (const auto& p : ev.curves[k].points) {
      pts += px(sx(p.fpr)) + "," + px(sy(p.tpr)) + " ";
      raw += format_real(p.fpr) + "," + format_real(p.tpr) + " ";
    }
    if (!pts.empty()) pts.pop_back(), raw.pop_back();
    out << "<polyline fill=\"none\" stroke=\"" << class_color(k, ev.curves.size()) << "\" stroke-width=\"1.5\""
        << " data-class=\"" << escape_xml(ev.class_names[k]) << "\" data-roc=\"" << raw << "\" points=\"" << pts
        << "\"/>\n";
  }
  out << "<text x=\"" << px((x0 + x1) / 2 - 60) << "\" y=\"" << px(y1 + 35)
      << "\" font-size=\"12\">false positive rate</text>\n"
      << "<text x=\"" << px(10) << "\" y=\"" << px(y0 - 10) << "\" font-size=\"12\">true positive rate</text>\n";
  svg_legend(out, ev.class_names, x1 + 30, y0 + 10);
  out << "</svg>\n";
}

}  // namespace glyphlab
