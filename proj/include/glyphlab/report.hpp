#pragma once

// CSV and SVG writers behind the command-line outputs. CSV uses '.' decimals
// and LF endings; SVGs use a fixed 800x600 viewport.

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "glyphlab/eda.hpp"
#include "glyphlab/metrics.hpp"
#include "glyphlab/models.hpp"

namespace glyphlab {

/// Shortest round-trip decimal form.
std::string format_real(double v);
/// Hue ramp from red (first class) to blue (last class).
std::string class_color(std::size_t k, std::size_t count);

void write_history_csv(const TrainHistory& h, std::ostream& out);

void write_embedding_csv(const Embedding& e, std::span<const std::uint32_t> labels,
                         std::span<const std::string> class_names, std::ostream& out);
void write_scatter_svg(const Embedding& e, std::span<const std::uint32_t> labels,
                       std::span<const std::string> class_names, std::ostream& out);

void write_distmap_csv(const ClusteredMap& map, std::ostream& out);
void write_distmap_svg(const ClusteredMap& map, std::span<const std::string> class_names, std::ostream& out);

struct Evaluation {
  std::vector<std::string> class_names;
  OvrAuc auc;
  std::vector<RocCurve> curves;  // one-vs-rest, per class
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double loss = 0.0;  // mean cross-entropy (binary for CNN)
};

/// Scores `data` with either model kind. CNN models are scored as the
/// two-column table (1 - p, p).
Evaluation evaluate(const Model& model, const LabeledDataset& data);

void write_evaluation_csv(const Evaluation& ev, std::ostream& out);
void write_roc_svg(const Evaluation& ev, std::ostream& out);

}  // namespace glyphlab
