// glyphlab command-line tool. Links only the C interface.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "glyphlab/glyphlab.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Failure {
  glx_status status;
  std::string message;
};

void check(glx_status s) {
  if (s != GLX_OK) throw Failure{s, glx_last_error()};
}

[[noreturn]] void usage(const std::string& msg) { throw Failure{GLX_ERR_ARGUMENT, msg}; }

int exit_code(glx_status s) {
  switch (s) {
    case GLX_OK: return 0;
    case GLX_ERR_IO:
    case GLX_ERR_CORRUPT_FILE:
    case GLX_ERR_UNSUPPORTED_FORMAT:
    case GLX_ERR_UNSUPPORTED_DEPTH: return 3;
    case GLX_ERR_INTERNAL: return 1;
    default: return 2;
  }
}

struct DatasetDeleter {
  void operator()(glx_dataset* d) const { glx_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(glx_model* m) const { glx_model_free(m); }
};
struct HistoryDeleter {
  void operator()(glx_history* h) const { glx_history_free(h); }
};
using Dataset = std::unique_ptr<glx_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<glx_model, ModelDeleter>;
using History = std::unique_ptr<glx_history, HistoryDeleter>;

Dataset read_dataset(const std::string& path) {
  glx_dataset* d = nullptr;
  check(glx_dataset_read(path.c_str(), &d));
  return Dataset(d);
}

Dataset restrict_classes(Dataset ds, const std::vector<std::string>& classes) {
  if (classes.empty()) return ds;
  std::vector<const char*> names;
  for (const auto& c : classes) names.push_back(c.c_str());
  glx_dataset* out = nullptr;
  check(glx_dataset_select(ds.get(), names.data(), names.size(), &out));
  return Dataset(out);
}

std::uint64_t default_seed() {
  const char* env = std::getenv("GLYPHLAB_SEED");
  if (!env || !*env) return 0;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used == std::string(env).size()) return v;
  } catch (const std::exception&) {
  }
  usage(std::string("GLYPHLAB_SEED is not an unsigned integer: ") + env);
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw Failure{GLX_ERR_IO, "cannot create directory " + parent.string()};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Options of a subcommand, resolved after parsing, in declaration order.
json resolved_params(const CLI::App* sub) {
  json params = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_expected_max() > 1) {
        json arr = json::array();
        for (const auto& r : res) arr.push_back(r);
        params[name] = arr;
      } else {
        params[name] = res.empty() ? "" : res.back();
      }
    } else {
      params[name] = opt->get_default_str();
    }
  }
  return params;
}

void write_manifest(const std::string& out_dir, const CLI::App* sub, const std::vector<std::string>& args,
                    std::uint64_t seed, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  json m;
  m["tool"] = "glyphlab";
  m["version"] = glx_version();
  m["subcommand"] = sub->get_name();
  m["seed"] = seed;
  m["params"] = resolved_params(sub);
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["argv"] = args;
  const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path path = dir / (sub->get_name() + ".manifest.json");
  std::ofstream out(path, std::ios::binary);
  out << m.dump(2) << '\n';
  if (!out) throw Failure{GLX_ERR_IO, "cannot write " + path.string()};
}

std::string dir_of(const std::string& path) { return fs::path(path).parent_path().string(); }

int run(const std::vector<std::string>& args, int depth);

int dispatch(const std::vector<std::string>& args, int depth) {
  CLI::App app{"glyphlab: glyph dataset analysis, training and evaluation"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  const std::uint64_t env_seed = default_seed();

  // ingest
  std::string in_dir, out_file;
  std::size_t size = 64;
  auto* ingest = app.add_subcommand("ingest", "Build a dataset file from <root>/<class>/*.pgm");
  ingest->add_option("--input", in_dir, "Root directory")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--output", out_file, "Dataset file to write")->required();
  ingest->add_option("--size", size, "Output side length")->check(CLI::Range(1, 4096));

  // tsne
  std::string input;
  std::vector<std::string> classes;
  std::string out_csv, out_svg;
  glx_tsne_options tsne_opts;
  glx_tsne_options_default(&tsne_opts);
  tsne_opts.seed = env_seed;
  auto* tsne = app.add_subcommand("tsne", "Embed images with exact tSNE");
  tsne->add_option("--input", input, "Dataset file")->required()->check(CLI::ExistingFile);
  tsne->add_option("--classes", classes, "Comma-separated class subset")->delimiter(',');
  tsne->add_option("--perplexity", tsne_opts.perplexity, "Target perplexity");
  tsne->add_option("--iters", tsne_opts.iters, "Iterations");
  tsne->add_option("--dims", tsne_opts.out_dims, "Embedding dimensions")->check(CLI::Range(1, 3));
  tsne->add_option("--lr", tsne_opts.learning_rate, "Learning rate");
  tsne->add_option("--seed", tsne_opts.seed, "Random seed");
  tsne->add_option("--out-csv", out_csv, "Embedding CSV")->required();
  tsne->add_option("--out-svg", out_svg, "Scatter plot SVG")->required();

  // distmap
  auto* distmap = app.add_subcommand("distmap", "Clustered pairwise distance map");
  distmap->add_option("--input", input, "Dataset file")->required()->check(CLI::ExistingFile);
  distmap->add_option("--classes", classes, "Comma-separated class subset")->delimiter(',');
  distmap->add_option("--out-csv", out_csv, "Reordered distance matrix CSV")->required();
  distmap->add_option("--out-svg", out_svg, "Heatmap SVG")->required();

  // train-mlr / train-cnn
  std::string train_path, val_path, model_out, history_out, augment = "none";
  std::size_t patience = 3;
  glx_train_options mlr_opts, cnn_opts;
  glx_train_options_default(GLX_MODEL_MLR, &mlr_opts);
  glx_train_options_default(GLX_MODEL_CNN, &cnn_opts);
  mlr_opts.seed = cnn_opts.seed = env_seed;
  auto add_train = [&](const char* name, const char* desc, glx_train_options& o) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--train", train_path, "Training dataset file")->required()->check(CLI::ExistingFile);
    sub->add_option("--val", val_path, "Validation dataset file")->required()->check(CLI::ExistingFile);
    sub->add_option("--classes", classes, "Comma-separated class subset")->delimiter(',');
    sub->add_option("--augment", augment, "none | lossless | lossy");
    sub->add_option("--epochs", o.epochs, "Epochs")->check(CLI::PositiveNumber);
    sub->add_option("--batch", o.batch_size, "Batch size (0 = full batch)");
    sub->add_option("--lr", o.learning_rate, "Learning rate");
    sub->add_option("--l2", o.l2, "L2 penalty on weights");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--patience", patience, "Epochs of rising validation loss for overfit detection");
    sub->add_option("--model-out", model_out, "Model file")->required();
    sub->add_option("--history-out", history_out, "History CSV")->required();
    return sub;
  };
  auto* train_mlr = add_train("train-mlr", "Train multinomial logistic regression", mlr_opts);
  auto* train_cnn = add_train("train-cnn", "Train the reference CNN (2 classes)", cnn_opts);

  // evaluate
  std::string model_path, data_path, roc_svg;
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on a dataset");
  evaluate->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--data", data_path, "Dataset file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--classes", classes, "Comma-separated class subset")->delimiter(',');
  evaluate->add_option("--out-csv", out_csv, "Metrics CSV")->required();
  evaluate->add_option("--roc-svg", roc_svg, "ROC plot SVG")->required();

  // augment-preview
  std::string policy, out_dir;
  std::size_t count = 4;
  std::uint64_t seed = env_seed;
  auto* preview = app.add_subcommand("augment-preview", "Write augmented copies of every image");
  preview->add_option("--input", input, "Dataset file")->required()->check(CLI::ExistingFile);
  preview->add_option("--policy", policy, "none | lossless | lossy")->required();
  preview->add_option("--count", count, "Copies per image");
  preview->add_option("--seed", seed, "Random seed");
  preview->add_option("--out", out_dir, "Output directory")->required();

  // split
  std::string train_out, val_out, test_out;
  std::vector<double> fractions{0.70, 0.15, 0.15};
  auto* split = app.add_subcommand("split", "Stratified train/validation/test split");
  split->add_option("--input", input, "Dataset file")->required()->check(CLI::ExistingFile);
  split->add_option("--fractions", fractions, "train,val,test")->delimiter(',')->expected(3);
  split->add_option("--seed", seed, "Random seed");
  split->add_option("--train-out", train_out, "Training file")->required();
  split->add_option("--val-out", val_out, "Validation file")->required();
  split->add_option("--test-out", test_out, "Test file")->required();

  // synth
  std::size_t per_class = 200, side = 32;
  double noise = 0.25;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic circle/square dataset");
  synth->add_option("--output", out_file, "Dataset file")->required();
  synth->add_option("--per-class", per_class, "Images per class");
  synth->add_option("--side", side, "Side length")->check(CLI::Range(4, 4096));
  synth->add_option("--noise", noise, "Gaussian noise stddev");
  synth->add_option("--seed", seed, "Random seed");

  // replay
  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest");
  replay->add_option("--manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);

  std::vector<const char*> argv{"glyphlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (ingest->parsed()) {
    glx_dataset* d = nullptr;
    check(glx_dataset_ingest_dir(in_dir.c_str(), size, &d));
    Dataset ds(d);
    ensure_parent(out_file);
    check(glx_dataset_write(ds.get(), out_file.c_str()));
    write_manifest(dir_of(out_file), ingest, args, 0, {in_dir}, {out_file});
    std::cout << "n=" << glx_dataset_size(ds.get()) << " classes=" << glx_dataset_class_count(ds.get())
              << " size=" << size << '\n';
  } else if (tsne->parsed()) {
    Dataset ds = restrict_classes(read_dataset(input), classes);
    if (glx_dataset_class_count(ds.get()) < 2) usage("tsne needs at least 2 classes");
    ensure_parent(out_csv);
    ensure_parent(out_svg);
    double kl = 0.0;
    check(glx_tsne_report(ds.get(), &tsne_opts, out_csv.c_str(), out_svg.c_str(), &kl));
    write_manifest(dir_of(out_csv), tsne, args, tsne_opts.seed, {input}, {out_csv, out_svg});
    std::cout << "n=" << glx_dataset_size(ds.get()) << " final_kl=" << fmt(kl) << '\n';
  } else if (distmap->parsed()) {
    Dataset ds = restrict_classes(read_dataset(input), classes);
    if (glx_dataset_class_count(ds.get()) < 2) usage("distmap needs at least 2 classes");
    ensure_parent(out_csv);
    ensure_parent(out_svg);
    check(glx_distmap_report(ds.get(), out_csv.c_str(), out_svg.c_str()));
    write_manifest(dir_of(out_csv), distmap, args, 0, {input}, {out_csv, out_svg});
    std::cout << "n=" << glx_dataset_size(ds.get()) << '\n';
  } else if (train_mlr->parsed() || train_cnn->parsed()) {
    const bool is_cnn = train_cnn->parsed();
    CLI::App* sub = is_cnn ? train_cnn : train_mlr;
    glx_train_options& o = is_cnn ? cnn_opts : mlr_opts;
    o.augment = augment.c_str();
    Dataset tr = restrict_classes(read_dataset(train_path), classes);
    Dataset va = restrict_classes(read_dataset(val_path), classes);
    glx_model* m = nullptr;
    glx_history* h = nullptr;
    check(glx_train(is_cnn ? GLX_MODEL_CNN : GLX_MODEL_MLR, tr.get(), va.get(), &o, &m, &h));
    ModelPtr model(m);
    History hist(h);
    ensure_parent(model_out);
    ensure_parent(history_out);
    check(glx_model_write(model.get(), model_out.c_str()));
    check(glx_history_write_csv(hist.get(), history_out.c_str()));
    write_manifest(dir_of(model_out), sub, args, o.seed, {train_path, val_path}, {model_out, history_out});
    const std::size_t e = glx_history_epochs(hist.get());
    double row[4] = {0, 0, 0, 0};
    if (e > 0) check(glx_history_row(hist.get(), e - 1, row));
    std::cout << "epochs=" << e << " train_loss=" << fmt(row[0]) << " train_acc=" << fmt(row[1])
              << " val_loss=" << fmt(row[2]) << " val_acc=" << fmt(row[3]) << '\n';
    const long oe = glx_history_overfit_epoch(hist.get(), patience);
    if (oe >= 0) std::cout << "overfit_epoch=" << oe << '\n';
    else std::cout << "overfit_epoch=none\n";
  } else if (evaluate->parsed()) {
    glx_model* m = nullptr;
    check(glx_model_read(model_path.c_str(), &m));
    ModelPtr model(m);
    Dataset ds = restrict_classes(read_dataset(data_path), classes);
    ensure_parent(out_csv);
    ensure_parent(roc_svg);
    glx_eval_summary s{};
    check(glx_evaluate_report(model.get(), ds.get(), out_csv.c_str(), roc_svg.c_str(), &s));
    write_manifest(dir_of(out_csv), evaluate, args, 0, {model_path, data_path}, {out_csv, roc_svg});
    std::cout << "macro_auc=" << fmt(s.macro_auc) << " accuracy=" << fmt(s.accuracy) << " loss=" << fmt(s.loss)
              << '\n';
  } else if (preview->parsed()) {
    Dataset ds = read_dataset(input);
    check(glx_augment_preview(ds.get(), policy.c_str(), count, seed, out_dir.c_str()));
    write_manifest(out_dir, preview, args, seed, {input}, {out_dir});
    std::cout << "wrote " << count * glx_dataset_size(ds.get()) << " images\n";
  } else if (split->parsed()) {
    Dataset ds = read_dataset(input);
    glx_dataset *a = nullptr, *b = nullptr, *c = nullptr;
    check(glx_dataset_split(ds.get(), fractions[0], fractions[1], fractions[2], seed, &a, &b, &c));
    Dataset tr(a), va(b), te(c);
    for (const auto* p : {&train_out, &val_out, &test_out}) ensure_parent(*p);
    check(glx_dataset_write(tr.get(), train_out.c_str()));
    check(glx_dataset_write(va.get(), val_out.c_str()));
    check(glx_dataset_write(te.get(), test_out.c_str()));
    write_manifest(dir_of(train_out), split, args, seed, {input}, {train_out, val_out, test_out});
    std::cout << "train=" << glx_dataset_size(tr.get()) << " val=" << glx_dataset_size(va.get())
              << " test=" << glx_dataset_size(te.get()) << '\n';
  } else if (synth->parsed()) {
    glx_dataset* d = nullptr;
    check(glx_dataset_synth_shapes(per_class, side, noise, seed, &d));
    Dataset ds(d);
    ensure_parent(out_file);
    check(glx_dataset_write(ds.get(), out_file.c_str()));
    write_manifest(dir_of(out_file), synth, args, seed, {}, {out_file});
    std::cout << "n=" << glx_dataset_size(ds.get()) << " classes=2 size=" << side << '\n';
  } else if (replay->parsed()) {
    if (depth > 0) usage("a manifest cannot replay another manifest");
    std::ifstream in(manifest_path, std::ios::binary);
    json m;
    try {
      m = json::parse(in);
    } catch (const json::exception& e) {
      throw Failure{GLX_ERR_CORRUPT_FILE, std::string("bad manifest: ") + e.what()};
    }
    if (!m.contains("argv") || !m["argv"].is_array())
      throw Failure{GLX_ERR_CORRUPT_FILE, "manifest has no argv array"};
    return run(m["argv"].get<std::vector<std::string>>(), depth + 1);
  }
  return 0;
}

int run(const std::vector<std::string>& args, int depth) {
  try {
    return dispatch(args, depth);
  } catch (const Failure& f) {
    std::cerr << "glyphlab: " << glx_status_name(f.status) << ": " << f.message << '\n';
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "glyphlab: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, 0);
}
