// Copyright 2026 The LWSNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// lwsnet: synthesis, training, prediction, evaluation, audit, quantization
// and branch-width search from one binary.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lwsnet/arch.hpp"
#include "lwsnet/data.hpp"
#include "lwsnet/eval.hpp"
#include "lwsnet/image_io.hpp"
#include "lwsnet/quantize.hpp"
#include "lwsnet/serialize.hpp"
#include "lwsnet/train.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;

namespace lwsnet::cli {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw std::runtime_error("no such file: " + p.string());
}

void require_dir(const fs::path& p) {
  if (!fs::is_directory(p)) throw std::runtime_error("no such directory: " + p.string());
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + p.string());
  return out;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string regime = "mixed";
  int count = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t height = 224, width = 224;
};

void run_synth(const SynthArgs& a) {
  if (a.count < 1) throw UsageError("--count must be >= 1");
  std::vector<Regime> cycle;
  if (a.regime == "all") {
    cycle.assign(std::begin(kAllRegimes), std::end(kAllRegimes));
  } else if (auto r = parse_regime(a.regime)) {
    cycle.push_back(*r);
  } else {
    throw UsageError("unknown regime '" + a.regime + "'");
  }
  fs::create_directories(a.out);
  for (int i = 0; i < a.count; ++i) {
    const Regime r = cycle[static_cast<std::size_t>(i) % cycle.size()];
    const auto seed = splitmix64(a.seed ^ splitmix64(static_cast<std::uint64_t>(i)));
    const auto s = generate_synthetic(SynthSpec::defaults(r, seed, a.height, a.width));
    char id[64];
    std::snprintf(id, sizeof(id), "%s-%04d", std::string(regime_name(r)).c_str(), i);
    save_sample(s, a.out, id);
  }
  std::cerr << "wrote " << a.count << " pairs to " << a.out << "\n";
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data, val, config, out, log;
  std::optional<int> epochs, batch_size, checkpoint_every;
  std::optional<double> lr, positive_weight;
  std::optional<std::string> optimizer, checkpoint_path;
  std::optional<std::uint64_t> seed;
  std::optional<bool> augment_flip;
  std::optional<std::size_t> crop_stride;
};

std::vector<Sample> load_windows(const fs::path& dir, std::size_t stride) {
  require_dir(dir);
  std::vector<Sample> out;
  for (const auto& s : load_dataset(dir)) {
    for (auto& w : crop_windows(s, 224, stride)) out.push_back(std::move(w));
  }
  return out;
}

void run_train(const TrainArgs& a) {
  RunConfig cfg;
  if (!a.config.empty()) {
    require_file(a.config);
    apply_config_file(a.config, cfg);
  }
  // Flags override the file.
  if (a.epochs) cfg.set("epochs", std::to_string(*a.epochs));
  if (a.batch_size) cfg.set("batch_size", std::to_string(*a.batch_size));
  if (a.lr) cfg.train.learning_rate = *a.lr;
  if (a.optimizer) cfg.set("optimizer", *a.optimizer);
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.augment_flip) cfg.train.augment_flip = *a.augment_flip;
  if (a.checkpoint_every) cfg.train.checkpoint_every = *a.checkpoint_every;
  if (a.checkpoint_path) cfg.train.checkpoint_path = *a.checkpoint_path;
  if (a.positive_weight) cfg.train.positive_weight = *a.positive_weight;
  if (a.crop_stride) cfg.set("crop_stride", std::to_string(*a.crop_stride));
  if (cfg.train.checkpoint_every > 0 && cfg.train.checkpoint_path.empty()) {
    cfg.train.checkpoint_path = a.out + ".ckpt";
  }
  try {
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto train_set = load_windows(a.data, cfg.crop_stride);
  const auto val_set = a.val.empty() ? std::vector<Sample>{} : load_windows(a.val, 224);
  if (train_set.empty()) throw std::runtime_error("no training pairs in " + a.data);
  std::cerr << "train windows " << train_set.size() << ", val windows " << val_set.size() << "\n";

  auto model = build_reference_model(cfg.train.seed);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = train(model, train_set, val_set, cfg.train, [&](const EpochRecord& r) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "epoch " << r.epoch << " train_loss " << fixed(r.train_loss) << " val_iou "
              << fixed(r.val_iou) << " elapsed " << fixed(secs, 1) << "s\n";
  });
  save_model(model, a.out);
  if (a.log.empty()) {
    write_epoch_csv(std::cout, result.log);
  } else {
    auto out = open_out(a.log);
    write_epoch_csv(out, result.log);
  }
  std::cerr << "best epoch " << result.best_epoch << " val_iou " << fixed(result.best_val_iou)
            << "; model written to " << a.out << "\n";
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model, image, out;
  bool postprocess = false;
  std::uint64_t seed = 0;
};

void run_predict(const PredictArgs& a) {
  require_file(a.model);
  require_file(a.image);
  const auto model = load_model(a.model);
  const auto img = to_grayscale(read_image(a.image));
  auto mask = predict_mask(model, img);
  if (a.postprocess) mask = complete_edges(mask);
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  write_gray_image(a.out, mask.width, mask.height, to_bytes(mask));
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model, report;
  std::vector<std::string> sets;
  bool raw = false;
  std::uint64_t seed = 0;
};

std::vector<NamedSet> load_sets(const std::vector<std::string>& dirs) {
  std::vector<NamedSet> sets;
  for (const auto& d : dirs) {
    require_dir(d);
    fs::path p(d);
    if (!p.has_filename()) p = p.parent_path();
    sets.push_back({p.filename().string(), load_dataset(d)});
  }
  return sets;
}

void run_eval(const EvalArgs& a) {
  require_file(a.model);
  const auto model = load_model(a.model);
  const auto report = evaluate_sets(model, load_sets(a.sets));
  if (!a.report.empty()) {
    auto out = open_out(a.report);
    write_iou_csv(out, report, !a.raw);
  }
  std::cout << "set,samples,mean_iou_raw,mean_iou_post\n";
  for (const auto& s : report.sets) {
    std::cout << s.name << ',' << s.samples.size() << ',' << fixed(s.mean_raw()) << ','
              << fixed(s.mean_post()) << '\n';
  }
}

// ---------------------------------------------------------------------------

struct AuditArgs {
  std::string model;
  bool build_ref = false;
  std::uint64_t seed = 0;
};

int run_audit(const AuditArgs& a) {
  if (a.model.empty() == !a.build_ref) throw UsageError("give exactly one of --model or --build-ref");
  Model<float> model;
  if (a.build_ref) {
    model = build_reference_model(a.seed);
  } else {
    require_file(a.model);
    model = load_model(a.model);
  }
  const auto rep = audit_params(model);
  std::printf("%-14s %10s %10s %7s %9s  %s\n", "layer", "expected", "actual", "delta", "allowance",
              "status");
  for (const auto& r : rep.rows) {
    std::printf("%-14s %10lld %10lld %+7lld %9lld  %s\n", r.name.c_str(),
                static_cast<long long>(r.expected), static_cast<long long>(r.actual),
                static_cast<long long>(r.delta()), static_cast<long long>(r.allowance),
                r.ok() ? "ok" : "FAIL");
  }
  const long long td = rep.total_actual - rep.total_expected;
  std::printf("%-14s %10lld %10lld %+7lld %9d  %s\n", "TOTAL",
              static_cast<long long>(rep.total_expected), static_cast<long long>(rep.total_actual),
              td, 0, td == 0 ? "ok" : "FAIL");
  std::fflush(stdout);
  if (!rep.passes()) {
    std::cerr << "audit failed: parameter counts outside the allowance\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct QuantizeArgs {
  std::string model, out, report;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
};

void run_quantize(const QuantizeArgs& a) {
  require_file(a.model);
  const auto model = load_model(a.model);
  const auto q = quantize_weights(model);
  save_quantized(q, a.out);
  const auto rep = size_report(model, q);
  if (!a.report.empty()) {
    auto out = open_out(a.report);
    write_size_csv(out, rep);
  }
  // Checkpoint sizes, then the bare tensor payloads (4 bytes vs 1 byte per
  // quantized weight) for comparison with size figures quoted elsewhere.
  std::size_t f32_payload = 0, i8_payload = 0;
  for (const auto& r : rep.rows) {
    f32_payload += r.float_bytes;
    i8_payload += r.int8_bytes;
  }
  std::cout << "float_file_bytes," << rep.float_file_bytes << "\nint8_file_bytes,"
            << rep.quantized_file_bytes << "\nfile_ratio," << fixed(rep.ratio(), 4)
            << "\nf32_payload_bytes," << f32_payload << "\nquantized_payload_bytes," << i8_payload << '\n';
  if (a.sets.empty()) return;
  // Accuracy delta on labelled sets.
  std::size_t agree = 0, total = 0;
  const auto sets = load_sets(a.sets);
  const auto fr = evaluate_sets(model, sets);
  const auto qr = evaluate_sets(
      [&](const Sample& s) {
        const auto fm = predict_mask(model, s.image);
        const auto qm = predict_mask(q.dequantized(), s.image);
        for (std::size_t i = 0; i < fm.bits.size(); ++i) agree += fm.bits[i] == qm.bits[i];
        total += fm.bits.size();
        return qm;
      },
      sets);
  std::cout << "pixel_agreement," << fixed(total ? static_cast<double>(agree) / total : 1.0) << '\n';
  std::cout << "set,float_iou,int8_iou,delta\n";
  for (std::size_t i = 0; i < fr.sets.size(); ++i) {
    const double f = fr.sets[i].mean_raw(), qv = qr.sets[i].mean_raw();
    std::cout << fr.sets[i].name << ',' << fixed(f) << ',' << fixed(qv) << ',' << fixed(qv - f) << '\n';
  }
}

// ---------------------------------------------------------------------------

struct SearchArgs {
  int in = 0, out = 0;
  std::int64_t target = 0;
  std::size_t max_nearest = 10;
  std::string grid = "default";
  std::uint64_t seed = 0;
};

void run_search(const SearchArgs& a) {
  if (a.in < 1 || a.out < 1) throw UsageError("--in and --out must be >= 1");
  SearchSpace space;
  if (a.grid == "default") {
    space = SearchSpace::default_grid();
  } else if (a.grid == "ref") {
    space = SearchSpace::ref_config_a_only();
  } else {
    throw UsageError("unknown --grid '" + a.grid + "'");
  }
  const auto hits = search_inception_config(a.in, a.out, a.target, space, a.max_nearest);
  std::cout << "count,distance,config\n";
  for (const auto& h : hits) std::cout << h.count << ',' << h.distance << ',' << to_string(h.config) << '\n';
}

void add_seed(CLI::App* sub, std::uint64_t& seed, const char* what) {
  sub->add_option("--seed", seed, what)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LWSNet shelf-edge segmentation toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate synthetic image/mask pairs");
  synth->add_option("--regime", sa.regime, "close-up, distant, multi-block, mixed, or all (cycle)")
      ->capture_default_str();
  synth->add_option("--count", sa.count, "Number of pairs (>= 1)")->required();
  add_seed(synth, sa.seed, "Base seed; pair i uses a seed derived from (seed, i)");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--height", sa.height, "Image height")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--width", sa.width, "Image width")->capture_default_str()->check(CLI::PositiveNumber);

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train the reference model");
  tr->add_option("--data", ta.data, "Training pair directory")->required();
  tr->add_option("--val", ta.val, "Validation pair directory (best-IoU state is kept)");
  tr->add_option("--config", ta.config, "key = value run config; flags take precedence");
  tr->add_option("--out", ta.out, "Output model file (.lwsn)")->required();
  tr->add_option("--log", ta.log, "Epoch CSV path (default: stdout)");
  tr->add_option("--seed", ta.seed, "Seed for init, shuffling and augmentation");
  tr->add_option("--epochs", ta.epochs, "Epochs");
  tr->add_option("--batch-size", ta.batch_size, "Mini-batch size");
  tr->add_option("--lr", ta.lr, "Learning rate");
  tr->add_option("--optimizer", ta.optimizer, "adam or sgd-momentum");
  tr->add_option("--augment-flip", ta.augment_flip, "Random horizontal flips (true/false)");
  tr->add_option("--checkpoint-every", ta.checkpoint_every, "Checkpoint period in epochs (0 = off)");
  tr->add_option("--checkpoint-path", ta.checkpoint_path, "Checkpoint file (default: <out>.ckpt)");
  tr->add_option("--positive-weight", ta.positive_weight, "Loss weight of shelf-edge pixels");
  tr->add_option("--crop-stride", ta.crop_stride, "Stride of the 224x224 training crops");

  PredictArgs pa;
  auto* pr = app.add_subcommand("predict", "Predict a shelf-edge mask for one image");
  pr->add_option("--model", pa.model, "Model file")->required();
  pr->add_option("--image", pa.image, "Input image (.png or .pgm)")->required();
  pr->add_option("--out", pa.out, "Output mask (.png or .pgm, 0/255)")->required();
  pr->add_flag("--postprocess", pa.postprocess, "Apply edge completion");
  add_seed(pr, pa.seed, "Accepted for uniformity; prediction is deterministic");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Per-set IoU on labelled pair directories");
  ev->add_option("--model", ea.model, "Model file")->required();
  ev->add_option("--sets", ea.sets, "Comma-separated pair directories; set name = directory name")
      ->required()
      ->delimiter(',');
  ev->add_option("--report", ea.report, "Per-sample IoU CSV");
  ev->add_flag("--raw", ea.raw, "Report IoU without edge completion");
  add_seed(ev, ea.seed, "Accepted for uniformity; evaluation is deterministic");

  AuditArgs aa;
  auto* au = app.add_subcommand("audit", "Per-layer trainable parameter audit");
  auto* am = au->add_option("--model", aa.model, "Model file to audit");
  auto* ab = au->add_flag("--build-ref", aa.build_ref, "Audit a freshly built reference model");
  am->excludes(ab);
  add_seed(au, aa.seed, "Init seed for --build-ref");

  QuantizeArgs qa;
  auto* qu = app.add_subcommand("quantize", "Post-training int8 weight quantization");
  qu->add_option("--model", qa.model, "Float model file")->required();
  qu->add_option("--out", qa.out, "Quantized model file")->required();
  qu->add_option("--report", qa.report, "Per-tensor size CSV");
  qu->add_option("--sets", qa.sets, "Optional pair directories for the accuracy delta")->delimiter(',');
  add_seed(qu, qa.seed, "Accepted for uniformity; quantization is deterministic");

  SearchArgs sr;
  auto* se = app.add_subcommand("search-config", "Find Inception branch widths for a parameter count");
  se->add_option("--in", sr.in, "Input channels")->required();
  se->add_option("--out", sr.out, "Output channels")->required();
  se->add_option("--target", sr.target, "Target parameter count")->required();
  se->add_option("--max-nearest", sr.max_nearest, "Nearest configs listed when nothing matches")
      ->capture_default_str();
  se->add_option("--grid", sr.grid, "default (sixteenths of F) or ref (reference fractions)")
      ->capture_default_str();
  add_seed(se, sr.seed, "Accepted for uniformity; search is exhaustive");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == synth) run_synth(sa);
    if (active == tr) run_train(ta);
    if (active == pr) run_predict(pa);
    if (active == ev) run_eval(ea);
    if (active == au) return run_audit(aa);
    if (active == qu) run_quantize(qa);
    if (active == se) run_search(sr);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << active->help();
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace lwsnet::cli

int main(int argc, char** argv) { return lwsnet::cli::main(argc, argv); }
