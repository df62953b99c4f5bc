// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// File-level workflows shared by the command-line verbs.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flashsep/manifest.hpp"
#include "flashsep/metrics.hpp"
#include "flashsep/nn/train.hpp"
#include "flashsep/scene.hpp"
#include "flashsep/synth.hpp"

namespace flashsep {

namespace fs = std::filesystem;

using LogSink = std::function<void(const std::string&)>;

inline constexpr const char* kManifestName = "manifest.tsv";

/// Linear flash-only outputs for one raw pair: Bayer plane, demosaiced and
/// color-corrected RGB (ambient metadata), sRGB preview and validity mask.
struct FlashOnlyOutputs {
  LinearImage bayer;
  LinearImage rgb;
  SrgbImage preview;
  SaturationMask mask;
};

FlashOnlyOutputs compute_flash_only(const RawImage& ambient, const RawImage& flash);
void write_flash_only(const fs::path& out_dir, const FlashOnlyOutputs& fo);

struct SimulateOptions {
  std::optional<fs::path> spec;  // scene file; otherwise a preset
  Preset preset = Preset::Default;
  int count = 1;
  int width = 64;
  int height = 64;
  std::uint64_t seed = 0;
  Proportions proportions;
  fs::path out_dir;
};

/// Renders `count` scenes, writes every sample and a split manifest.
Manifest simulate(const SimulateOptions& opt, const LogSink& log = {});

struct SynthOptions {
  std::optional<fs::path> sources;  // manifest of source renders; roles are kept
  Preset preset = Preset::Default;  // used to render sources when none are given
  int count = 1;
  int width = 64;
  int height = 64;
  std::uint64_t seed = 0;
  std::pair<double, double> alpha_range = {0.3, 0.9};
  std::pair<double, double> blur_sigma_range = {1.0, 3.0};
  double sharp_fraction = 0.2;
  int crop = 0;
  Proportions proportions;
  std::string id_prefix = "syn";
  fs::path out_dir;

  void validate() const;
};

/// Composites synthetic pairs. Sources are assigned roles first and every
/// pair draws its transmission and reflection from one role, so roles never
/// share a source.
Manifest synthesize(const SynthOptions& opt, const LogSink& log = {});

/// Loads and prepares the records of one role from a manifest file.
std::vector<EvalSample> load_role(const fs::path& manifest_path, Role role);

struct TrainOutputs {
  nn::TrainResult result;
  fs::path checkpoint;
  fs::path loss_log;
};

/// Trains one variant on the train records of every manifest, validating on
/// their val records. Writes `<variant>.ckpt` (best val) and `<variant>_loss.csv`.
TrainOutputs train_variant(const std::vector<EvalSample>& train_set, const std::vector<EvalSample>& val_set,
                           nn::Variant variant, const nn::TrainConfig& cfg, const fs::path& out_dir,
                           const LogSink& log = {});

struct EvalOutputs {
  EvalReport report;
  std::string per_sample_csv, summary_csv, summary_text;
};

EvalOutputs evaluate_checkpoints(const std::vector<EvalSample>& test_set, const std::vector<fs::path>& checkpoints,
                                 const fs::path& out_dir);

struct AblateOptions {
  fs::path out_dir;
  Preset preset = Preset::StrongReflection;
  int count = 128;
  int size = 64;
  int epochs = 40;
  double learning_rate = 1e-3;
  nn::LrSchedule schedule = nn::LrSchedule::Cosine;
  double synth_fraction = 0.5;  // synthetic supplements per train source
  std::uint64_t seed = 0;
  nn::NetShape shape;
  std::vector<nn::Variant> variants = {nn::kAllVariants.begin(), nn::kAllVariants.end()};

  static AblateOptions tiny();
};

struct AblateOutputs {
  std::vector<std::pair<nn::Variant, std::vector<nn::EpochLog>>> logs;
  EvalOutputs eval;
};

/// simulate -> synth (train sources only) -> train each variant -> eval.
/// Variants whose checkpoint and loss log already exist are not retrained.
AblateOutputs ablate(const AblateOptions& opt, const LogSink& log = {});

}  // namespace flashsep
