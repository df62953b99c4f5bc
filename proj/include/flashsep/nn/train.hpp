// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flashsep/image.hpp"
#include "flashsep/nn/model.hpp"
#include "flashsep/scene.hpp"

namespace flashsep::nn {

enum class LrSchedule { Constant, Cosine };

std::string_view to_string(LrSchedule s);
LrSchedule parse_schedule(std::string_view name);

struct TrainConfig {
  int epochs = 150;
  int batch_size = 1;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  LrSchedule schedule = LrSchedule::Constant;  // cosine decays per epoch towards 0
  bool detach_reflection = false;
  NetShape shape;

  void validate() const;
  /// Learning rate used during `epoch` (1-based).
  double learning_rate_at(int epoch) const;
};

/// Adam moments with the same layout as the model.
struct OptimState {
  Model<float> m, v;
  std::int64_t step = 0;
};

OptimState make_optim_state(const Model<float>& params);

/// One bias-corrected Adam update.
void adam_step(Model<float>& params, const Model<float>& grads, OptimState& state, const TrainConfig& cfg);

/// Display-referred network inputs and targets of one sample. Ground-truth
/// layers pass through the same CFA sampling and ISP as the captures.
SampleTensors<float> prepare_sample(const SampleSet& s);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // mean training objective (L_R + L_T or L_T)
  double val_loss = 0.0;    // mean L_T over the validation split
};

struct TrainResult {
  Model<float> best;   // parameters at the lowest validation loss
  Model<float> last;   // parameters after the final epoch
  int best_epoch = 0;
  std::vector<EpochLog> log;  // epoch 0 evaluates the initial parameters
};

/// Mean L_T of the model over a set of samples.
double mean_transmission_loss(const Model<float>& m, const std::vector<SampleTensors<float>>& samples);

TrainResult train(const std::vector<SampleTensors<float>>& train_set, const std::vector<SampleTensors<float>>& val_set,
                  Variant variant, const TrainConfig& cfg);

std::string format_loss_log(const std::vector<EpochLog>& log);

struct Inference {
  SrgbImage transmission;
  std::optional<SrgbImage> reflection;
};

/// Runs the model on arbitrary-size images: mirror-pads to the network
/// divisor, crops back and clamps to [0, 1]. `guide` must be null exactly
/// when the variant takes no guide.
Inference infer(const Model<float>& m, const SrgbImage& ambient, const SrgbImage* guide);

}  // namespace flashsep::nn
