// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "cli.hpp"
#include "flashsep/image_io.hpp"
#include "flashsep/isp.hpp"
#include "flashsep/metrics.hpp"
#include "flashsep/nn/gradcheck.hpp"
#include "flashsep/nn/train.hpp"
#include "flashsep/pipeline.hpp"
#include "flashsep/scene.hpp"

using namespace flashsep;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("flashsep_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// 1. Leakage of a matched scene against r^2 / t^2.
Outcome leakage() {
  const auto t0 = Clock::now();
  SceneSpec s;
  s.width = s.height = 32;
  s.albedo_t = random_albedo(32, 32, 5);
  s.albedo_r = s.albedo_t;
  s.r = 0.1;
  s.d_t = constant_map(32, 32, 1.5f);
  s.d_r = 1.5;
  s.flash_power = 2.0;
  s.ambient_level = 1.0;
  s.cos_map = constant_map(32, 32, 1.0f);
  const double got = reflection_leakage(render_scene(s));
  const double oracle = (0.1 * 0.1) / (0.9 * 0.9);
  const double secs = seconds_since(t0);
  return {std::abs(got - oracle) <= 1e-6 && std::abs(got - 0.012346) <= 1e-6 && secs < 1.0,
          fmt("leakage %.9f", got) + fmt(" oracle %.9f", oracle) + fmt(" in %.3f s", secs)};
}

// 2. Additivity of the rendered layers before and after the raw round trip.
Outcome additivity() {
  const auto t0 = Clock::now();
  const Preset presets[] = {Preset::Default, Preset::StrongReflection, Preset::WeakReflection,
                            Preset::FarTransmission, Preset::ColorMismatch};
  double max_float = 0.0, max_steps = 0.0;
  for (int i = 0; i < 100; ++i) {
    SceneSpec spec = make_preset_scene(presets[i % 5], 32, 32, 1000 + i);
    spec.artifacts.noise_sigma = 0.0;
    const SampleSet s = render_scene(spec);
    for (std::size_t k = 0; k < s.i_a.data.size(); ++k) {
      max_float = std::max<double>(max_float, std::abs(s.i_f.data[k] - (s.i_a.data[k] + s.i_fo.data[k])));
      max_float = std::max<double>(max_float, std::abs(s.i_a.data[k] - (s.t_a.data[k] + s.r_a.data[k])));
    }
    const LinearImage la = linearize(s.raw_a), lf = linearize(s.raw_f);
    const LinearImage fo = sample_cfa(s.i_fo, s.raw_a.meta.cfa);
    const double step = quantization_step(s.raw_a.meta.black_level, s.raw_a.meta.white_level);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        if (!s.mask.is_valid(x, y)) continue;
        const double d = std::abs(double(lf.at(x, y)) - la.at(x, y) - fo.at(x, y));
        max_steps = std::max(max_steps, d / step);
      }
  }
  const double secs = seconds_since(t0);
  return {max_float < 1e-6 && max_steps < 1.5 && secs < 10.0,
          fmt("float %.3g", max_float) + fmt(", raw %.3f steps", max_steps) + fmt(" in %.2f s", secs)};
}

// 3. Doubling the ambient level leaves the recovered flash-only image intact.
Outcome ambient_invariance() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t compared = 0;
  for (int i = 0; i < 20; ++i) {
    const SceneSpec base = make_preset_scene(Preset::Default, 48, 48, 2000 + i);
    SceneSpec bright = base;
    bright.ambient_level *= 2.0;
    const SampleSet a = render_scene(base), b = render_scene(bright);
    const FlashOnly fa = subtract_flash_only(a.raw_f, a.raw_a), fb = subtract_flash_only(b.raw_f, b.raw_a);
    const double step = quantization_step(a.raw_a.meta.black_level, a.raw_a.meta.white_level);
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x) {
        if (!fa.mask.is_valid(x, y) || !fb.mask.is_valid(x, y)) continue;
        worst = std::max(worst, std::abs(double(fa.plane.at(x, y)) - fb.plane.at(x, y)) / step);
        ++compared;
      }
  }
  const double secs = seconds_since(t0);
  return {worst < 2.0 && compared > 0 && secs < 10.0,
          fmt("max change %.3f steps", worst) + " over " + std::to_string(compared) + " photosites" +
              fmt(" in %.2f s", secs)};
}

// 4. ISP: gamma round trip, demosaic of constant CFA tiles, luma weights.
Outcome isp() {
  double gamma_err = 0.0;
  Rng rng(4);
  for (int i = 0; i < 100000; ++i) {
    const double v = rng.uniform();
    gamma_err = std::max(gamma_err, std::abs(srgb_decode(srgb_encode(v)) - v));
  }
  double demosaic_err = 0.0;
  for (Cfa cfa : {Cfa::RGGB, Cfa::BGGR, Cfa::GRBG, Cfa::GBRG}) {
    for (int trial = 0; trial < 4; ++trial) {
      const float color[3] = {float(rng.uniform()), float(rng.uniform()), float(rng.uniform())};
      LinearImage rgb(16, 12, 3);
      for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x)
          for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = color[c];
      const LinearImage out = demosaic(sample_cfa(rgb, cfa), cfa);
      for (std::size_t k = 0; k < out.data.size(); ++k)
        demosaic_err = std::max<double>(demosaic_err, std::abs(out.data[k] - rgb.data[k]));
    }
  }
  const double luma_sum = kLumaWeights[0] + kLumaWeights[1] + kLumaWeights[2];
  return {gamma_err < 1e-6 && demosaic_err == 0.0 && std::abs(luma_sum - 1.0) < 1e-12,
          fmt("gamma %.3g", gamma_err) + fmt(", demosaic %.3g", demosaic_err) + fmt(", luma sum %.15g", luma_sum)};
}

// 5. Finite-difference gradient check.
Outcome gradcheck() {
  const auto t0 = Clock::now();
  const nn::GradcheckReport r = nn::run_gradcheck();
  double worst = 0.0;
  for (const auto& e : r.entries) worst = std::max(worst, e.max_rel_error);
  const double secs = seconds_since(t0);
  return {r.passed() && worst < 1e-3 && secs < 120.0,
          std::to_string(r.entries.size()) + " entries" + fmt(", max rel error %.3g", worst) +
              fmt(" in %.1f s", secs)};
}

// 6. L_T reaches the reflection network through R-hat; g_T never sees i_fo.
Outcome wiring() {
  static_assert(std::is_same_v<decltype(&nn::estimate_transmission<double>),
                               nn::Tensor<double> (*)(const nn::UNet<double>&, const nn::Tensor<double>&,
                                                      const nn::Tensor<double>&)>);
  const nn::NetShape shape{2, {3, 4}, 0.2};
  const nn::Model<double> m = nn::init_model<double>(nn::Variant::TwoStageFo, shape, 17);
  Rng rng(18);
  auto rand = [&](int c) {
    nn::Tensor<double> t(c, 8, 8);
    for (auto& v : t.data) v = rng.uniform();
    return t;
  };
  nn::SampleTensors<double> s;
  s.ambient = rand(3);
  s.flash = rand(3);
  s.flash_only = rand(3);
  s.transmission = rand(3);
  s.reflection = rand(3);

  nn::Model<double> joint = m.zeros_like(), detached = m.zeros_like();
  nn::model_backward(m, s, joint);
  nn::model_backward(m, s, detached, nn::BackwardOptions{true});

  // The joint-minus-detached gradient of a g_R weight must equal dL_T/dw by
  // central differences.
  auto l_t = [&](const nn::Model<double>& mm) {
    return nn::model_loss(nn::model_forward(mm, s.ambient, &s.flash_only), s).transmission;
  };
  double worst = 0.0, largest = 0.0;
  const auto& layers = m.net("R").layers;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t i = 0; i < layers[l].weight.size(); i += 7) {
      nn::Model<double> plus = m, minus = m;
      plus.net("R").layers[l].weight[i] += 1e-5;
      minus.net("R").layers[l].weight[i] -= 1e-5;
      const double numeric = (l_t(plus) - l_t(minus)) / 2e-5;
      const double analytic = joint.net("R").layers[l].weight[i] - detached.net("R").layers[l].weight[i];
      largest = std::max(largest, std::abs(analytic));
      worst = std::max(worst, nn::relative_error(analytic, numeric));
    }
  }

  // Perturbing i_fo changes T-hat only through R-hat.
  double independence = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const nn::Tensor<double> fo = rand(3);
    const auto pass = nn::model_forward(m, s.ambient, &fo);
    const auto direct = nn::estimate_transmission(m.net("T"), s.ambient, *pass.reflection);
    for (std::size_t k = 0; k < direct.size(); ++k)
      independence = std::max(independence, std::abs(direct.data[k] - pass.transmission.data[k]));
  }
  return {largest > 0.0 && worst < 1e-4 && independence == 0.0,
          fmt("|dL_T/dtheta_R| up to %.3g", largest) + fmt(", rel error %.3g", worst) +
              fmt(", T-hat residual %.3g", independence)};
}

// 7 and 8. Toy ablation on a fixed strong-reflection dataset, 3 seeds.
struct AblationOutcome {
  Outcome ordering, baseline;
};

AblationOutcome toy_ablation() {
  const auto t0 = Clock::now();
  const fs::path dir = scratch("ablation");
  SimulateOptions so;
  so.preset = Preset::StrongReflection;
  so.count = 128;
  so.width = so.height = 64;
  so.seed = 7;
  so.out_dir = dir / "data";
  simulate(so);
  const fs::path manifest = dir / "data" / "manifest.tsv";
  const auto train_set = load_role(manifest, Role::Train);
  const auto val_set = load_role(manifest, Role::Val);
  const auto test_set = load_role(manifest, Role::Test);
  std::printf("  dataset: %zu train, %zu val, %zu test\n", train_set.size(), val_set.size(), test_set.size());

  const nn::Variant variants[] = {nn::Variant::TwoStageFo, nn::Variant::SingleIa, nn::Variant::TwoStageF};
  bool order_ok = true, baseline_ok = true;
  std::string order_detail, baseline_detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::map<nn::Variant, double> final_val;
    std::vector<fs::path> ckpts;
    for (nn::Variant v : variants) {
      nn::TrainConfig cfg;
      cfg.epochs = 40;
      cfg.learning_rate = 1e-3;
      cfg.schedule = nn::LrSchedule::Cosine;
      cfg.seed = seed;
      const TrainOutputs r = train_variant(train_set, val_set, v, cfg, dir / ("seed" + std::to_string(seed)));
      final_val[v] = r.result.log.back().val_loss;
      ckpts.push_back(r.checkpoint);
    }
    const double fo = final_val[nn::Variant::TwoStageFo];
    const double ia = final_val[nn::Variant::SingleIa];
    const double f = final_val[nn::Variant::TwoStageF];
    const bool ok = fo < ia && fo < f;
    order_ok = order_ok && ok;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%sseed %llu: fo %.5f ia %.5f f %.5f", order_detail.empty() ? "" : "; ",
                  static_cast<unsigned long long>(seed), fo, ia, f);
    order_detail += buf;
    std::printf("  seed %llu final val L_T: two_stage_fo %.6f, single_ia %.6f, two_stage_f %.6f\n",
                static_cast<unsigned long long>(seed), fo, ia, f);

    const EvalOutputs ev = evaluate_checkpoints(test_set, ckpts, dir / ("report" + std::to_string(seed)));
    const double input = ev.report.row(kInputRow).psnr_mean;
    const double ours = ev.report.row("two_stage_fo").psnr_mean;
    baseline_ok = baseline_ok && ours - input >= 1.0;
    std::snprintf(buf, sizeof(buf), "%sseed %llu: %.2f vs %.2f dB", baseline_detail.empty() ? "" : "; ",
                  static_cast<unsigned long long>(seed), ours, input);
    baseline_detail += buf;
    std::printf("  seed %llu test PSNR: two_stage_fo %.3f dB, input %.3f dB\n", static_cast<unsigned long long>(seed),
                ours, input);
    std::fflush(stdout);
  }
  const double minutes = seconds_since(t0) / 60.0;
  order_detail += fmt("; %.1f min", minutes);
  return {{order_ok && minutes < 30.0, order_detail}, {baseline_ok && minutes < 30.0, baseline_detail}};
}

// 9. Metric sanity.
Outcome metrics() {
  const double p = psnr(SrgbImage(32, 32, 3, 0.2f), SrgbImage(32, 32, 3, 0.3f));
  SrgbImage a(32, 32, 3);
  Rng rng(9);
  for (auto& v : a.data) v = static_cast<float>(rng.uniform());
  const double self = ssim(a, a);
  const double c1 = kSsimK1 * kSsimK1;
  const double closed = (2 * 0.2 * 0.4 + c1) / (0.2 * 0.2 + 0.4 * 0.4 + c1);
  const double got = ssim(SrgbImage(16, 16, 3, 0.2f), SrgbImage(16, 16, 3, 0.4f));
  return {std::abs(p - 20.0) <= 1e-4 && std::abs(self - 1.0) < 1e-12 && std::abs(got - closed) < 1e-6,
          fmt("psnr %.6f", p) + fmt(", ssim(a,a) %.12f", self) + fmt(", constant ssim %.8f", got) +
              fmt(" vs %.8f", closed)};
}

// 10. Two identical tiny ablation runs produce identical files.
Outcome determinism() {
  const fs::path dir = scratch("determinism");
  for (const char* run : {"a", "b"}) {
    std::ostringstream out, err;
    const int code = cli::run({"ablate", "--tiny", "--seed", "3", "--out-dir", (dir / run).string()}, out, err);
    if (code != 0) return {false, "ablate exited with " + std::to_string(code) + ": " + err.str()};
  }
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir / "a");
    const std::string ext = rel.extension().string();
    if (ext != ".ckpt" && ext != ".tsv" && ext != ".csv") continue;
    ++compared;
    const fs::path other = dir / "b" / rel;
    if (!fs::exists(other) || read_file_bytes(e.path()) != read_file_bytes(other)) differing.push_back(rel.string());
  }
  std::string detail = std::to_string(compared) + " checkpoint/manifest/CSV files compared";
  for (const auto& d : differing) detail += ", differs: " + d;
  return {compared > 0 && differing.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  AblationOutcome ablation;
  const std::vector<Criterion> criteria = {
      {1, "reflection-free cue", leakage},
      {2, "layer additivity", additivity},
      {3, "ambient invariance", ambient_invariance},
      {4, "ISP correctness", isp},
      {5, "gradient check", gradcheck},
      {6, "stage wiring", wiring},
      {7, "toy ablation ordering",
       [&] {
         ablation = toy_ablation();
         return ablation.ordering;
       }},
      {8, "do-nothing baseline beaten", [&] { return ablation.baseline; }},
      {9, "metric sanity", metrics},
      {10, "determinism", determinism},
  };
  int failures = 0;
  std::string report;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    char line[1024];
    std::snprintf(line, sizeof(line), "%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                  o.detail.c_str());
    std::fputs(line, stdout);
    std::fflush(stdout);
    report += line;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  write_file_bytes("acceptance_report.txt", report);
  return failures == 0 ? 0 : 1;
}
