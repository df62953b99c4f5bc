// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashsep/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "flashsep/image_io.hpp"
#include "flashsep/isp.hpp"
#include "flashsep/nn/checkpoint.hpp"
#include "flashsep/parallel.hpp"
#include "flashsep/rng.hpp"
#include "flashsep/scene_io.hpp"

namespace flashsep {

namespace {

void emit(const LogSink& log, const std::string& msg) {
  if (log) log(msg);
}

std::string numbered(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return prefix + "_" + buf;
}

double mean_value(const LinearImage& img) {
  double sum = 0.0;
  for (float v : img.data) sum += v;
  return img.data.empty() ? 0.0 : sum / static_cast<double>(img.data.size());
}

std::map<std::string, Role> assign_roles(const std::vector<std::string>& ids, const Proportions& p, std::uint64_t seed) {
  std::vector<SplitItem> items;
  for (const auto& id : ids) items.push_back({id, {id}});
  return split_dataset(items, p, seed);
}

}  // namespace

FlashOnlyOutputs compute_flash_only(const RawImage& ambient, const RawImage& flash) {
  FlashOnly fo = subtract_flash_only(flash, ambient);
  const IspMetadata meta = metadata_of(ambient);
  FlashOnlyOutputs out;
  out.rgb = color_correct(white_balance(demosaic(fo.plane, ambient.meta.cfa), meta.wb_gains), meta.ccm);
  out.preview = gamma_encode(out.rgb, meta.gamma);
  out.bayer = std::move(fo.plane);
  out.mask = std::move(fo.mask);
  return out;
}

void write_flash_only(const fs::path& out_dir, const FlashOnlyOutputs& fo) {
  fs::create_directories(out_dir);
  write_pfm(out_dir / "i_fo_bayer.pfm", fo.bayer);
  write_pfm(out_dir / "i_fo.pfm", fo.rgb);
  write_pnm(out_dir / "i_fo_preview.ppm", fo.preview);
  write_mask_pgm(out_dir / "mask.pgm", fo.mask);
}

Manifest simulate(const SimulateOptions& opt, const LogSink& log) {
  require(opt.count >= 0, "count must be non-negative");
  std::optional<SceneSpec> base;
  if (opt.spec) base = read_scene_spec(*opt.spec);

  const auto n = static_cast<std::size_t>(opt.count);
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = numbered("sim", i);
  const auto roles = assign_roles(ids, opt.proportions, opt.seed);

  fs::create_directories(opt.out_dir);
  std::vector<std::string> warnings(n);
  parallel_for(n, [&](std::size_t i) {
    SceneSpec spec;
    if (base) {
      spec = *base;
      spec.noise_seed = derive_seed(opt.seed, i);
    } else {
      spec = make_preset_scene(opt.preset, opt.width, opt.height, derive_seed(opt.seed, i));
    }
    spec.id = ids[i];
    const SampleSet s = render_scene(spec);
    const double step = quantization_step(spec.camera.black_level, spec.camera.white_level);
    const double t_fo = mean_value(s.t_fo);
    if (t_fo < step) {
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "%s: mean flash-only transmission %.3g is below one quantization step (%.3g); "
                    "the flash-only image holds little besides reflected flash",
                    ids[i].c_str(), t_fo, step);
      warnings[i] = buf;
    }
    write_sample(opt.out_dir, ids[i], s);
  });
  for (const auto& w : warnings)
    if (!w.empty()) emit(log, "warning: " + w);

  Manifest m;
  for (const auto& id : ids) m.records.push_back(standard_record(id, roles.at(id)));
  write_manifest(opt.out_dir / kManifestName, m);
  return m;
}

void SynthOptions::validate() const {
  require(count >= 0, "count must be non-negative");
  require(alpha_range.first > 0.0 && alpha_range.first <= alpha_range.second && alpha_range.second <= 1.0,
          "alpha range must satisfy 0 < lo <= hi <= 1");
  require(blur_sigma_range.first >= 0.0 && blur_sigma_range.first <= blur_sigma_range.second,
          "blur sigma range must satisfy 0 <= lo <= hi");
  require(sharp_fraction >= 0.0 && sharp_fraction <= 1.0, "sharp fraction must lie in [0, 1]");
  require(crop >= 0 && crop % 2 == 0, "crop must be a non-negative even size");
}

namespace {

struct Source {
  std::string id;
  Role role = Role::Train;
  SampleSet set;
};

SrgbImage mirrored(const SrgbImage& img) {
  SrgbImage out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
  return out;
}

CameraModel camera_of(const RawMetadata& m) {
  CameraModel cam;
  cam.cfa = m.cfa;
  cam.black_level = m.black_level;
  cam.white_level = m.white_level;
  cam.wb_gains = m.wb_gains;
  cam.ccm = m.ccm;
  return cam;
}

}  // namespace

Manifest synthesize(const SynthOptions& opt, const LogSink& log) {
  opt.validate();
  std::vector<Source> sources;
  if (opt.sources) {
    const Manifest src = read_manifest(*opt.sources);
    const fs::path dir = opt.sources->parent_path();
    sources.resize(src.records.size());
    parallel_for(sources.size(), [&](std::size_t i) {
      sources[i] = {src.records[i].id, src.records[i].role, load_sample(dir, src.records[i])};
    });
  } else {
    const auto n = static_cast<std::size_t>(opt.count);
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = numbered("src", i);
    const auto roles = assign_roles(ids, opt.proportions, derive_seed(opt.seed, "sources"));
    sources.resize(n);
    parallel_for(n, [&](std::size_t i) {
      SceneSpec spec = make_preset_scene(opt.preset, opt.width, opt.height, derive_seed(opt.seed, "source" + ids[i]));
      spec.id = ids[i];
      sources[i] = {ids[i], roles.at(ids[i]), render_scene(spec)};
    });
  }
  if (opt.count > 0) require(!sources.empty(), "synthesis needs at least one source");

  std::map<Role, std::vector<std::size_t>> pools;
  for (std::size_t i = 0; i < sources.size(); ++i) pools[sources[i].role].push_back(i);

  const Gamma gamma = Gamma::power(kSourceGamma);
  const auto n = static_cast<std::size_t>(opt.count);
  std::vector<ManifestRecord> records(n);
  std::vector<double> clamped(n);
  fs::create_directories(opt.out_dir);
  parallel_for(n, [&](std::size_t j) {
    Rng rng(derive_seed(opt.seed, "synth"), numbered("pair", j));
    const Source& t = sources[j % sources.size()];
    const auto& pool = pools.at(t.role);
    SrgbImage r_rgb;
    if (pool.size() == 1) {
      r_rgb = mirrored(gamma_encode(t.set.t_a, gamma));
    } else {
      std::size_t k = pool[rng.below(pool.size())];
      while (k == j % sources.size()) k = pool[rng.below(pool.size())];
      r_rgb = gamma_encode(sources[k].set.t_a, gamma);
    }
    SynthParams p;
    p.reflection_weight = rng.uniform(opt.alpha_range.first, opt.alpha_range.second);
    p.reflection_kind = rng.uniform() < opt.sharp_fraction ? ReflectionKind::Sharp : ReflectionKind::Blurry;
    p.blur_sigma = rng.uniform(opt.blur_sigma_range.first, opt.blur_sigma_range.second);
    p.crop = opt.crop;
    p.seed = rng.bits();
    p.noise_sigma = SceneArtifacts{}.noise_sigma;
    p.camera = camera_of(t.set.raw_a.meta);
    SynthResult r = synthesize_pair(gamma_encode(t.set.t_a, gamma), gamma_encode(t.set.i_fo, gamma), r_rgb, p);
    const std::string id = numbered(opt.id_prefix, j);
    write_sample(opt.out_dir, id, r.set);
    records[j] = standard_record(id, t.role);
    clamped[j] = r.clamped_fraction;
  });

  double total = 0.0;
  for (double c : clamped) total += c;
  if (n > 0) {
    const double frac = total / static_cast<double>(n);
    char buf[128];
    std::snprintf(buf, sizeof buf, "synthesized %zu pairs, clamped pixel fraction %.4f", n, frac);
    emit(log, buf);
    if (frac >= 0.05) emit(log, "warning: clamped pixel fraction is at or above 5%");
  }

  Manifest m;
  m.records = std::move(records);
  write_manifest(opt.out_dir / kManifestName, m);
  return m;
}

std::vector<EvalSample> load_role(const fs::path& manifest_path, Role role) {
  const Manifest m = read_manifest(manifest_path);
  const auto recs = m.with_role(role);
  const fs::path dir = manifest_path.parent_path();
  std::vector<EvalSample> out(recs.size());
  parallel_for(recs.size(), [&](std::size_t i) {
    out[i] = {recs[i]->id, nn::prepare_sample(load_sample(dir, *recs[i]))};
  });
  return out;
}

namespace {

std::vector<nn::SampleTensors<float>> tensors_of(const std::vector<EvalSample>& s) {
  std::vector<nn::SampleTensors<float>> out;
  out.reserve(s.size());
  for (const auto& e : s) out.push_back(e.tensors);
  return out;
}

std::vector<nn::EpochLog> parse_loss_log(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  require(line == "epoch,train_loss,val_loss", "loss log: unexpected header");
  std::vector<nn::EpochLog> log;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nn::EpochLog e;
    require(std::sscanf(line.c_str(), "%d,%lf,%lf", &e.epoch, &e.train_loss, &e.val_loss) == 3,
            "loss log: malformed line '" + line + "'");
    log.push_back(e);
  }
  return log;
}

}  // namespace

TrainOutputs train_variant(const std::vector<EvalSample>& train_set, const std::vector<EvalSample>& val_set,
                           nn::Variant variant, const nn::TrainConfig& cfg, const fs::path& out_dir,
                           const LogSink& log) {
  TrainOutputs out;
  out.result = nn::train(tensors_of(train_set), tensors_of(val_set), variant, cfg);
  fs::create_directories(out_dir);
  const std::string name(nn::to_string(variant));
  out.checkpoint = out_dir / (name + ".ckpt");
  out.loss_log = out_dir / (name + "_loss.csv");
  nn::save_checkpoint(out.checkpoint, {out.result.best, cfg.seed, out.result.best_epoch});
  write_file_bytes(out.loss_log, nn::format_loss_log(out.result.log));
  const auto& last = out.result.log.back();
  char buf[192];
  std::snprintf(buf, sizeof buf, "%s: %d epochs, final train %.6g, final val L_T %.6g, best epoch %d", name.c_str(),
                last.epoch, last.train_loss, last.val_loss, out.result.best_epoch);
  emit(log, buf);
  return out;
}

EvalOutputs evaluate_checkpoints(const std::vector<EvalSample>& test_set, const std::vector<fs::path>& checkpoints,
                                 const fs::path& out_dir) {
  std::vector<nn::Model<float>> models;
  for (const auto& p : checkpoints) {
    if (!fs::exists(p)) throw std::runtime_error("missing checkpoint " + p.string());
    models.push_back(nn::load_checkpoint(p).model);
  }
  EvalOutputs out;
  out.report = evaluate(test_set, models);
  out.per_sample_csv = format_per_sample_csv(out.report);
  out.summary_csv = format_summary_csv(out.report);
  out.summary_text = format_summary_text(out.report);
  fs::create_directories(out_dir);
  write_file_bytes(out_dir / "per_sample.csv", out.per_sample_csv);
  write_file_bytes(out_dir / "summary.csv", out.summary_csv);
  write_file_bytes(out_dir / "summary.txt", out.summary_text);
  return out;
}

AblateOptions AblateOptions::tiny() {
  AblateOptions o;
  o.count = 32;
  o.size = 64;
  o.epochs = 10;
  return o;
}

AblateOutputs ablate(const AblateOptions& opt, const LogSink& log) {
  require(opt.count > 0 && opt.size > 0 && opt.epochs >= 0, "ablate: count, size and epochs must be positive");
  require(!opt.variants.empty(), "ablate: no variants requested");

  SimulateOptions sim;
  sim.preset = opt.preset;
  sim.count = opt.count;
  sim.width = sim.height = opt.size;
  sim.seed = derive_seed(opt.seed, "simulate");
  sim.out_dir = opt.out_dir / "data";
  emit(log, "simulating " + std::to_string(opt.count) + " scenes");
  simulate(sim, log);

  const fs::path data_manifest = sim.out_dir / kManifestName;
  std::vector<EvalSample> train_set = load_role(data_manifest, Role::Train);
  const std::vector<EvalSample> val_set = load_role(data_manifest, Role::Val);
  const std::vector<EvalSample> test_set = load_role(data_manifest, Role::Test);

  const int synth_count = static_cast<int>(opt.synth_fraction * static_cast<double>(train_set.size()) + 0.5);
  if (synth_count > 0) {
    // Supplements come from train-role sources only.
    Manifest train_only;
    const Manifest all = read_manifest(data_manifest);
    for (const auto* r : all.with_role(Role::Train)) train_only.records.push_back(*r);
    // Relative sample paths resolve against the data directory.
    const fs::path sources = sim.out_dir / "train_sources.tsv";
    write_manifest(sources, train_only);
    SynthOptions syn;
    syn.sources = sources;
    syn.count = synth_count;
    syn.seed = derive_seed(opt.seed, "synth");
    syn.out_dir = opt.out_dir / "synth";
    synthesize(syn, log);
    const auto extra = load_role(syn.out_dir / kManifestName, Role::Train);
    train_set.insert(train_set.end(), extra.begin(), extra.end());
  }

  nn::TrainConfig cfg;
  cfg.epochs = opt.epochs;
  cfg.learning_rate = opt.learning_rate;
  cfg.schedule = opt.schedule;
  cfg.seed = derive_seed(opt.seed, "train");
  cfg.shape = opt.shape;

  AblateOutputs out;
  const fs::path ckpt_dir = opt.out_dir / "checkpoints";
  std::vector<fs::path> ckpts;
  for (nn::Variant v : opt.variants) {
    const std::string name(nn::to_string(v));
    const fs::path ckpt = ckpt_dir / (name + ".ckpt");
    const fs::path loss = ckpt_dir / (name + "_loss.csv");
    if (fs::exists(ckpt) && fs::exists(loss)) {
      emit(log, name + ": checkpoint present, skipping training");
      out.logs.emplace_back(v, parse_loss_log(read_file_bytes(loss)));
    } else {
      emit(log, "training " + name);
      out.logs.emplace_back(v, train_variant(train_set, val_set, v, cfg, ckpt_dir, log).result.log);
    }
    ckpts.push_back(ckpt);
  }
  out.eval = evaluate_checkpoints(test_set, ckpts, opt.out_dir / "report");
  return out;
}

}  // namespace flashsep
