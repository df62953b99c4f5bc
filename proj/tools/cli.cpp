// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "flashsep/error.hpp"
#include "flashsep/image_io.hpp"
#include "flashsep/isp.hpp"
#include "flashsep/nn/checkpoint.hpp"
#include "flashsep/nn/gradcheck.hpp"
#include "flashsep/pipeline.hpp"
#include "flashsep/scene_io.hpp"

namespace flashsep::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kRunConfig = "run_config.ini";

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

bool truthy(const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ValidationError("config file: '" + v + "' is not a boolean");
}

bool has_flag(const std::vector<std::string>& args, const std::string& name) {
  for (const auto& a : args)
    if (a == name || a.rfind(name + "=", 0) == 0) return true;
  return false;
}

/// Removes `--config <file>` from args and returns the file, if any.
std::optional<fs::path> take_config(std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ValidationError("--config needs a file");
      fs::path p = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      return p;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      fs::path p = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      return p;
    }
  }
  return std::nullopt;
}

/// Appends config-file entries the command line does not already set.
void merge_config(CLI::App& sub, const std::set<std::string>& flags, const fs::path& file,
                  std::vector<std::string>& args) {
  if (!fs::exists(file)) throw ValidationError("config file " + file.string() + " does not exist");
  for (const auto& [raw_key, value] : parse_key_values(read_file_bytes(file))) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string name = "--" + key;
    CLI::Option* opt = sub.get_option_no_throw(name);
    if (!opt) throw ValidationError("config file: unknown key '" + raw_key + "' for verb " + sub.get_name());
    if (has_flag(args, name)) continue;
    if (flags.count(key)) {
      if (truthy(value)) args.push_back(name);
      continue;
    }
    args.push_back(name);
    if (opt->get_items_expected_max() > 1) {
      for (auto& t : tokens(value)) args.push_back(t);
    } else {
      args.push_back(value);
    }
  }
}

std::string resolved_config(const CLI::App& sub, const std::set<std::string>& flags) {
  std::string out = "# flashsep " + sub.get_name() + "\n";
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string key = opt->get_lnames().front();
    if (key == "help") continue;
    std::string value;
    if (flags.count(key)) {
      value = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
    } else {
      value = opt->get_default_str();
      for (char& c : value)
        if (c == '[' || c == ']' || c == ',') c = ' ';
      value = [&] {
        std::string joined;
        for (const auto& t : tokens(value)) joined += (joined.empty() ? "" : " ") + t;
        return joined;
      }();
    }
    if (value.empty()) continue;
    out += key + " = " + value + "\n";
  }
  return out;
}

void write_run_config(const fs::path& dir, const CLI::App& sub, const std::set<std::string>& flags) {
  fs::create_directories(dir);
  write_file_bytes(dir / kRunConfig, resolved_config(sub, flags));
}

std::string exact_list(const std::vector<double>& v) {
  std::string out;
  char buf[32];
  for (double x : v) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out += (out.empty() ? "" : " ") + std::string(buf);
  }
  return out;
}

Proportions proportions_from(const std::vector<double>& v) {
  require(v.size() == 3, "proportions need three values: train val test");
  Proportions p{v[0], v[1], v[2]};
  return p;
}

nn::NetShape shape_from(int levels, const std::vector<int>& channels, double slope) {
  nn::NetShape s;
  s.levels = levels;
  s.channels = channels;
  s.slope = slope;
  return s;
}

SrgbImage guide_for(nn::Variant v, const RawImage& ambient, const std::optional<RawImage>& flash) {
  const IspMetadata meta = metadata_of(ambient);
  require(flash.has_value(), "variant " + std::string(nn::to_string(v)) + " needs --flash");
  if (nn::guide_of(v) == nn::Guide::Flash) return run_isp(*flash, meta);
  return process_plane(subtract_flash_only(*flash, ambient).plane, ambient.meta.cfa, meta);
}

}  // namespace

int run(const std::vector<std::string>& input_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"flashsep: flash-only cue reflection separation toolkit", "flashsep"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::map<std::string, std::set<std::string>> flag_names;
  std::map<std::string, std::function<int()>> actions;
  const LogSink log = [&err](const std::string& msg) { err << msg << "\n"; };

  // flashonly
  std::string fo_ambient, fo_flash, fo_out;
  {
    auto* s = app.add_subcommand("flashonly", "Subtract an ambient raw from a flash raw");
    s->add_option("--ambient", fo_ambient, "Ambient FRAW file")->required();
    s->add_option("--flash", fo_flash, "Flash FRAW file")->required();
    s->add_option("--out-dir", fo_out, "Output directory")->required();
    actions["flashonly"] = [&, s] {
      const RawImage a = read_fraw(fs::path(fo_ambient));
      const RawImage f = read_fraw(fs::path(fo_flash));
      const FlashOnlyOutputs fo = compute_flash_only(a, f);
      write_flash_only(fo_out, fo);
      write_run_config(fo_out, *s, flag_names["flashonly"]);
      out << "flash-only image written to " << fo_out << " (" << fo.mask.invalid_count() << " masked photosites)\n";
      return kExitOk;
    };
  }

  // simulate
  std::string sim_spec, sim_preset = "default", sim_out;
  int sim_count = 1, sim_width = 64, sim_height = 64;
  std::uint64_t sim_seed = 0;
  std::vector<double> sim_props = {77.0 / 157.0, 30.0 / 157.0, 50.0 / 157.0};
  {
    auto* s = app.add_subcommand("simulate", "Render simulator scenes into a dataset");
    auto* spec = s->add_option("--spec", sim_spec, "Scene description file");
    s->add_option("--preset", sim_preset, "default, strong-reflection, weak-reflection, far-transmission, color-mismatch")
        ->excludes(spec);
    s->add_option("--count", sim_count, "Number of scenes");
    s->add_option("--seed", sim_seed, "Run seed");
    s->add_option("--width", sim_width, "Preset image width");
    s->add_option("--height", sim_height, "Preset image height");
    s->add_option("--proportions", sim_props, "Train, val and test proportions")
        ->expected(3)
        ->default_str(exact_list(sim_props));
    s->add_option("--out-dir", sim_out, "Output directory")->required();
    actions["simulate"] = [&, s] {
      SimulateOptions o;
      if (!sim_spec.empty()) o.spec = fs::path(sim_spec);
      o.preset = parse_preset(sim_preset);
      o.count = sim_count;
      o.width = sim_width;
      o.height = sim_height;
      o.seed = sim_seed;
      o.proportions = proportions_from(sim_props);
      o.out_dir = sim_out;
      const Manifest m = simulate(o, log);
      write_run_config(sim_out, *s, flag_names["simulate"]);
      out << "simulated " << m.records.size() << " samples into " << sim_out << "\n";
      return kExitOk;
    };
  }

  // synth
  std::string syn_sources, syn_preset = "default", syn_out;
  int syn_count = 1, syn_size = 64, syn_crop = 0;
  std::uint64_t syn_seed = 0;
  std::vector<double> syn_alpha = {0.3, 0.9}, syn_sigma = {1.0, 3.0};
  std::vector<double> syn_props = sim_props;
  double syn_sharp = 0.2;
  {
    auto* s = app.add_subcommand("synth", "Composite synthetic training pairs");
    s->add_option("--sources", syn_sources, "Source manifest (rendered from --preset when absent)");
    s->add_option("--preset", syn_preset, "Preset for rendered sources");
    s->add_option("--count", syn_count, "Number of pairs");
    s->add_option("--size", syn_size, "Rendered source size");
    s->add_option("--seed", syn_seed, "Run seed");
    s->add_option("--alpha-range", syn_alpha, "Reflection weight range")->expected(2);
    s->add_option("--blur-sigma-range", syn_sigma, "Reflection blur sigma range in pixels")->expected(2);
    s->add_option("--sharp-fraction", syn_sharp, "Fraction of sharp reflections");
    s->add_option("--crop", syn_crop, "Crop size for samples above 640000 pixels");
    s->add_option("--proportions", syn_props, "Train, val and test proportions for rendered sources")
        ->expected(3)
        ->default_str(exact_list(syn_props));
    s->add_option("--out,--out-dir", syn_out, "Output directory")->required();
    actions["synth"] = [&, s] {
      SynthOptions o;
      if (!syn_sources.empty()) o.sources = fs::path(syn_sources);
      o.preset = parse_preset(syn_preset);
      o.count = syn_count;
      o.width = o.height = syn_size;
      o.seed = syn_seed;
      o.alpha_range = {syn_alpha.at(0), syn_alpha.at(1)};
      o.blur_sigma_range = {syn_sigma.at(0), syn_sigma.at(1)};
      o.sharp_fraction = syn_sharp;
      o.crop = syn_crop;
      o.proportions = proportions_from(syn_props);
      o.out_dir = syn_out;
      const Manifest m = synthesize(o, log);
      write_run_config(syn_out, *s, flag_names["synth"]);
      out << "synthesized " << m.records.size() << " pairs into " << syn_out << "\n";
      return kExitOk;
    };
  }

  // train
  std::string tr_manifest, tr_variant = "two_stage_fo", tr_out;
  std::vector<std::string> tr_supplements;
  nn::TrainConfig tr_cfg;
  std::vector<int> tr_channels = tr_cfg.shape.channels;
  int tr_levels = tr_cfg.shape.levels;
  double tr_slope = tr_cfg.shape.slope;
  bool tr_detach = false;
  std::string tr_schedule = "constant";
  {
    auto* s = app.add_subcommand("train", "Train one network variant");
    s->add_option("--manifest", tr_manifest, "Dataset manifest with train and val records")->required();
    s->add_option("--supplement", tr_supplements, "Extra manifests whose train records are added");
    s->add_option("--variant", tr_variant, "two_stage_fo, two_stage_f, base_fo, base_f or single_ia");
    s->add_option("--epochs", tr_cfg.epochs, "Epochs");
    s->add_option("--lr", tr_cfg.learning_rate, "Adam learning rate");
    s->add_option("--batch-size", tr_cfg.batch_size, "Samples per update");
    s->add_option("--schedule", tr_schedule, "Learning-rate schedule: constant or cosine");
    s->add_option("--seed", tr_cfg.seed, "Initialization and shuffling seed");
    s->add_flag("--detach", tr_detach, "Stop transmission-loss gradients at the estimated reflection");
    flag_names["train"].insert("detach");
    s->add_option("--levels", tr_levels, "U-Net levels");
    s->add_option("--channels", tr_channels, "Channels per level");
    s->add_option("--slope", tr_slope, "Leaky rectifier slope");
    s->add_option("--out-dir", tr_out, "Output directory")->required();
    actions["train"] = [&, s] {
      const nn::Variant v = nn::parse_variant(tr_variant);
      tr_cfg.detach_reflection = tr_detach;
      tr_cfg.schedule = nn::parse_schedule(tr_schedule);
      tr_cfg.shape = shape_from(tr_levels, tr_channels, tr_slope);
      tr_cfg.validate();
      auto train_set = load_role(tr_manifest, Role::Train);
      for (const auto& m : tr_supplements) {
        auto extra = load_role(m, Role::Train);
        train_set.insert(train_set.end(), extra.begin(), extra.end());
      }
      const auto val_set = load_role(tr_manifest, Role::Val);
      write_run_config(tr_out, *s, flag_names["train"]);
      const TrainOutputs r = train_variant(train_set, val_set, v, tr_cfg, tr_out, log);
      out << "checkpoint " << r.checkpoint.string() << " (best epoch " << r.result.best_epoch << ")\n";
      return kExitOk;
    };
  }

  // infer
  std::string in_ckpt, in_ambient, in_flash, in_out;
  {
    auto* s = app.add_subcommand("infer", "Estimate transmission (and reflection) for one raw pair");
    s->add_option("--checkpoint", in_ckpt, "Checkpoint file")->required();
    s->add_option("--ambient", in_ambient, "Ambient FRAW file")->required();
    s->add_option("--flash", in_flash, "Flash FRAW file");
    s->add_option("--out-dir", in_out, "Output directory")->required();
    actions["infer"] = [&, s] {
      const nn::Checkpoint ck = nn::load_checkpoint(in_ckpt);
      const RawImage a = read_fraw(fs::path(in_ambient));
      std::optional<RawImage> f;
      if (!in_flash.empty()) f = read_fraw(fs::path(in_flash));
      const SrgbImage ambient = run_isp(a, metadata_of(a));
      std::optional<SrgbImage> guide;
      if (nn::guide_of(ck.model.variant) != nn::Guide::None) guide = guide_for(ck.model.variant, a, f);
      const nn::Inference r = nn::infer(ck.model, ambient, guide ? &*guide : nullptr);
      fs::create_directories(in_out);
      write_pfm(fs::path(in_out) / "t_hat.pfm", r.transmission);
      write_pnm(fs::path(in_out) / "t_hat.ppm", r.transmission);
      if (r.reflection) {
        write_pfm(fs::path(in_out) / "r_hat.pfm", *r.reflection);
        write_pnm(fs::path(in_out) / "r_hat.ppm", *r.reflection);
      }
      write_run_config(in_out, *s, flag_names["infer"]);
      out << "estimates written to " << in_out << "\n";
      return kExitOk;
    };
  }

  // eval
  std::string ev_manifest, ev_out;
  std::vector<std::string> ev_ckpts;
  {
    auto* s = app.add_subcommand("eval", "Score checkpoints on the test records of a manifest");
    s->add_option("--manifest", ev_manifest, "Dataset manifest")->required();
    s->add_option("--checkpoint", ev_ckpts, "Checkpoint files")->required();
    s->add_option("--out-dir", ev_out, "Output directory")->required();
    actions["eval"] = [&, s] {
      const auto test_set = load_role(ev_manifest, Role::Test);
      std::vector<fs::path> ckpts(ev_ckpts.begin(), ev_ckpts.end());
      write_run_config(ev_out, *s, flag_names["eval"]);
      out << evaluate_checkpoints(test_set, ckpts, ev_out).summary_text;
      return kExitOk;
    };
  }

  // gradcheck
  nn::GradcheckOptions gc;
  {
    auto* s = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
    s->add_option("--seed", gc.seed, "Seed for random parameters and inputs");
    s->add_option("--step", gc.step, "Central difference step");
    s->add_option("--size", gc.size, "Input extent");
    s->add_option("--channels", gc.channels, "Micro-net channels per level");
    actions["gradcheck"] = [&] {
      const nn::GradcheckReport r = nn::run_gradcheck(gc);
      out << r.format();
      out << (r.passed() ? "gradcheck passed\n" : "gradcheck FAILED\n");
      return r.passed() ? kExitOk : kExitRuntime;
    };
  }

  // ablate
  std::string ab_out, ab_preset, ab_schedule;
  std::uint64_t ab_seed = 0;
  bool ab_tiny = false;
  int ab_count = 0, ab_size = 0, ab_epochs = 0;
  double ab_lr = 0.0, ab_synth = 0.0;
  std::vector<std::string> ab_variants;
  {
    auto* s = app.add_subcommand("ablate", "simulate, synth, train every variant, eval");
    s->add_option("--out-dir", ab_out, "Output directory")->required();
    s->add_option("--seed", ab_seed, "Run seed");
    s->add_flag("--tiny", ab_tiny, "32 samples at 64x64, 10 epochs");
    flag_names["ablate"].insert("tiny");
    auto* count = s->add_option("--count", ab_count, "Simulated scenes");
    auto* size = s->add_option("--size", ab_size, "Image size");
    auto* epochs = s->add_option("--epochs", ab_epochs, "Epochs per variant");
    auto* lr = s->add_option("--lr", ab_lr, "Adam learning rate");
    auto* preset = s->add_option("--preset", ab_preset, "Simulator preset");
    auto* synth = s->add_option("--synth-fraction", ab_synth, "Synthetic pairs per train source");
    auto* schedule = s->add_option("--schedule", ab_schedule, "Learning-rate schedule: constant or cosine");
    auto* variants = s->add_option("--variants", ab_variants, "Variants to train");
    actions["ablate"] = [&, count, size, epochs, lr, preset, synth, schedule, variants] {
      AblateOptions o = ab_tiny ? AblateOptions::tiny() : AblateOptions{};
      o.out_dir = ab_out;
      o.seed = ab_seed;
      if (count->count()) o.count = ab_count;
      if (size->count()) o.size = ab_size;
      if (epochs->count()) o.epochs = ab_epochs;
      if (lr->count()) o.learning_rate = ab_lr;
      if (preset->count()) o.preset = parse_preset(ab_preset);
      if (synth->count()) o.synth_fraction = ab_synth;
      if (schedule->count()) o.schedule = nn::parse_schedule(ab_schedule);
      if (variants->count()) {
        o.variants.clear();
        for (const auto& v : ab_variants) o.variants.push_back(nn::parse_variant(v));
      }
      // Record the effective settings, including --tiny defaults.
      std::ostringstream cfg;
      cfg.precision(17);
      cfg << "# flashsep ablate\nout-dir = " << ab_out << "\nseed = " << o.seed << "\ntiny = "
          << (ab_tiny ? "true" : "false") << "\ncount = " << o.count << "\nsize = " << o.size
          << "\nepochs = " << o.epochs << "\nlr = " << o.learning_rate << "\npreset = " << to_string(o.preset)
          << "\nsynth-fraction = " << o.synth_fraction << "\nschedule = " << nn::to_string(o.schedule)
          << "\nvariants =";
      for (auto v : o.variants) cfg << " " << nn::to_string(v);
      cfg << "\n";
      fs::create_directories(ab_out);
      write_file_bytes(fs::path(ab_out) / kRunConfig, cfg.str());
      const AblateOutputs r = ablate(o, log);
      out << r.eval.summary_text;
      return kExitOk;
    };
  }

  std::vector<std::string> args = input_args;
  try {
    const auto config = take_config(args);
    if (config) {
      CLI::App* sub = nullptr;
      for (const auto& a : args)
        if (auto* found = app.get_subcommand_no_throw(a); found && !sub) sub = found;
      if (!sub) throw ValidationError("--config needs a verb");
      merge_config(*sub, flag_names[sub->get_name()], *config, args);
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  for (auto& [name, action] : actions) {
    if (!app.got_subcommand(name)) continue;
    try {
      return action();
    } catch (const ValidationError& e) {
      err << "error: " << e.what() << "\n";
      return kExitValidation;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
  return kExitValidation;
}

}  // namespace flashsep::cli
