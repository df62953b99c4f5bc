// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "cli.hpp"
#include "flashsep/image_io.hpp"
#include "flashsep/manifest.hpp"
#include "flashsep/nn/checkpoint.hpp"
#include "helpers.hpp"

using namespace flashsep;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("flashonly verb") {
  const auto dir = test::scratch_dir("cli_flashonly");
  const RawImage a = test::random_raw(16, 16, 1, 64, 3000);
  write_fraw(dir / "a.fraw", a);
  SUBCASE("identical frames give a zero flash-only image") {
    const Result r = run_cli({"flashonly", "--ambient", (dir / "a.fraw").string(), "--flash",
                              (dir / "a.fraw").string(), "--out-dir", (dir / "out").string()});
    CHECK(r.code == 0);
    const LinearImage fo = read_pfm<LinearSpace>(dir / "out" / "i_fo_bayer.pfm");
    for (float v : fo.data) CHECK(v == 0.0f);
    CHECK(fs::exists(dir / "out" / "i_fo.pfm"));
    CHECK(fs::exists(dir / "out" / "i_fo_preview.ppm"));
    CHECK(fs::exists(dir / "out" / "mask.pgm"));
    CHECK(fs::exists(dir / "out" / "run_config.ini"));
  }
  SUBCASE("CFA mismatch is a validation error") {
    write_fraw(dir / "b.fraw", test::random_raw(16, 16, 2, 64, 3000, Cfa::BGGR));
    const Result r = run_cli({"flashonly", "--ambient", (dir / "a.fraw").string(), "--flash",
                              (dir / "b.fraw").string(), "--out-dir", (dir / "out2").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("cfa") != std::string::npos);
  }
  SUBCASE("missing input file") {
    const Result r = run_cli({"flashonly", "--ambient", (dir / "none.fraw").string(), "--flash",
                              (dir / "a.fraw").string(), "--out-dir", (dir / "out3").string()});
    CHECK(r.code != 0);
  }
}

TEST_CASE("simulate verb") {
  const auto dir = test::scratch_dir("cli_simulate");
  SUBCASE("zero scenes give an empty manifest") {
    CHECK(run_cli({"simulate", "--count", "0", "--out-dir", (dir / "empty").string()}).code == 0);
    CHECK(read_manifest(dir / "empty" / "manifest.tsv").records.empty());
  }
  SUBCASE("same seed gives identical datasets") {
    for (const char* name : {"a", "b"})
      REQUIRE(run_cli({"simulate", "--count", "4", "--seed", "5", "--width", "16", "--height", "16",
                       "--proportions", "0.5", "0.25", "0.25", "--out-dir", (dir / name).string()})
                  .code == 0);
    const auto ma = read_file_bytes(dir / "a" / "manifest.tsv");
    CHECK(ma == read_file_bytes(dir / "b" / "manifest.tsv"));
    const Manifest m = read_manifest(dir / "a" / "manifest.tsv");
    REQUIRE(m.records.size() == 4);
    for (const auto& rec : m.records) {
      CHECK(read_file_bytes(dir / "a" / rec.raw_a) == read_file_bytes(dir / "b" / rec.raw_a));
      CHECK(read_file_bytes(dir / "a" / rec.raw_f) == read_file_bytes(dir / "b" / rec.raw_f));
    }
  }
  SUBCASE("far transmission warns") {
    const Result r = run_cli({"simulate", "--preset", "far-transmission", "--count", "1", "--width", "16",
                              "--height", "16", "--proportions", "1", "0", "0", "--out-dir", (dir / "far").string()});
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
  }
  SUBCASE("invalid arguments") {
    CHECK(run_cli({"simulate", "--preset", "unknown", "--out-dir", (dir / "x").string()}).code == 2);
    CHECK(run_cli({"simulate", "--count", "3", "--proportions", "0.5", "0.5", "0.5", "--out-dir",
                   (dir / "y").string()}).code == 2);
    CHECK(run_cli({"simulate"}).code == 2);
    CHECK(run_cli({"bogus"}).code == 2);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);
  }
}

TEST_CASE("config files") {
  const auto dir = test::scratch_dir("cli_config");
  REQUIRE(run_cli({"simulate", "--count", "3", "--seed", "2", "--width", "16", "--height", "16", "--out-dir",
                   (dir / "first").string()})
              .code == 0);
  const fs::path cfg = dir / "first" / "run_config.ini";
  REQUIRE(fs::exists(cfg));
  SUBCASE("a recorded run replays identically") {
    REQUIRE(run_cli({"simulate", "--config", cfg.string(), "--out-dir", (dir / "replay").string()}).code == 0);
    CHECK(read_file_bytes(dir / "first" / "manifest.tsv") == read_file_bytes(dir / "replay" / "manifest.tsv"));
  }
  SUBCASE("command-line flags override the file") {
    REQUIRE(run_cli({"simulate", "--config", cfg.string(), "--count", "2", "--out-dir", (dir / "over").string()})
                .code == 0);
    CHECK(read_manifest(dir / "over" / "manifest.tsv").records.size() == 2);
  }
  SUBCASE("unknown keys are rejected") {
    write_file_bytes(dir / "bad.ini", "count = 2\ncolour = red\n");
    const Result r = run_cli({"simulate", "--config", (dir / "bad.ini").string(), "--out-dir", (dir / "bad").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("colour") != std::string::npos);
  }
  SUBCASE("missing config file") {
    CHECK(run_cli({"simulate", "--config", (dir / "none.ini").string(), "--out-dir", (dir / "n").string()}).code == 2);
  }
}

TEST_CASE("train, infer and eval verbs") {
  const auto dir = test::scratch_dir("cli_train");
  REQUIRE(run_cli({"simulate", "--preset", "strong-reflection", "--count", "6", "--seed", "3", "--width", "16",
                   "--height", "16", "--proportions", "0.5", "0.25", "0.25", "--out-dir", (dir / "data").string()})
              .code == 0);
  const std::string manifest = (dir / "data" / "manifest.tsv").string();
  SUBCASE("zero learning rate stores the initialization") {
    REQUIRE(run_cli({"train", "--manifest", manifest, "--variant", "two_stage_fo", "--epochs", "1", "--lr", "0",
                     "--seed", "4", "--levels", "2", "--channels", "4", "8", "--out-dir", (dir / "zero").string()})
                .code == 0);
    const nn::Checkpoint c = nn::load_checkpoint(dir / "zero" / "two_stage_fo.ckpt");
    nn::Checkpoint init{nn::init_model<float>(nn::Variant::TwoStageFo, nn::NetShape{2, {4, 8}, 0.2}, 4), 4, 0};
    init.epoch = c.epoch;
    CHECK(nn::serialize_checkpoint(c) == nn::serialize_checkpoint(init));
    CHECK(fs::exists(dir / "zero" / "two_stage_fo_loss.csv"));
  }
  SUBCASE("trained checkpoints feed infer and eval") {
    REQUIRE(run_cli({"train", "--manifest", manifest, "--variant", "two_stage_f", "--epochs", "2", "--lr", "1e-3",
                     "--schedule", "cosine", "--levels", "2", "--channels", "4", "8", "--out-dir",
                     (dir / "run").string()})
                .code == 0);
    const std::string ckpt = (dir / "run" / "two_stage_f.ckpt").string();
    const Manifest m = read_manifest(manifest);
    const auto& rec = m.records.front();
    const Result inf = run_cli({"infer", "--checkpoint", ckpt, "--ambient", (dir / "data" / rec.raw_a).string(),
                                "--flash", (dir / "data" / rec.raw_f).string(), "--out-dir", (dir / "inf").string()});
    CHECK(inf.code == 0);
    const Result no_flash = run_cli({"infer", "--checkpoint", ckpt, "--ambient", (dir / "data" / rec.raw_a).string(),
                                     "--out-dir", (dir / "inf2").string()});
    CHECK(no_flash.code == 2);
    const Result ev = run_cli({"eval", "--manifest", manifest, "--checkpoint", ckpt, "--out-dir", (dir / "ev").string()});
    CHECK(ev.code == 0);
    CHECK(ev.out.find("input_ia") != std::string::npos);
    CHECK(fs::exists(dir / "ev" / "per_sample.csv"));
    CHECK(fs::exists(dir / "ev" / "summary.csv"));
    const Result missing = run_cli({"eval", "--manifest", manifest, "--checkpoint", (dir / "nope.ckpt").string(),
                                    "--out-dir", (dir / "ev2").string()});
    CHECK(missing.code != 0);
  }
  SUBCASE("bad training options") {
    CHECK(run_cli({"train", "--manifest", manifest, "--variant", "nope", "--out-dir", (dir / "b").string()}).code == 2);
    CHECK(run_cli({"train", "--manifest", manifest, "--batch-size", "0", "--out-dir", (dir / "c").string()}).code == 2);
    CHECK(run_cli({"train", "--manifest", manifest, "--schedule", "step", "--out-dir", (dir / "d").string()}).code == 2);
  }
}

TEST_CASE("gradcheck verb") {
  const Result r = run_cli({"gradcheck"});
  CHECK(r.code == 0);
  CHECK(r.out.find("gradcheck passed") != std::string::npos);
}
