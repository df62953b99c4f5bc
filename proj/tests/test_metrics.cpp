// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "flashsep/metrics.hpp"
#include "flashsep/nn/train.hpp"
#include "flashsep/scene.hpp"
#include "helpers.hpp"

using namespace flashsep;

namespace {

SrgbImage random_image(int w, int h, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  SrgbImage img(w, h, 3);
  Rng rng(seed);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform(lo, hi));
  return img;
}

std::vector<EvalSample> eval_samples(int n) {
  std::vector<EvalSample> out;
  for (int i = 0; i < n; ++i)
    out.push_back({"e" + std::to_string(i),
                   nn::prepare_sample(render_scene(make_preset_scene(Preset::StrongReflection, 24, 16, 40 + i)))});
  return out;
}

}  // namespace

TEST_CASE("PSNR") {
  const SrgbImage a(16, 16, 3, 0.3f);
  CHECK(psnr(a, SrgbImage(16, 16, 3, 0.4f)) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK(psnr(SrgbImage(16, 16, 3, 0.0f), SrgbImage(16, 16, 3, 0.5f)) == doctest::Approx(10.0 * std::log10(4.0)));
  CHECK(psnr(SrgbImage(16, 16, 3, 0.0f), SrgbImage(16, 16, 3, 0.5f)) == doctest::Approx(6.0206).epsilon(1e-5));
  CHECK(std::isinf(psnr(a, a)));
  CHECK(format_metric(psnr(a, a)) == "inf");
  CHECK(format_metric(20.0) == "20");
  CHECK_THROWS_AS(psnr(a, SrgbImage(16, 8, 3)), ValidationError);

  const SrgbImage x = random_image(20, 20, 1, 0.1f, 0.7f), y = random_image(20, 20, 2, 0.1f, 0.7f);
  SrgbImage xs = x, ys = y;
  for (auto& v : xs.data) v += 0.25f;
  for (auto& v : ys.data) v += 0.25f;
  CHECK(psnr(xs, ys) == doctest::Approx(psnr(x, y)).epsilon(1e-4));
}

TEST_CASE("SSIM") {
  const SrgbImage x = random_image(24, 20, 3), y = random_image(24, 20, 4);
  CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim(x, y) == ssim(y, x));
  CHECK(ssim(x, y) < 0.5);
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double expected = (2 * 0.2 * 0.4 + c1) / (0.04 + 0.16 + c1);
  CHECK(std::abs(ssim(SrgbImage(16, 16, 3, 0.2f), SrgbImage(16, 16, 3, 0.4f)) - expected) < 1e-6);
  CHECK_THROWS_AS(ssim(SrgbImage(10, 16, 3), SrgbImage(10, 16, 3)), ValidationError);
  CHECK_THROWS_AS(ssim(x, random_image(20, 24, 1)), ValidationError);

  SUBCASE("matches a direct evaluation of one window") {
    // 11x11 image: exactly one valid window position.
    const SrgbImage a = random_image(11, 11, 5), b = random_image(11, 11, 6);
    double wsum = 0.0;
    std::vector<double> wts;
    for (int j = -5; j <= 5; ++j)
      for (int i = -5; i <= 5; ++i) {
        wts.push_back(std::exp(-(i * i + j * j) / (2.0 * kSsimSigma * kSsimSigma)));
        wsum += wts.back();
      }
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
      double ma = 0, mb = 0;
      for (int k = 0; k < 121; ++k) {
        ma += wts[k] / wsum * a.at(k % 11, k / 11, c);
        mb += wts[k] / wsum * b.at(k % 11, k / 11, c);
      }
      double va = 0, vb = 0, cov = 0;
      for (int k = 0; k < 121; ++k) {
        const double da = a.at(k % 11, k / 11, c) - ma, db = b.at(k % 11, k / 11, c) - mb;
        va += wts[k] / wsum * da * da;
        vb += wts[k] / wsum * db * db;
        cov += wts[k] / wsum * da * db;
      }
      const double c2 = (kSsimK2) * (kSsimK2);
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    CHECK(ssim(a, b) == doctest::Approx(total / 3.0).epsilon(1e-6));
  }
}

TEST_CASE("evaluation report") {
  const auto samples = eval_samples(3);
  const std::vector<nn::Model<float>> models = {
      nn::init_model<float>(nn::Variant::TwoStageFo, nn::NetShape{2, {4, 8}, 0.2}, 1),
      nn::init_model<float>(nn::Variant::SingleIa, nn::NetShape{2, {4, 8}, 0.2}, 2)};
  const EvalReport r = evaluate(samples, models);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].variant == kInputRow);
  CHECK(r.row("two_stage_fo").n() == 3);
  CHECK_THROWS_AS(r.row("base_f"), ValidationError);

  SUBCASE("input row scores the ambient image") {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto a = nn::to_image<DisplaySpace>(samples[i].tensors.ambient);
      const auto t = nn::to_image<DisplaySpace>(samples[i].tensors.transmission);
      CHECK(r.rows[0].psnr[i] == psnr(a, t));
      CHECK(r.rows[0].ssim[i] == ssim(a, t));
    }
  }
  SUBCASE("means recomputed from the per-sample CSV") {
    std::map<std::string, std::pair<double, int>> sums;
    std::istringstream csv(format_per_sample_csv(r));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "variant,sample_id,psnr,ssim");
    std::map<std::string, double> ssum;
    while (std::getline(csv, line)) {
      std::istringstream ls(line);
      std::string variant, id, p, s;
      std::getline(ls, variant, ',');
      std::getline(ls, id, ',');
      std::getline(ls, p, ',');
      std::getline(ls, s, ',');
      sums[variant].first += std::stod(p);
      sums[variant].second += 1;
      ssum[variant] += std::stod(s);
    }
    for (const auto& row : r.rows) {
      CHECK(sums[row.variant].first / sums[row.variant].second == row.psnr_mean);
      CHECK(ssum[row.variant] / sums[row.variant].second == row.ssim_mean);
    }
    std::istringstream summary(format_summary_csv(r));
    std::getline(summary, line);
    CHECK(line == "variant,n,psnr_mean,ssim_mean");
  }
  SUBCASE("deterministic output") {
    const EvalReport again = evaluate(samples, models);
    CHECK(format_per_sample_csv(again) == format_per_sample_csv(r));
    CHECK(format_summary_csv(again) == format_summary_csv(r));
    CHECK(format_summary_text(again) == format_summary_text(r));
  }
  SUBCASE("empty split is an error") {
    CHECK_THROWS_AS(evaluate({}, models), ValidationError);
  }
}
