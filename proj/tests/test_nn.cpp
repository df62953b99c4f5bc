// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "flashsep/nn/checkpoint.hpp"
#include "flashsep/nn/gradcheck.hpp"
#include "flashsep/nn/train.hpp"
#include "flashsep/scene.hpp"
#include "helpers.hpp"

using namespace flashsep;
using namespace flashsep::nn;

namespace {

template <class T>
Tensor<T> random_tensor(int c, int h, int w, std::uint64_t seed) {
  Tensor<T> t(c, h, w);
  Rng rng(seed);
  for (auto& v : t.data) v = static_cast<T>(rng.uniform());
  return t;
}

SampleTensors<float> random_sample(int h, int w, std::uint64_t seed) {
  SampleTensors<float> s;
  s.ambient = random_tensor<float>(3, h, w, seed * 5 + 0);
  s.flash = random_tensor<float>(3, h, w, seed * 5 + 1);
  s.flash_only = random_tensor<float>(3, h, w, seed * 5 + 2);
  s.transmission = random_tensor<float>(3, h, w, seed * 5 + 3);
  s.reflection = random_tensor<float>(3, h, w, seed * 5 + 4);
  return s;
}

NetShape small_shape() { return NetShape{2, {4, 8}, 0.2}; }

bool same_params(Model<float> a, Model<float> b) {
  std::vector<std::vector<float>> va, vb;
  a.for_each_tensor([&](const std::string&, const std::vector<int>&, std::vector<float>& v) { va.push_back(v); });
  b.for_each_tensor([&](const std::string&, const std::vector<int>&, std::vector<float>& v) { vb.push_back(v); });
  return va == vb;
}

std::vector<SampleTensors<float>> scene_samples(int n, std::uint64_t seed) {
  std::vector<SampleTensors<float>> out;
  for (int i = 0; i < n; ++i)
    out.push_back(prepare_sample(render_scene(make_preset_scene(Preset::StrongReflection, 16, 16, seed + i))));
  return out;
}

}  // namespace

TEST_CASE("He initialization") {
  const UNetArch arch{3, {16, 32, 64}, 6, 3, 0.2};
  const UNet<float> a = init_unet<float>(arch, 11), b = init_unet<float>(arch, 11), c = init_unet<float>(arch, 12);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    CHECK(a.layers[l].weight == b.layers[l].weight);
    CHECK(a.layers[l].weight != c.layers[l].weight);
    for (float v : a.layers[l].bias) CHECK(v == 0.0f);
    const auto& layer = a.layers[l];
    if (layer.fan_in() < 144) continue;
    double s2 = 0.0;
    for (float v : layer.weight) s2 += double(v) * v;
    const double std_dev = std::sqrt(s2 / static_cast<double>(layer.weight.size()));
    const double expected = std::sqrt(2.0 / layer.fan_in());
    CHECK(std::abs(std_dev / expected - 1.0) < 0.2);
  }
}

TEST_CASE("U-Net forward") {
  SUBCASE("zero weights give zero output") {
    const UNet<float> net(UNetArch{3, {4, 8, 16}, 3, 3, 0.2});
    for (float v : unet_forward(net, random_tensor<float>(3, 16, 16, 1)).data) CHECK(v == 0.0f);
  }
  SUBCASE("output matches the input size") {
    const UNet<float> net = init_unet<float>(UNetArch{3, {4, 8, 16}, 4, 3, 0.2}, 2);
    for (auto [h, w] : {std::pair{64, 64}, std::pair{96, 64}, std::pair{8, 12}}) {
      const auto y = unet_forward(net, random_tensor<float>(4, h, w, 3));
      CHECK(y.channels == 3);
      CHECK(y.height == h);
      CHECK(y.width == w);
    }
  }
  SUBCASE("bad inputs are rejected") {
    const UNet<float> net = init_unet<float>(UNetArch{3, {4, 8, 16}, 3, 3, 0.2}, 2);
    CHECK_THROWS_AS(unet_forward(net, random_tensor<float>(3, 10, 16, 1)), ValidationError);
    CHECK_THROWS_AS(unet_forward(net, random_tensor<float>(4, 16, 16, 1)), ValidationError);
  }
  SUBCASE("hand-built identity network") {
    // enc0 and the head copy their inputs; positive inputs pass the
    // rectifier unchanged.
    UNet<double> net(UNetArch{1, {3}, 3, 3, 0.2});
    auto& enc = net.layers[0];
    for (int c = 0; c < 3; ++c) enc.weight[((c * 3 + c) * 3 + 1) * 3 + 1] = 1.0;
    auto& head = net.layers[1];
    for (int c = 0; c < 3; ++c) head.weight[c * 3 + c] = 1.0;
    const auto x = random_tensor<double>(3, 6, 10, 5);
    CHECK(unet_forward(net, x).data == x.data);
  }
}

TEST_CASE("stage wiring") {
  const Model<float> m = init_model<float>(Variant::TwoStageFo, small_shape(), 3);
  CHECK(m.net("R").arch.in_channels == 4);
  CHECK(m.net("T").arch.in_channels == 6);
  CHECK(init_model<float>(Variant::BaseFo, small_shape(), 3).net("B").arch.in_channels == 6);
  CHECK(init_model<float>(Variant::SingleIa, small_shape(), 3).net("R").arch.in_channels == 3);
  CHECK(first_stage_inputs(Variant::BaseF) == 6);
  CHECK(first_stage_inputs(Variant::TwoStageF) == 4);
  CHECK(guide_of(Variant::SingleIa) == Guide::None);
  CHECK(guide_of(Variant::TwoStageF) == Guide::Flash);
  CHECK(guide_of(Variant::BaseFo) == Guide::FlashOnly);
  for (Variant v : kAllVariants) CHECK(parse_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_variant("triple"), ValidationError);

  SUBCASE("g_R sees the flash-only image only through its luma") {
    const auto a = random_tensor<float>(3, 16, 16, 1);
    Tensor<float> fo1(3, 16, 16), fo2(3, 16, 16);
    Rng rng(2);
    const std::size_t n = fo1.plane();
    for (std::size_t i = 0; i < n; ++i) {
      const double y = rng.uniform(0.1, 0.5);
      fo1.data[i] = fo1.data[n + i] = fo1.data[2 * n + i] = static_cast<float>(y);
      // Same luma, different chroma.
      fo2.data[i] = static_cast<float>(y + 0.2);
      fo2.data[2 * n + i] = static_cast<float>(y + 0.1);
      fo2.data[n + i] = static_cast<float>(y - (0.2126 * 0.2 + 0.0722 * 0.1) / 0.7152);
    }
    const auto r1 = estimate_reflection(m.net("R"), a, fo1);
    const auto r2 = estimate_reflection(m.net("R"), a, fo2);
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1.data[i] == doctest::Approx(r2.data[i]).epsilon(1e-4));
  }
  SUBCASE("g_T depends on the guide only through the reflection") {
    const SampleTensors<float> s = random_sample(16, 16, 4);
    SampleTensors<float> other = s;
    other.flash_only = random_tensor<float>(3, 16, 16, 99);
    const ForwardPass<float> p1 = model_forward(m, s.ambient, &s.flash_only);
    const auto t_direct = estimate_transmission(m.net("T"), s.ambient, *p1.reflection);
    CHECK(t_direct.data == p1.transmission.data);
    const ForwardPass<float> p2 = model_forward(m, other.ambient, &other.flash_only);
    CHECK(estimate_transmission(m.net("T"), s.ambient, *p2.reflection).data == p2.transmission.data);
  }
  SUBCASE("mismatched inputs") {
    CHECK_THROWS_AS(estimate_reflection(m.net("R"), random_tensor<float>(3, 8, 8, 1), random_tensor<float>(3, 8, 16, 1)),
                    ValidationError);
    CHECK_THROWS_AS(estimate_transmission(m.net("R"), random_tensor<float>(3, 8, 8, 1), random_tensor<float>(3, 8, 8, 1)),
                    ValidationError);
  }
}

TEST_CASE("l2 loss") {
  Tensor<float> a(3, 2, 2, 0.5f), b(3, 2, 2, 0.4f);
  CHECK(l2_loss(a, b) == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(l2_loss(a, a) == 0.0);
  const auto g = l2_loss_grad(a, b);
  for (float v : g.data) CHECK(v == doctest::Approx(2.0 * 0.1 / 12.0).epsilon(1e-6));
}

TEST_CASE("gradients agree with finite differences") {
  const GradcheckReport report = run_gradcheck();
  INFO(report.format());
  CHECK(report.passed());
  CHECK(report.entries.size() >= 10);
  for (const auto& e : report.entries) {
    CHECK(e.checked > 0);
    CHECK(e.max_rel_error < 1e-3);
  }
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(1e-12, -1e-12) == 0.0);
  CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("joint propagation and the detach switch") {
  const Model<float> m = init_model<float>(Variant::TwoStageFo, small_shape(), 5);
  const SampleTensors<float> s = random_sample(16, 16, 6);
  Model<float> joint = m.zeros_like(), detached = m.zeros_like();
  const auto l1 = model_backward(m, s, joint);
  const auto l2 = model_backward(m, s, detached, BackwardOptions{true});
  CHECK(l1.total() == l2.total());
  CHECK(l1.reflection > 0.0);
  // g_T receives identical gradients either way.
  for (std::size_t l = 0; l < joint.net("T").layers.size(); ++l)
    CHECK(joint.net("T").layers[l].weight == detached.net("T").layers[l].weight);
  // g_R gets L_R only when detached: matches a backward through L_R alone.
  bool differs = false;
  for (std::size_t l = 0; l < joint.net("R").layers.size(); ++l)
    differs |= joint.net("R").layers[l].weight != detached.net("R").layers[l].weight;
  CHECK(differs);
  UNetCache<float> cache;
  const auto r = unet_forward(m.net("R"), concat_channels(s.ambient, grayscale(s.flash_only)), cache);
  UNet<float> g = m.net("R").zeros_like();
  unet_backward(m.net("R"), cache, l2_loss_grad(r, s.reflection), g);
  for (std::size_t l = 0; l < g.layers.size(); ++l)
    for (std::size_t i = 0; i < g.layers[l].weight.size(); ++i)
      CHECK(detached.net("R").layers[l].weight[i] == doctest::Approx(g.layers[l].weight[i]).epsilon(1e-5).scale(1e-6));
}

TEST_CASE("Adam") {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  SUBCASE("zero gradient leaves parameters unchanged") {
    Model<float> p = init_model<float>(Variant::BaseFo, small_shape(), 1);
    const Model<float> before = p;
    OptimState st = make_optim_state(p);
    adam_step(p, p.zeros_like(), st, cfg);
    CHECK(same_params(p, before));
    CHECK(st.step == 1);
  }
  SUBCASE("first step moves each parameter by lr in the gradient's sign") {
    Model<float> p = init_model<float>(Variant::BaseFo, small_shape(), 1);
    const Model<float> before = p;
    Model<float> g = p.zeros_like();
    Rng rng(3);
    g.for_each_tensor([&](const std::string&, const std::vector<int>&, std::vector<float>& v) {
      for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    });
    OptimState st = make_optim_state(p);
    adam_step(p, g, st, cfg);
    std::vector<float> after, orig, grad;
    p.for_each_tensor([&](const std::string&, const std::vector<int>&, std::vector<float>& v) { after.insert(after.end(), v.begin(), v.end()); });
    Model<float> b = before;
    b.for_each_tensor([&](const std::string&, const std::vector<int>&, std::vector<float>& v) { orig.insert(orig.end(), v.begin(), v.end()); });
    g.for_each_tensor([&](const std::string&, const std::vector<int>&, std::vector<float>& v) { grad.insert(grad.end(), v.begin(), v.end()); });
    for (std::size_t i = 0; i < after.size(); ++i) {
      const double expected = -1e-3 * grad[i] / (std::abs(grad[i]) + 1e-8);
      CHECK(after[i] - orig[i] == doctest::Approx(expected).epsilon(1e-3).scale(1e-6));
    }
  }
}

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 10;
  CHECK(cfg.learning_rate_at(1) == 1e-3);
  CHECK(cfg.learning_rate_at(10) == 1e-3);
  cfg.schedule = LrSchedule::Cosine;
  CHECK(cfg.learning_rate_at(1) == doctest::Approx(1e-3));
  CHECK(cfg.learning_rate_at(6) == doctest::Approx(0.5e-3));
  CHECK(cfg.learning_rate_at(10) < cfg.learning_rate_at(9));
  CHECK(cfg.learning_rate_at(10) > 0.0);
  CHECK(parse_schedule(to_string(LrSchedule::Cosine)) == LrSchedule::Cosine);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("training") {
  TrainConfig cfg;
  cfg.shape = small_shape();
  cfg.seed = 9;
  SUBCASE("zero learning rate keeps the initialization") {
    const auto data = scene_samples(3, 1);
    cfg.epochs = 2;
    cfg.learning_rate = 0.0;
    const TrainResult r = train(data, data, Variant::TwoStageFo, cfg);
    CHECK(same_params(r.last, init_model<float>(Variant::TwoStageFo, cfg.shape, cfg.seed)));
    CHECK(r.log.size() == 3);
    CHECK(r.log[0].val_loss == r.log[2].val_loss);
  }
  SUBCASE("training loss halves on a small fixed set") {
    const auto data = scene_samples(16, 100);
    cfg.epochs = 20;
    cfg.learning_rate = 1e-3;
    const TrainResult r = train(data, data, Variant::TwoStageFo, cfg);
    CHECK(r.log.back().train_loss < 0.5 * r.log[1].train_loss);
    CHECK(r.log.back().val_loss < 0.5 * r.log[0].val_loss);
    double best = r.log[0].val_loss;
    for (const auto& e : r.log) best = std::min(best, e.val_loss);
    CHECK(r.log[static_cast<std::size_t>(r.best_epoch)].val_loss == best);
    CHECK(mean_transmission_loss(r.best, data) == doctest::Approx(best).epsilon(1e-6));
  }
  SUBCASE("training is deterministic") {
    const auto data = scene_samples(4, 7);
    cfg.epochs = 2;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 2;
    const TrainResult a = train(data, data, Variant::BaseF, cfg);
    const TrainResult b = train(data, data, Variant::BaseF, cfg);
    CHECK(same_params(a.last, b.last));
    CHECK(format_loss_log(a.log) == format_loss_log(b.log));
  }
  SUBCASE("empty training set") {
    CHECK_THROWS(train({}, scene_samples(1, 1), Variant::BaseF, cfg));
  }
}

TEST_CASE("checkpoints") {
  const auto dir = test::scratch_dir("ckpt");
  Checkpoint c{init_model<float>(Variant::TwoStageF, small_shape(), 21), 21, 7};
  save_checkpoint(dir / "a.ckpt", c);
  const Checkpoint back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.seed == 21);
  CHECK(back.epoch == 7);
  CHECK(back.model.variant == Variant::TwoStageF);
  CHECK(back.model.shape == small_shape());
  CHECK(same_params(back.model, c.model));
  CHECK(serialize_checkpoint(back) == serialize_checkpoint(c));

  const std::string bytes = serialize_checkpoint(c);
  CHECK_THROWS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)));
  CHECK_THROWS(deserialize_checkpoint(bytes + "x"));
  CHECK_THROWS(deserialize_checkpoint("garbage"));
}

TEST_CASE("inference") {
  const Model<float> m = init_model<float>(Variant::TwoStageFo, NetShape{3, {4, 8, 8}, 0.2}, 4);
  SrgbImage a(30, 22, 3), fo(30, 22, 3);
  Rng rng(1);
  for (auto& v : a.data) v = static_cast<float>(rng.uniform());
  for (auto& v : fo.data) v = static_cast<float>(rng.uniform());
  const Inference out = infer(m, a, &fo);
  CHECK(out.transmission.width == 30);
  CHECK(out.transmission.height == 22);
  REQUIRE(out.reflection.has_value());
  for (float v : out.transmission.data) CHECK((v >= 0.0f && v <= 1.0f));
  CHECK(infer(m, a, &fo).transmission.data == out.transmission.data);
  CHECK_THROWS_AS(infer(m, a, nullptr), ValidationError);
  const Model<float> single = init_model<float>(Variant::SingleIa, NetShape{3, {4, 8, 8}, 0.2}, 4);
  CHECK_THROWS_AS(infer(single, a, &fo), ValidationError);
  CHECK(infer(single, a, nullptr).transmission.width == 30);

  SUBCASE("divisible sizes match a direct forward pass") {
    SrgbImage a2 = crop(a, 0, 0, 16, 16), fo2 = crop(fo, 0, 0, 16, 16);
    SampleTensors<float> s;
    s.ambient = to_tensor<float>(a2);
    s.flash_only = to_tensor<float>(fo2);
    const auto t = predict_transmission(m, s);
    const auto inf = infer(m, a2, &fo2).transmission;
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        for (int c = 0; c < 3; ++c)
          CHECK(inf.at(x, y, c) == doctest::Approx(std::clamp(t.at(c, y, x), 0.0f, 1.0f)).epsilon(1e-6));
  }
}
