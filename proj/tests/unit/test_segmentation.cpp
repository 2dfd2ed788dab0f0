/* Copyright (c) 2026 The sdconv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <algorithm>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "sdconv/error.hpp"
#include "sdconv/segmentation.hpp"

using namespace sdconv;

namespace {

DatasetConfig small_data(std::size_t n) {
  DatasetConfig d;
  d.count = n;
  d.extent = Extent{32, 32};
  return d;
}

ModelConfig small_model(SmoothingMode mode) {
  ModelConfig m;
  m.channels = 4;
  m.dilations = {3, 3};
  m.smoothing = mode;
  return m;
}

TrainConfig short_train(std::int64_t steps) {
  TrainConfig t;
  t.steps = steps;
  t.batch_size = 2;
  t.crop_size = 32;
  t.log_interval = 10;
  return t;
}

}  // namespace

TEST_CASE("synthetic dataset invariants") {
  Rng r(41);
  DatasetConfig cfg = small_data(100);
  cfg.noise_level = 0.0;
  const auto data = generate_dataset(cfg, r);
  REQUIRE(data.size() == 100);
  for (const SynthSample& s : data) {
    CHECK(s.height() == 32);
    CHECK(s.width() == 32);
    CHECK(s.shapes.size() >= 1);
    CHECK(s.shapes.size() <= 4);
    for (const ShapeRecord& sh : s.shapes) {
      CHECK((sh.scale == 1 || sh.scale == 2 || sh.scale == 4));
      CHECK(sh.label >= 1);
      CHECK(sh.label < cfg.classes);
      CHECK(sh.top >= 0);
      CHECK(sh.left >= 0);
      CHECK(sh.bottom <= 32);
      CHECK(sh.right <= 32);
    }
    // Noise-free pixels are exactly the class intensity of their label.
    for (std::size_t j = 0; j < s.labels.size(); ++j)
      CHECK(s.image.data()[j] == class_intensity(s.labels[j], cfg.classes));
    std::size_t fg = std::count_if(s.labels.begin(), s.labels.end(), [](int l) { return l != 0; });
    CHECK(fg > 0);
  }
  CHECK(class_intensity(0, 4) == 0.0);
  CHECK(class_intensity(3, 4) == 1.0);
}

TEST_CASE("dataset generation is deterministic and validated") {
  Rng a(42), b(42);
  const auto x = generate_dataset(small_data(5), a);
  const auto y = generate_dataset(small_data(5), b);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(x[i].image == y[i].image);
    CHECK(x[i].labels == y[i].labels);
  }
  Rng r(1);
  DatasetConfig bad = small_data(1);
  bad.extent = Extent{16, 32};
  CHECK_THROWS_AS(generate_dataset(bad, r), ParameterError);
  bad = small_data(1);
  bad.classes = 1;
  CHECK_THROWS_AS(generate_dataset(bad, r), ParameterError);

  const Tensor imgs = stack_images(x);
  const Tensor labs = stack_labels(x);
  CHECK(imgs.shape() == Shape{5, 1, 32, 32});
  const auto back = unstack_dataset(imgs, labs, 0.5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back[i].image == x[i].image);
    CHECK(back[i].labels == x[i].labels);
  }
  std::ostringstream meta;
  write_dataset_metadata(meta, x, 4);
  const std::string text = meta.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

TEST_CASE("model forward") {
  Rng r(43);
  ToyModel m(small_model(SmoothingMode::gaussian), r);
  Rng dr(44);
  const Tensor x = random_uniform({2, 1, 20, 18}, -1, 1, dr);
  const Tensor s = m.forward(x);
  CHECK(s.shape() == Shape{2, 4, 20, 18});
  CHECK(m.forward(x) == s);

  // The tape path and the value path agree.
  ad::Tape t;
  const auto g = m.forward(t, t.constant(x), false);
  CHECK(max_abs_diff(t.value(g.scores), s) <= 1e-12);

  for (Parameter& p : m.parameters()) p.value.fill(0.0);
  m.refresh();
  const Tensor z = m.forward(x);
  for (double v : z.data()) CHECK(v == 0.0);
  for (int l : argmax_labels(z)) CHECK(l == 0);

  CHECK_THROWS_AS(m.forward(random_uniform({1, 3, 8, 8}, 0, 1, dr)), ParameterError);
}

TEST_CASE("parameter census per mode") {
  Rng r(45);
  const std::size_t base = ToyModel(small_model(SmoothingMode::none), r).parameter_count();
  Rng r2(45);
  CHECK(ToyModel(small_model(SmoothingMode::average), r2).parameter_count() == base);
  CHECK(ToyModel(small_model(SmoothingMode::gaussian), r2).parameter_count() == base);
  const ToyModel learned(small_model(SmoothingMode::learned), r2);
  CHECK(learned.parameter_count() == base + 2 * 9);
  CHECK(learned.smoothing_parameter_count() == 2 * 9);
  const ToyModel agg(small_model(SmoothingMode::aggregated), r2);
  CHECK(agg.smoothing_parameter_count() == 2 * (9 + 4));

  ModelConfig even = small_model(SmoothingMode::average);
  even.dilations = {2};
  CHECK_THROWS_AS(ToyModel(even, r2), ParameterError);
  even.smoothing = SmoothingMode::none;
  CHECK_NOTHROW(ToyModel(even, r2));
}

TEST_CASE("training") {
  Rng dr(46);
  const auto data = generate_dataset(small_data(16), dr);

  SUBCASE("zero learning rate leaves parameters unchanged") {
    Rng r(47);
    ToyModel m(small_model(SmoothingMode::learned), r);
    const auto before = m.parameters();
    TrainConfig t = short_train(5);
    t.learning_rate = 0.0;
    train(m, data, t);
    for (std::size_t i = 0; i < before.size(); ++i)
      CHECK(m.parameters()[i].value == before[i].value);
  }
  SUBCASE("loss falls substantially in 200 steps") {
    Rng r(48);
    ToyModel m(small_model(SmoothingMode::none), r);
    const TrainResult res = train(m, data, short_train(200));
    REQUIRE(res.losses.size() == 200);
    const double head = std::accumulate(res.losses.begin(), res.losses.begin() + 10, 0.0);
    const double tail = std::accumulate(res.losses.end() - 10, res.losses.end(), 0.0);
    CHECK(tail <= 0.5 * head);
    CHECK(res.sec_per_step > 0.0);
  }
  SUBCASE("training is deterministic") {
    Rng r1(49), r2(49);
    ToyModel a(small_model(SmoothingMode::aggregated), r1);
    ToyModel b(small_model(SmoothingMode::aggregated), r2);
    const TrainResult ra = train(a, data, short_train(20));
    const TrainResult rb = train(b, data, short_train(20));
    CHECK(ra.losses == rb.losses);
    // One sample at step 0, then one per log interval.
    REQUIRE(ra.trajectories.size() == 2);
    CHECK(ra.trajectories[0].size() == 20 / 10 + 1);
    for (double v : ra.trajectories[0].samples()[0].alpha) CHECK(v == 0.25);
  }
  SUBCASE("bad configs") {
    Rng r(50);
    ToyModel m(small_model(SmoothingMode::none), r);
    TrainConfig t = short_train(1);
    t.crop_size = 40;
    CHECK_THROWS_AS(train(m, data, t), ParameterError);
    t = short_train(1);
    t.momentum = 1.0;
    CHECK_THROWS_AS(train(m, data, t), ParameterError);
    CHECK_THROWS_AS(train(m, {}, short_train(1)), ParameterError);
  }
}

TEST_CASE("IoU metrics") {
  SUBCASE("two-by-two example") {
    const std::vector<int> pred{1, 1, 0, 0}, truth{1, 0, 0, 0};
    const Metrics m = compute_metrics(pred, truth, 2);
    CHECK(*m.per_class_iou[0] == doctest::Approx(2.0 / 3.0));
    CHECK(*m.per_class_iou[1] == doctest::Approx(0.5));
    CHECK(m.miou == doctest::Approx((2.0 / 3.0 + 0.5) / 2.0));
  }
  SUBCASE("perfect prediction and absent classes") {
    const std::vector<int> lab{0, 2, 2, 0};
    const Metrics m = compute_metrics(lab, lab, 4);
    CHECK(*m.per_class_iou[0] == 1.0);
    CHECK_FALSE(m.per_class_iou[1].has_value());
    CHECK_FALSE(m.per_class_iou[3].has_value());
    CHECK(m.miou == 1.0);
  }
  SUBCASE("random labels agree with the oracle and are symmetric") {
    Rng r(51);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<int> p(200), t(200);
      for (int& v : p) v = static_cast<int>(r.below(4));
      for (int& v : t) v = static_cast<int>(r.below(4));
      const Metrics m = compute_metrics(p, t, 4);
      const auto o = oracle::iou(p, t, 4);
      for (std::size_t c = 0; c < 4; ++c) {
        REQUIRE(m.per_class_iou[c].has_value() == o[c].has_value());
        if (o[c]) CHECK(*m.per_class_iou[c] == doctest::Approx(*o[c]).epsilon(1e-15));
      }
      CHECK(compute_metrics(t, p, 4).miou == doctest::Approx(m.miou).epsilon(1e-15));
      // Relabelling classes consistently leaves mIoU unchanged.
      auto perm = [](int v) { return (v + 1) % 4; };
      std::vector<int> pp(p), tp(t);
      std::transform(pp.begin(), pp.end(), pp.begin(), perm);
      std::transform(tp.begin(), tp.end(), tp.begin(), perm);
      CHECK(compute_metrics(pp, tp, 4).miou == doctest::Approx(m.miou).epsilon(1e-14));
    }
  }
  SUBCASE("accumulator pools counts across images") {
    IouAccumulator acc(2);
    acc.add(std::vector<int>{1, 0}, std::vector<int>{1, 0});
    acc.add(std::vector<int>{1, 1}, std::vector<int>{0, 0});
    const Metrics m = acc.metrics();
    CHECK(*m.per_class_iou[1] == doctest::Approx(1.0 / 3.0));
    CHECK(*m.per_class_iou[0] == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(acc.add(std::vector<int>{1}, std::vector<int>{1, 0}), ParameterError);
  }
  SUBCASE("argmax ties go to the lowest class") {
    Tensor s({1, 3, 1, 2});
    s.at(0, 1, 0, 0) = 1.0;
    s.at(0, 2, 0, 0) = 1.0;
    CHECK(argmax_labels(s) == std::vector<int>{1, 0});
  }
}

TEST_CASE("mode comparison") {
  ExperimentConfig cfg;
  cfg.modes = {SmoothingMode::none, SmoothingMode::average};
  cfg.seeds = {3, 3, 4};
  cfg.train_data = small_data(8);
  cfg.eval_count = 4;
  cfg.model = small_model(SmoothingMode::none);
  cfg.train = short_train(3);
  const ComparisonTable t = compare_modes(cfg);
  REQUIRE(t.cells.size() == 6);
  CHECK_FALSE(t.any_failed());
  // Seeds outer, modes inner; duplicated seeds reproduce their cells.
  CHECK(t.cells[0].mode == SmoothingMode::none);
  CHECK(t.cells[1].mode == SmoothingMode::average);
  CHECK(t.cells[0].metrics.miou == t.cells[2].metrics.miou);
  CHECK(t.cells[1].losses == t.cells[3].losses);
  CHECK(t.summary_for(SmoothingMode::none).runs == 3);

  std::ostringstream os;
  t.write_csv(os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "mode,seed,miou,iou_class_0,iou_class_1,iou_class_2,iou_class_3,sec_per_step");
  CHECK_THROWS_AS(t.summary_for(SmoothingMode::learned), ParameterError);

  // Cancellation stops between cells.
  int calls = 0;
  const ComparisonTable part = compare_modes(cfg, nullptr, [&] { return ++calls > 1; });
  CHECK(part.cells.size() == 1);

  // A failing cell is recorded and the sweep continues.
  ExperimentConfig bad = cfg;
  bad.modes = {SmoothingMode::none, SmoothingMode::learned};
  bad.model.dilations = {2};
  bad.seeds = {1};
  const ComparisonTable f = compare_modes(bad);
  REQUIRE(f.cells.size() == 2);
  CHECK_FALSE(f.cells[0].failed);
  CHECK(f.cells[1].failed);
  CHECK(f.any_failed());
}
