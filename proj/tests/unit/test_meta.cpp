#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "metashift/common/error.hpp"
#include "metashift/meta/trainers.hpp"
#include "metashift/nn/optimizer.hpp"

using namespace metashift;
using namespace metashift::meta;

namespace {

// 27 tasks, 16 pairs per class (enough for N=5), short traces for speed.
const taskgen::TaskSet& small_set() {
  static const taskgen::TaskSet set = [] {
    auto s = taskgen::generate_taskset(16, 64, 5, taskgen::Design::mini);
    taskgen::partition_all(s, 5, 9);
    return s;
  }();
  return set;
}

TaskSplit split_of(int train, int val) {
  TaskSplit s;
  for (int i = 0; i < train; ++i) s.train.push_back(i);
  for (int i = train; i < train + val; ++i) s.validation.push_back(i);
  return s;
}

MetaConfig quick(Algorithm a, int epochs) {
  auto c = default_config(a);
  c.max_epochs = epochs;
  c.ensembles = 1;
  c.seed = 21;
  return c;
}

data::LabeledBatch task_batch(int task, int n) {
  const auto& t = small_set().task(task);
  std::vector<std::uint32_t> idx(t.partition->support.begin(), t.partition->support.begin() + n);
  return data::gather(t, idx);
}

double max_abs_diff(const nn::ParameterSet& a, const nn::ParameterSet& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a.flat()[i]) - b.flat()[i]));
  return m;
}

nn::ParameterSet scaled(const nn::ParameterSet& p, float s) {
  auto out = p;
  for (auto& v : out.flat()) v *= s;
  return out;
}

}  // namespace

TEST_CASE("config text round trip and validation") {
  auto c = default_config(Algorithm::fomaml);
  c.n_per_class = 20;
  c.inner_lr = 0.03f;
  c.sampling = Sampling::diverse;
  c.seed = 123456789012345ULL;
  CHECK(parse_config_text(config_text(c)) == c);
  CHECK(default_config(Algorithm::dnc).patience == 150);
  CHECK(default_config(Algorithm::dnc).ensembles == 10);
  CHECK(default_config(Algorithm::reptile).patience == 200);
  CHECK(default_config(Algorithm::tdl).ensembles == 20);
  CHECK(default_config(Algorithm::reptile).inner_lr == doctest::Approx(1e-2));
  CHECK(default_config(Algorithm::reptile).outer_lr == doctest::Approx(5e-4));
  CHECK_THROWS_AS(parse_config_text("bogus = 1\n"), FormatError);
  CHECK_THROWS_AS(parse_config_text("patience = many\n"), FormatError);
  auto bad = c;
  bad.inner_steps = 0;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = default_config(Algorithm::tdl);
  bad.sampling = Sampling::diverse;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  CHECK(parse_algorithm("dnc") == Algorithm::dnc);
  CHECK_THROWS_AS(parse_algorithm("maml"), ValidationError);
}

TEST_CASE("early stopping counts epochs since the last strict improvement") {
  EarlyStopState s(3);
  CHECK(s.update(0, 1.0));
  CHECK_FALSE(s.update(1, 1.0));
  CHECK(s.update(2, 0.5));
  CHECK_FALSE(s.update(3, 0.6));
  CHECK_FALSE(s.update(4, 0.5));
  CHECK_FALSE(s.should_stop());
  CHECK_FALSE(s.update(5, 0.7));
  CHECK(s.should_stop());
  CHECK(s.best_epoch() == 2);
  CHECK(s.best() == 0.5);
}

TEST_CASE("inner adaptation") {
  const auto phi = initial_params(quick(Algorithm::reptile, 1), 0);
  const auto data10 = task_batch(0, 10);
  const auto phi_copy = phi;

  CHECK(inner_adapt(phi, data10, 5, 0.0f) == phi);
  CHECK(phi == phi_copy);

  // G = 1: one full-batch step
  auto manual = phi;
  nn::sgd_step(manual, batch_gradient(phi, data10).grads, 0.05f);
  CHECK(inner_adapt(phi, data10, 1, 0.05f) == manual);

  // N = 10 pairs -> 20 examples, G = 5 -> five contiguous batches of 4
  const auto& t = small_set().task(1);
  std::vector<std::uint32_t> idx(t.partition->support);
  idx.insert(idx.end(), t.partition->query.begin(), t.partition->query.end());
  const auto data20 = data::gather(t, idx);
  REQUIRE(data20.size() == 20);
  auto stepwise = phi;
  for (int g = 0; g < 5; ++g) nn::sgd_step(stepwise, batch_gradient(stepwise, data::slice(data20, 4 * g, 4 * g + 4)).grads, 0.05f);
  CHECK(inner_adapt(phi, data20, 5, 0.05f) == stepwise);

  CHECK_THROWS_AS(inner_adapt(phi, task_batch(0, 4), 5, 0.01f), ValidationError);
}

TEST_CASE("reptile direction for one task and one step is alpha times the gradient") {
  const auto phi = initial_params(quick(Algorithm::reptile, 1), 3);
  const auto one = task_batch(2, 1);
  const float alpha = 1e-2f;
  const auto dir = reptile_direction(phi, std::vector<data::LabeledBatch>{one}, 1, alpha);
  const auto g = batch_gradient(phi, one).grads;
  CHECK(max_abs_diff(dir, scaled(g, alpha)) < 1e-6);
}

TEST_CASE("first-order gradient reductions") {
  const auto phi = initial_params(quick(Algorithm::fomaml, 1), 4);
  std::vector<SupportQuery> tasks;
  for (int t = 0; t < 3; ++t) {
    const auto& task = small_set().task(t);
    tasks.push_back({data::gather(task, task.partition->support), data::gather(task, task.partition->query)});
  }
  // alpha = 0: plain gradient at phi on the query sets, averaged
  const auto g0 = fomaml_gradient(phi, tasks, 0.0f);
  std::vector<double> mean(phi.size(), 0.0);
  for (const auto& t : tasks) {
    const auto g = batch_gradient(phi, t.query).grads;
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += g.flat()[i] / 3.0;
  }
  double err = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) err = std::max(err, std::abs(mean[i] - g0.flat()[i]));
  CHECK(err < 1e-6);

  // G = 1, full batch, support = query: Reptile = alpha * first-order gradient at alpha = 0
  std::vector<SupportQuery> same{{tasks[0].support, tasks[0].support}};
  const float alpha = 1e-2f;
  const auto rep = reptile_direction(phi, std::vector<data::LabeledBatch>{tasks[0].support}, 1, alpha);
  CHECK(max_abs_diff(rep, scaled(fomaml_gradient(phi, same, 0.0f), alpha)) < 1e-6);
  CHECK(fomaml_gradient(phi, tasks, 0.01f, 3) == fomaml_gradient(phi, tasks, 0.01f, 1));
}

TEST_CASE("zero gradients leave the meta-parameters unchanged") {
  // all-zero weights give a constant 0.5 output; with equal class counts the
  // mean gradient of every weight vanishes and the output bias gradient is 0
  auto phi = initial_params(quick(Algorithm::fomaml, 1), 0);
  for (auto& v : phi.flat()) v = 0.0f;
  std::vector<SupportQuery> tasks{{task_batch(0, 10), task_batch(1, 10)}};
  const auto g = fomaml_gradient(phi, tasks, 0.01f);
  for (float v : g.flat()) CHECK(v == 0.0f);
  nn::OptimizerState adam;
  auto updated = phi;
  nn::adam_step(updated, g, adam, 5e-4f);
  CHECK(updated == phi);
}

TEST_CASE("reptile with zero inner rate is a fixed point") {
  auto c = quick(Algorithm::reptile, 10);
  c.inner_lr = 0.0f;
  c.patience = 1000;
  const auto split = split_of(9, 3);
  const auto phi0 = initial_params(c, 0);
  int steps = 0;
  TrainOptions opts;
  opts.on_meta_step = [&](const MetaStep& s) {
    CHECK(*s.phi == phi0);
    for (float v : s.direction->flat()) CHECK(v == 0.0f);
    ++steps;
  };
  const auto r = meta_train(c, small_set(), split, shift::uniform_weights(split.train), 0, opts);
  CHECK(steps == 10 * 2);  // ceil(9/5) pseudo-epochs per epoch
  CHECK(r.params == phi0);
  REQUIRE(r.log.epochs.size() == 11);
  for (const auto& e : r.log.epochs) CHECK(e.val_loss == r.log.epochs[0].val_loss);
}

TEST_CASE("FOMAML with zero inner rate is averaged plain-gradient descent") {
  auto c = quick(Algorithm::fomaml, 3);
  c.inner_lr = 0.0f;
  const auto split = split_of(7, 3);
  nn::ParameterSet shadow = initial_params(c, 0);
  nn::OptimizerState adam;
  double worst = 0.0;
  int steps = 0;
  TrainOptions opts;
  opts.on_meta_step = [&](const MetaStep& s) {
    worst = std::max(worst, max_abs_diff(*s.phi, shadow));
    std::vector<double> mean(shadow.size(), 0.0);
    for (const auto& d : *s.draws) {
      CHECK(d.support.size() == 10);
      CHECK(d.query.size() == 10);
      const auto g = batch_gradient(shadow, d.query).grads;
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += g.flat()[i] / double(s.draws->size());
    }
    nn::ParameterSet g = shadow;
    for (std::size_t i = 0; i < mean.size(); ++i) g.flat()[i] = static_cast<float>(mean[i]);
    worst = std::max(worst, max_abs_diff(*s.direction, g));
    nn::adam_step(shadow, g, adam, c.outer_lr);
    ++steps;
  };
  meta_train(c, small_set(), split, shift::uniform_weights(split.train), 0, opts);
  CHECK(steps == 3 * 2);
  CHECK(worst < 1e-6);
}

TEST_CASE("meta-training draws N pairs per class from support and query") {
  auto c = quick(Algorithm::fomaml, 1);
  const auto split = split_of(5, 2);
  TrainOptions opts;
  opts.on_meta_step = [&](const MetaStep& s) {
    CHECK(s.task_ids->size() == 5);
    for (std::size_t k = 0; k < s.draws->size(); ++k) {
      const auto& d = (*s.draws)[k];
      CHECK(std::count(d.support.y.begin(), d.support.y.end(), 1) == 5);
      CHECK(std::count(d.query.y.begin(), d.query.y.end(), 1) == 5);
    }
  };
  meta_train(c, small_set(), split, shift::uniform_weights(split.train), 0, opts);
}

TEST_CASE("supervised batch arithmetic") {
  const auto& set = small_set();
  Rng rng(1);
  // D&C, N=5: 3N pairs per class = 30 examples -> 24 train / 6 validation
  const auto& t = set.task(0);
  std::vector<std::uint32_t> idx(t.partition->support);
  idx.insert(idx.end(), t.partition->query.begin(), t.partition->query.end());
  idx.insert(idx.end(), t.partition->kshot.begin(), t.partition->kshot.end());
  const auto d = supervised_split(t, idx, 0.2, rng);
  CHECK(d.train.size() == 24);
  CHECK(d.validation.size() == 6);
  CHECK(std::count(d.validation.y.begin(), d.validation.y.end(), 1) == 3);

  // TDL over 2 tasks: 2 * 0.8 * 2N pairs per class = 32 examples -> 2 steps of 16 per epoch
  auto c = quick(Algorithm::tdl, 1);
  const auto r = tdl_train(c, set, {0, 1}, 0);
  REQUIRE(r.log.epochs.size() == 2);
  CHECK(r.log.epochs[1].pseudo_epochs == 2);

  // D&C: ceil(24/16) = 2 steps per epoch
  const auto rd = dnc_train(quick(Algorithm::dnc, 2), t, 0);
  CHECK(rd.log.epochs.back().pseudo_epochs == 4);
}

TEST_CASE("training data parity between meta-learning and TDL") {
  // 141 pool tasks, 29 validation: meta-learning trains on 112 x 2N pairs per
  // class, TDL on the 80% share of 141 x 2N
  const int n = 5;
  auto set = taskgen::generate_taskset(3 * n + 1, 16, 2, taskgen::Design::full);
  taskgen::partition_all(set, n, 1);
  std::vector<int> pool;
  for (int i = 0; i < 141; ++i) pool.push_back(i);
  Rng rng(3);
  const auto vs = shift::select_validation_uniform(pool, 0.2, rng);
  CHECK(vs.validation.size() == 29);
  CHECK(vs.train.size() == 112);
  long tdl_pairs = 0;
  for (int id : pool) {
    const auto& t = set.task(id);
    std::vector<std::uint32_t> idx(t.partition->support);
    idx.insert(idx.end(), t.partition->query.begin(), t.partition->query.end());
    tdl_pairs += supervised_split(t, idx, 0.2, rng).train.size() / 2;
  }
  CHECK(tdl_pairs == 1128);
  const long meta_pairs = static_cast<long>(vs.train.size()) * 2 * n;
  CHECK(std::abs(meta_pairs - tdl_pairs) <= 0.03 * tdl_pairs);
}

TEST_CASE("early stopping halts at best epoch plus patience and returns the best checkpoint") {
  auto c = quick(Algorithm::dnc, 400);
  c.patience = 5;
  c.outer_lr = 0.05f;  // large steps make the validation loss stall quickly
  const auto r = dnc_train(c, small_set().task(3), 0);
  REQUIRE(r.log.stopped_early);
  CHECK(r.log.epochs.back().epoch == r.log.best_epoch + c.patience);
  double min_loss = 1e300;
  for (const auto& e : r.log.epochs) min_loss = std::min(min_loss, e.val_loss);
  CHECK(r.log.best_val_loss == min_loss);
  CHECK(r.log.best_val_loss <= r.log.epochs.back().val_loss);
  for (std::size_t i = 1; i < r.log.epochs.size(); ++i) CHECK(r.log.epochs[i].epoch == r.log.epochs[i - 1].epoch + 1);
}

TEST_CASE("trainers are deterministic") {
  const auto split = split_of(9, 3);
  const auto w = shift::uniform_weights(split.train);
  for (auto a : {Algorithm::reptile, Algorithm::fomaml}) {
    const auto c = quick(a, 4);
    const auto r1 = meta_train(c, small_set(), split, w, 0);
    TrainOptions par;
    par.jobs = 3;
    const auto r2 = meta_train(c, small_set(), split, w, 0, par);
    CHECK(r1.params == r2.params);
    CHECK(r1.log == r2.log);
    CHECK_FALSE(meta_train(c, small_set(), split, w, 1).params == r1.params);
  }
  const auto ct = quick(Algorithm::tdl, 3);
  CHECK(tdl_train(ct, small_set(), {0, 1, 2}, 0).params == tdl_train(ct, small_set(), {0, 1, 2}, 0).params);
  const auto cd = quick(Algorithm::dnc, 3);
  CHECK(dnc_train(cd, small_set().task(4), 2).params == dnc_train(cd, small_set().task(4), 2).params);
  CHECK_FALSE(dnc_train(cd, small_set().task(4), 2).params == dnc_train(cd, small_set().task(4), 3).params);
}

TEST_CASE("ensembles") {
  auto c = quick(Algorithm::reptile, 2);
  const auto split = split_of(6, 2);
  const auto w = shift::uniform_weights(split.train);
  CHECK(run_ensemble(c, small_set(), split, w).size() == 1);
  c.ensembles = 3;
  const auto serial = run_ensemble(c, small_set(), split, w, 1);
  const auto parallel = run_ensemble(c, small_set(), split, w, 3);
  REQUIRE(serial.size() == 3);
  for (int e = 0; e < 3; ++e) CHECK(serial[e].params == parallel[e].params);
  CHECK_FALSE(serial[0].params == serial[1].params);

  auto cd = quick(Algorithm::dnc, 2);
  cd.ensembles = 2;
  CHECK(run_ensemble(cd, small_set(), TaskSplit{{5}, {}}, shift::uniform_weights({5})).size() == 2);
  CHECK_THROWS_AS(run_ensemble(cd, small_set(), split, w), ValidationError);
}

TEST_CASE("training errors") {
  const auto split = split_of(4, 2);
  const auto w = shift::uniform_weights(split.train);
  auto c = quick(Algorithm::reptile, 1);
  c.n_per_class = 10;
  CHECK_THROWS_WITH_AS(meta_train(c, small_set(), split, w, 0), doctest::Contains("partitioned with N=5"), ValidationError);
  c.n_per_class = 5;
  CHECK_THROWS_AS(meta_train(c, small_set(), TaskSplit{{}, {1}}, shift::uniform_weights({1}), 0), ValidationError);
  CHECK_THROWS_AS(meta_train(c, small_set(), split, shift::uniform_weights({0, 1}), 0), ValidationError);
  CHECK_THROWS_AS(tdl_train(quick(Algorithm::tdl, 1), small_set(), {}, 0), ValidationError);
}
