#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <unistd.h>

#include "doctest.h"
#include "metashift/common/error.hpp"
#include "metashift/common/io.hpp"
#include "metashift/nn/architecture.hpp"
#include "metashift/shift/accuracy.hpp"
#include "metashift/shift/cluster.hpp"
#include "metashift/shift/similarity.hpp"
#include "../support/oracles.hpp"

using namespace metashift;
using namespace metashift::shift;
using testing::random_matrix;

namespace {

nn::Batch random_batch(int n, int samples, std::uint64_t seed) {
  nn::Batch b(n, 2, samples);
  Rng rng(seed);
  for (auto& v : b.data) v = static_cast<float>(rng.normal());
  return b;
}

Matrix centred(Matrix x) {
  center_columns(x);
  return x;
}

std::vector<int> iota_ids(int n) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

// Two tight pairs {0,1} and {2,3}, far apart.
Matrix two_pairs() {
  Matrix d(4, 4);
  d << 0, 1, 9, 9,
       1, 0, 9, 9,
       9, 9, 0, 1,
       9, 9, 1, 0;
  return d;
}

}  // namespace

TEST_CASE("activations are centred post-GAP features") {
  const auto params = nn::init_params(nn::build_architecture(nn::ArchSize::mini), 3);
  auto batch = random_batch(6, 64, 1);
  const Matrix x = extract_activations(params, batch);
  CHECK(x.rows() == 6);
  CHECK(x.cols() == 8);
  for (Eigen::Index j = 0; j < x.cols(); ++j) CHECK(std::abs(x.col(j).mean()) < 1e-6);

  // duplicated rows stay duplicated before centring
  std::copy(batch.item(0).begin(), batch.item(0).end(), batch.item(3).begin());
  const Matrix g = gap_features(params, batch);
  CHECK(g.row(0) == g.row(3));
  CHECK_THROWS(extract_activations(params, nn::Batch(2, 3, 64)));
}

TEST_CASE("linear CKA: self-similarity, symmetry, invariances") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = centred(random_matrix(30, 6, rng));
    const Matrix y = centred(random_matrix(30, 4, rng));
    CHECK(std::abs(linear_cka(x, x) - 100.0) < 1e-6);
    CHECK(std::abs(linear_cka(x, y) - linear_cka(y, x)) < 1e-9);
    CHECK(std::abs(linear_cka(x, y) - testing::cka_gram(x, y)) < 1e-9);
    const Matrix q = testing::random_orthogonal(6, rng);
    CHECK(std::abs(linear_cka(x, x * q) - 100.0) < 1e-6);
    CHECK(std::abs(linear_cka(x * q, y) - linear_cka(x, y)) < 1e-6);
    CHECK(std::abs(linear_cka(x, -3.7 * x) - 100.0) < 1e-6);
    CHECK(std::abs(linear_cka(2.5 * x, y) - linear_cka(x, y)) < 1e-6);
    const double s = linear_cka(x, y);
    CHECK(s >= 0.0);
    CHECK(s <= 100.0);
  }
  CHECK_THROWS_AS(linear_cka(Matrix::Zero(5, 2), centred(random_matrix(5, 2, rng))), NumericalError);
  CHECK_THROWS_AS(linear_cka(random_matrix(5, 2, rng), random_matrix(6, 2, rng)), ValidationError);
}

TEST_CASE("pairwise similarity matches direct enumeration over model pairs") {
  const auto spec = nn::build_architecture(nn::ArchSize::mini);
  std::vector<std::vector<nn::ParameterSet>> ens(3);
  for (int t = 0; t < 3; ++t)
    for (int e = 0; e < 2 + t; ++e) ens[t].push_back(nn::init_params(spec, 100 * t + e));
  std::vector<nn::Batch> data{random_batch(5, 48, 1), random_batch(7, 48, 2), random_batch(4, 48, 3)};
  const Matrix s = pairwise_similarity(ens, data, 3);
  CHECK(s.isApprox(s.transpose(), 0.0));
  CHECK(pairwise_similarity(ens, data, 1) == s);

  auto concat = [](const nn::Batch& a, const nn::Batch& b) {
    nn::Batch out(a.size + b.size, a.channels, a.samples);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
    return out;
  };
  for (int u = 0; u < 3; ++u) {
    for (int v = 0; v < 3; ++v) {
      double sum = 0.0;
      int pairs = 0;
      if (u == v) {
        for (std::size_t a = 0; a < ens[u].size(); ++a)
          for (std::size_t b = a + 1; b < ens[u].size(); ++b, ++pairs)
            sum += linear_cka(extract_activations(ens[u][a], data[u]), extract_activations(ens[u][b], data[u]));
        CHECK(pairs == (u + 2) * (u + 1) / 2);
      } else {
        const auto tau = u < v ? concat(data[u], data[v]) : concat(data[v], data[u]);
        for (const auto& mu : ens[u])
          for (const auto& mv : ens[v]) {
            sum += linear_cka(extract_activations(mu, tau), extract_activations(mv, tau));
            ++pairs;
          }
      }
      CHECK(s(u, v) == doctest::Approx(sum / pairs).epsilon(1e-9));
    }
  }
}

TEST_CASE("pairwise similarity of identical ensembles is uniform") {
  const auto spec = nn::build_architecture(nn::ArchSize::mini);
  // every model shares one representation
  const auto net = nn::init_params(spec, 1);
  std::vector<nn::ParameterSet> models{net, net};
  const Matrix s = pairwise_similarity({models, models}, {random_batch(6, 48, 7), random_batch(6, 48, 8)});
  CHECK(s(0, 1) == doctest::Approx(s(0, 0)).epsilon(1e-6));
  CHECK(s(1, 1) == doctest::Approx(s(0, 0)).epsilon(1e-6));
  CHECK(s(0, 0) == doctest::Approx(100.0).epsilon(1e-6));
  CHECK_THROWS_AS(pairwise_similarity({{models[0]}, models}, {random_batch(6, 48, 7), random_batch(6, 48, 8)}),
                  ValidationError);
}

TEST_CASE("distance from similarity") {
  Matrix s(2, 2);
  s << 97.3, 40, 40, 100;
  const Matrix d = similarity_to_distance(s);
  CHECK(d(0, 0) == 0.0);
  CHECK(d(1, 1) == 0.0);
  CHECK(d(0, 1) == doctest::Approx(60.0));
  s(0, 1) = s(1, 0) = 100.0;
  CHECK(similarity_to_distance(s)(0, 1) == 0.0);
}

TEST_CASE("p_u by column comparison") {
  Matrix a(3, 3);
  a << 0.9, 0.5, 0.6,
       0.7, 0.8, 0.4,
       0.95, 0.6, 0.7;
  const auto p = compute_pu(a);
  // column 0: 0.9 beats 0.7 but not 0.95; column 2: 0.7 beats 0.6 and 0.4
  CHECK(p == std::vector<double>{0.5, 1.0, 1.0});

  Matrix best = Matrix::Constant(4, 4, 0.5);
  best.diagonal().setConstant(0.9);
  for (double v : compute_pu(best)) CHECK(v == 1.0);
  Matrix worst = Matrix::Constant(4, 4, 0.9);
  worst.diagonal().setConstant(0.1);
  for (double v : compute_pu(worst)) CHECK(v == 0.0);
  // identical columns: the diagonal never strictly wins
  for (double v : compute_pu(Matrix::Constant(3, 3, 0.7))) CHECK(v == 0.0);

  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix r(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) r(i, j) = std::round(rng.uniform() * 20.0) / 20.0;  // ties happen
    CHECK(compute_pu(r) == testing::pu_enumerate(r));
    Matrix shifted = r;
    shifted.col(3).array() += 0.25;
    CHECK(compute_pu(shifted) == compute_pu(r));
  }
  CHECK_THROWS_AS(compute_pu(Matrix::Constant(1, 1, 0.5)), ValidationError);
  CHECK_THROWS_AS(compute_pu(Matrix::Constant(2, 3, 0.5)), ValidationError);
}

TEST_CASE("accuracy symmetrization") {
  Matrix a(2, 2);
  a << 0.9, 0.8, 0.6, 0.7;
  const Matrix s = symmetrize_accuracy(a);
  CHECK(s(0, 1) == doctest::Approx(0.7));
  CHECK(s == s.transpose());
  const Matrix sym = symmetrize_accuracy(s);
  CHECK(sym == s);
}

TEST_CASE("cross accuracy averages each row's ensemble") {
  const auto spec = nn::build_architecture(nn::ArchSize::mini);
  std::vector<std::vector<nn::ParameterSet>> ens{{nn::init_params(spec, 1), nn::init_params(spec, 2)},
                                                 {nn::init_params(spec, 3)}};
  std::vector<data::LabeledBatch> batches(2);
  for (int t = 0; t < 2; ++t) {
    batches[t].x = random_batch(10, 48, 40 + t);
    for (int i = 0; i < 10; ++i) batches[t].y.push_back(static_cast<std::uint8_t>(i % 2));
  }
  const Matrix a = cross_accuracy(ens, batches, 2);
  CHECK(a(0, 1) == doctest::Approx(0.5 * (data::accuracy(ens[0][0], batches[1]) + data::accuracy(ens[0][1], batches[1]))));
  CHECK(a(1, 0) == doctest::Approx(data::accuracy(ens[1][0], batches[0])));
  CHECK((a.array() >= 0.0).all());
  CHECK((a.array() <= 1.0).all());
}

TEST_CASE("similarity-accuracy relation bins") {
  Rng rng(2);
  const int t = 12;
  Matrix s(t, t), a(t, t);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j) s(i, j) = rng.uniform(0, 100), a(i, j) = 0.5 + s(i, j) / 400.0;
  s = (s + s.transpose()) / 2.0;
  a = symmetrize_accuracy(a);
  const auto bins = similarity_accuracy_bins(s, a, 20);
  REQUIRE(bins.size() == 20);
  int total = 0;
  double mean = 0.0, var = 0.0;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    total += bins[b].count;
    CHECK((bins[b].count == 3 || bins[b].count == 4));
    if (b > 0) CHECK(bins[b].similarity >= bins[b - 1].similarity);
    mean += bins[b].standardized;
  }
  mean /= 20;
  for (const auto& b : bins) var += (b.standardized - mean) * (b.standardized - mean);
  CHECK(total == t * (t - 1) / 2);
  CHECK(std::abs(mean) < 1e-9);
  CHECK(var / 19 == doctest::Approx(1.0));
  CHECK_THROWS_AS(similarity_accuracy_bins(s.topLeftCorner(4, 4), a.topLeftCorner(4, 4), 20), ValidationError);
}

TEST_CASE("ward: small hand cases") {
  Matrix two(2, 2);
  two << 0, 3.5, 3.5, 0;
  const auto d2 = ward_cluster(two);
  REQUIRE(d2.merges.size() == 1);
  CHECK(d2.merges[0] == Merge{0, 1, 3.5, 2});

  Matrix three(3, 3);
  three << 0, 1, 10, 1, 0, 10, 10, 10, 0;
  const auto d3 = ward_cluster(three);
  CHECK(d3.merges[0].left == 0);
  CHECK(d3.merges[0].right == 1);
  CHECK(d3.merges[0].height == doctest::Approx(1.0));
  CHECK(d3.merges[1].left == 2);
  CHECK(d3.merges[1].right == 3);
  // sqrt((2*100 + 2*100 - 1) / 3)
  CHECK(d3.merges[1].height == doctest::Approx(std::sqrt(399.0 / 3.0)));

  Matrix tied = Matrix::Constant(3, 3, 2.0);
  tied.diagonal().setZero();
  CHECK(ward_cluster(tied).merges[0] == Merge{0, 1, 2.0, 2});

  CHECK(ward_cluster(Matrix::Zero(1, 1)).merges.empty());
  Matrix asym = two;
  asym(0, 1) = 4.0;
  CHECK_THROWS_AS(ward_cluster(asym), ValidationError);
  Matrix diag = two;
  diag(0, 0) = 1.0;
  CHECK_THROWS_AS(ward_cluster(diag), ValidationError);
}

TEST_CASE("ward matches the recompute-everything oracle") {
  Rng rng(31);
  Matrix five(5, 5);
  five << 0, 2, 6, 10, 9,
          2, 0, 5, 9, 8,
          6, 5, 0, 4, 5,
          10, 9, 4, 0, 3,
          9, 8, 5, 3, 0;
  CHECK(testing::same_dendrogram(ward_cluster(five), testing::ward_bruteforce(five)));
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix d = trial % 2 ? testing::random_dissimilarity(6, rng) : testing::random_euclidean(6, 3, rng);
    const auto dend = ward_cluster(d);
    CHECK(testing::same_dendrogram(dend, testing::ward_bruteforce(d)));
    for (std::size_t i = 1; i < dend.merges.size(); ++i) CHECK(dend.merges[i].height >= dend.merges[i - 1].height);
  }
}

TEST_CASE("dendrogram depths, splits and weights") {
  const auto balanced = ward_cluster(two_pairs());
  CHECK(balanced.depths() == std::vector<int>{2, 2, 2, 2});
  const auto w = diversity_weights(balanced, {10, 11, 12, 13});
  for (double g : w.gamma) CHECK(g == doctest::Approx(0.25));

  auto split = assign_splits(balanced, {10, 11, 12, 13});
  CHECK(split.test == std::vector<int>{10, 11});
  CHECK(split.pool == std::vector<int>{12, 13});
  CHECK(split.train_a == std::vector<int>{12});
  CHECK(split.train_b == std::vector<int>{13});
  auto swapped = balanced;
  swap_children(swapped, swapped.root());
  const auto inverted = assign_splits(swapped, {10, 11, 12, 13});
  CHECK(inverted.test == split.pool);
  CHECK(inverted.pool == split.test);
  CHECK(assign_splits(balanced, {10, 11, 12, 13}, TestBranch::right).test == split.pool);
  CHECK_THROWS_AS(assign_splits(ward_cluster(Matrix::Zero(1, 1)), {0}), ValidationError);

  // caterpillar: {0,1} merge, then 2 joins at the root
  Matrix cat(3, 3);
  cat << 0, 1, 10, 1, 0, 10, 10, 10, 0;
  const auto cw = diversity_weights(ward_cluster(cat), {0, 1, 2});
  CHECK(ward_cluster(cat).depths() == std::vector<int>{2, 2, 1});
  CHECK(cw.gamma[2] == doctest::Approx(0.5));
  CHECK(cw.gamma[0] == doctest::Approx(0.25));

  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dend = ward_cluster(testing::random_dissimilarity(9, rng));
    const auto ww = diversity_weights(dend, iota_ids(9));
    CHECK(std::accumulate(ww.gamma.begin(), ww.gamma.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double g : ww.gamma) CHECK(g > 0.0);
    const auto sp = assign_splits(dend, iota_ids(9));
    std::set<int> all(sp.test.begin(), sp.test.end());
    all.insert(sp.pool.begin(), sp.pool.end());
    CHECK(all.size() == 9);
    CHECK(sp.test.size() + sp.pool.size() == 9);
  }
  const auto u = uniform_weights({1, 2, 3});
  for (double g : u.gamma) CHECK(g == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("diverse validation selection") {
  Rng rng(8);
  LabeledMatrix d{iota_ids(141), testing::random_euclidean(141, 4, rng)};
  Rng a(1), b(1);
  const auto va = select_validation_diverse(d.ids, 0.2, d, a);
  CHECK(va.validation.size() == 29);
  CHECK(va.train.size() == 112);
  const auto vb = select_validation_diverse(d.ids, 0.2, d, b);
  CHECK(va.validation == vb.validation);
  std::set<int> all(va.train.begin(), va.train.end());
  all.insert(va.validation.begin(), va.validation.end());
  CHECK(all.size() == 141);

  LabeledMatrix small{{4, 9}, Matrix::Zero(2, 2)};
  small.values(0, 1) = small.values(1, 0) = 1.0;
  const auto half = select_validation_diverse(small.ids, 0.5, small, a);
  CHECK(half.validation.size() == 1);
  CHECK(half.train.size() == 1);
  CHECK(select_validation_uniform(iota_ids(5), 0.2, a).validation.size() == 1);
  CHECK_THROWS_AS(select_validation_diverse({4}, 0.5, small, a), ValidationError);
  CHECK_THROWS_AS(select_validation_diverse(small.ids, 1.0, small, a), ValidationError);
}

TEST_CASE("weighted task sampling without replacement") {
  Rng rng(12);
  const auto u = uniform_weights(iota_ids(7));
  auto perm = sample_task_batch(u, 7, rng);
  std::sort(perm.begin(), perm.end());
  CHECK(perm == iota_ids(7));
  for (int i = 0; i < 50; ++i) {
    const auto b = sample_task_batch(u, 5, rng);
    CHECK(std::set<int>(b.begin(), b.end()).size() == 5);
  }
  CHECK_THROWS_AS(sample_task_batch(u, 8, rng), ValidationError);

  // concentrated weights: single draws hit the heavy task with its exact probability
  SamplingWeights heavy{{0, 1, 2}, {0.97, 0.015, 0.015}};
  constexpr int kTrials = 10000;
  int single = 0, pair = 0;
  for (int i = 0; i < kTrials; ++i) {
    single += sample_task_batch(heavy, 1, rng)[0] == 0;
    const auto b = sample_task_batch(heavy, 2, rng);
    pair += std::count(b.begin(), b.end(), 0);
  }
  const double sd = std::sqrt(0.97 * 0.03 / kTrials);
  CHECK(std::abs(single / double(kTrials) - 0.97) < 4 * sd);
  // inclusion in a batch of 2: 1 - 2 * 0.015 * (0.015 / 0.985)
  const double p2 = 1.0 - 2.0 * 0.015 * (0.015 / 0.985);
  CHECK(pair / double(kTrials) > 0.99);
  CHECK(std::abs(pair / double(kTrials) - p2) < 4 * std::sqrt(p2 * (1 - p2) / kTrials) + 1e-4);
}

TEST_CASE("mean similarity under weights") {
  Rng rng(6);
  LabeledMatrix s{iota_ids(6), Matrix::Zero(6, 6)};
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) s.values(i, j) = rng.uniform(0, 100);
  const std::vector<int> train{0, 1, 2, 3}, test{4, 5};
  double direct = 0.0;
  for (int t : train)
    for (int v : test) direct += s.at(t, v);
  direct /= 8.0;
  CHECK(mean_similarity_under_weights(s, uniform_weights(train), test) == doctest::Approx(direct));
  SamplingWeights w{train, {0.7, 0.1, 0.1, 0.1}};
  CHECK(mean_similarity_under_weights(s, w, test) ==
        doctest::Approx(0.7 * (s.at(0, 4) + s.at(0, 5)) / 2 + 0.1 * (s.at(1, 4) + s.at(1, 5) + s.at(2, 4) + s.at(2, 5) + s.at(3, 4) + s.at(3, 5)) / 2));
}

TEST_CASE("matrix CSV and dendrogram text round trip") {
  const auto dir = std::filesystem::temp_directory_path() / ("metashift_shift_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  LabeledMatrix m{{3, 7, 11}, Matrix::Zero(3, 3)};
  m.values << 0, 0.25, 1.5, 0.25, 0, 2, 1.5, 2, 0;
  write_matrix_csv(dir / "d.csv", m, {"config_hash=abc"});
  const auto back = read_matrix_csv(dir / "d.csv");
  CHECK(back.ids == m.ids);
  CHECK(back.values == m.values);
  CHECK(m.sub({11, 3}).values(0, 1) == 1.5);

  Rng dend_rng(3);
  const auto dend = ward_cluster(testing::random_euclidean(7, 2, dend_rng));
  std::vector<int> ids{5, 6, 7, 8, 9, 10, 11}, ids_back;
  const auto parsed = parse_dendrogram(dendrogram_text(dend, ids), &ids_back);
  CHECK(parsed == dend);
  CHECK(ids_back == ids);
  CHECK_THROWS_AS(parse_dendrogram("0 1 2 3\n"), FormatError);
  std::filesystem::remove_all(dir);
}
