#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "listrank/errors.hpp"
#include "listrank/losses.hpp"
#include "listrank/nn.hpp"
#include "listrank/rng.hpp"

using namespace listrank;

namespace {

// Independent closed forms, written from scratch against the stated formulas;
// the loss module must agree with these to 1e-12.
std::vector<double> ref_softmax(const std::vector<double>& s, double tau) {
  double m = s[0];
  for (double v : s) m = std::max(m, v);
  std::vector<double> e(s.size());
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    e[i] = std::exp((s[i] - m) / tau);
    total += e[i];
  }
  for (double& v : e) v /= total;
  return e;
}

std::vector<double> ref_listone_grad(const std::vector<double>& scores,
                                     const std::vector<double>& target) {
  std::vector<double> p = ref_softmax(scores, 1.0);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= target[i];
  return p;
}

std::vector<double> ref_listall_grad(const std::vector<double>& scores,
                                     const std::vector<double>& labels, double tau) {
  const std::vector<double> s = ref_softmax(scores, tau);
  double positives = 0.0;
  for (double l : labels) positives += l;
  std::vector<double> g(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    g[i] = (positives * s[i] - labels[i]) / tau;
  }
  return g;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    da += a[i] * a[i];
    db += b[i] * b[i];
  }
  return std::sqrt(num) / std::max({std::sqrt(da), std::sqrt(db), 1e-12});
}

}  // namespace

TEST_CASE("top_one_target") {
  // equal AUCs -> uniform
  const auto uniform = losses::top_one_target(std::vector<double>{0.4, 0.4, 0.4});
  for (double p : uniform) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));

  // aucs [0, ln 2] -> [2/3, 1/3]: the lower AUC gets the higher probability
  const auto skewed = losses::top_one_target(std::vector<double>{0.0, std::log(2.0)});
  CHECK(skewed[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(skewed[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  // permutation equivariance
  const auto fwd = losses::top_one_target(std::vector<double>{0.1, 0.7, 0.3});
  const auto rev = losses::top_one_target(std::vector<double>{0.3, 0.7, 0.1});
  CHECK(fwd[0] == doctest::Approx(rev[2]).epsilon(1e-15));
  CHECK(fwd[1] == doctest::Approx(rev[1]).epsilon(1e-15));
}

TEST_CASE("list_one hand values") {
  // target [1,0], scores [0,0] -> loss ln2, grad [-0.5, 0.5]
  const auto lg = losses::list_one(std::vector<double>{0, 0},
                                   std::vector<double>{1, 0});
  CHECK(lg.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(lg.score_grad[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(lg.score_grad[1] == doctest::Approx(0.5).epsilon(1e-12));

  // softmax(scores) == target -> loss = entropy(target), grad = 0
  const std::vector<double> scores{std::log(0.7), std::log(0.3)};
  const auto opt = losses::list_one(scores, std::vector<double>{0.7, 0.3});
  const double entropy = -(0.7 * std::log(0.7) + 0.3 * std::log(0.3));
  CHECK(opt.value == doctest::Approx(entropy).epsilon(1e-12));
  CHECK(std::abs(opt.score_grad[0]) < 1e-12);
  CHECK(std::abs(opt.score_grad[1]) < 1e-12);

  // shift invariance
  const auto shifted = losses::list_one(std::vector<double>{5, 5},
                                        std::vector<double>{1, 0});
  CHECK(shifted.value == doctest::Approx(lg.value).epsilon(1e-12));
  CHECK(max_abs_diff(shifted.score_grad, lg.score_grad) < 1e-12);

  CHECK_THROWS_AS(losses::list_one(std::vector<double>{0.0},
                                   std::vector<double>{1, 0}),
                  ShapeError);
}

TEST_CASE("list_all hand values") {
  // singleton: softmax of one score is 1, loss 0
  const auto single = losses::list_all(std::vector<double>{3.7},
                                       std::vector<double>{1}, 0.5);
  CHECK(single.value == doctest::Approx(0.0));

  // labels [1,0], scores [0,0], tau 0.5 -> loss ln2, grad [-1, 1]
  const auto lg = losses::list_all(std::vector<double>{0, 0},
                                   std::vector<double>{1, 0}, 0.5);
  CHECK(lg.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(lg.score_grad[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(lg.score_grad[1] == doctest::Approx(1.0).epsilon(1e-12));

  // labels [1,1], equal scores: loss 2 ln2, grad 0 (L*s - l vanishes)
  const auto both = losses::list_all(std::vector<double>{1.4, 1.4},
                                     std::vector<double>{1, 1}, 0.5);
  CHECK(both.value == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(both.score_grad[0]) < 1e-12);
  CHECK(std::abs(both.score_grad[1]) < 1e-12);

  // shift invariance carries over from the softmax
  const auto shifted = losses::list_all(std::vector<double>{3, 3},
                                        std::vector<double>{1, 0}, 0.5);
  CHECK(shifted.value == doctest::Approx(lg.value).epsilon(1e-12));
  CHECK(max_abs_diff(shifted.score_grad, lg.score_grad) < 1e-12);

  CHECK_THROWS_AS(losses::list_all(std::vector<double>{0, 0},
                                   std::vector<double>{0, 0}, 0.5),
                  DomainError);
  CHECK_THROWS_AS(losses::list_all(std::vector<double>{0, 0},
                                   std::vector<double>{0.5, 1.0}, 0.5),
                  DomainError);
}

TEST_CASE("gradients equal the independent closed forms to 1e-12") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(12);
    std::vector<double> scores(n), labels(n);
    for (double& v : scores) v = rng.uniform(-4.0, 4.0);
    bool any = false;
    for (double& l : labels) {
      l = rng.uniform() < 0.3 ? 1.0 : 0.0;
      any = any || l == 1.0;
    }
    if (!any) labels[rng.uniform_index(n)] = 1.0;
    std::vector<double> aucs(n);
    for (double& v : aucs) v = rng.uniform(0.0, 1.1);

    const std::vector<double> target = losses::top_one_target(aucs);
    const auto one = losses::list_one(scores, target);
    CHECK(max_abs_diff(one.score_grad, ref_listone_grad(scores, target)) <= 1e-12);

    const auto all = losses::list_all(scores, labels, 0.5);
    CHECK(max_abs_diff(all.score_grad, ref_listall_grad(scores, labels, 0.5)) <=
          1e-12);
  }
}

TEST_CASE("gradients match finite differences") {
  Rng rng(23);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(8);
    std::vector<double> scores(n), labels(n), aucs(n);
    for (double& v : scores) v = rng.uniform(-2.0, 2.0);
    for (double& v : aucs) v = rng.uniform(0.0, 1.0);
    bool any = false;
    for (double& l : labels) {
      l = rng.uniform() < 0.3 ? 1.0 : 0.0;
      any = any || l == 1.0;
    }
    if (!any) labels[rng.uniform_index(n)] = 1.0;
    const std::vector<double> target = losses::top_one_target(aucs);

    const auto one = losses::list_one(scores, target);
    const auto fd_one = nn::finite_diff_grad(
        [&](std::span<const double> s) {
          return losses::list_one(std::vector<double>(s.begin(), s.end()), target)
              .value;
        },
        scores);
    CHECK(rel_err(one.score_grad, fd_one) < 1e-6);

    const auto all = losses::list_all(scores, labels, 0.5);
    const auto fd_all = nn::finite_diff_grad(
        [&](std::span<const double> s) {
          return losses::list_all(std::vector<double>(s.begin(), s.end()), labels,
                                  0.5)
              .value;
        },
        scores);
    CHECK(rel_err(all.score_grad, fd_all) < 1e-6);
  }
}

TEST_CASE("loss properties") {
  Rng rng(31);
  SUBCASE("permutation equivariance") {
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 3 + rng.uniform_index(8);
      std::vector<double> scores(n), labels(n, 0.0);
      for (double& v : scores) v = rng.uniform(-2.0, 2.0);
      labels[rng.uniform_index(n)] = 1.0;
      labels[rng.uniform_index(n)] = 1.0;

      std::vector<std::size_t> perm(n);
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      rng.shuffle(perm);
      std::vector<double> ps(n), pl(n);
      for (std::size_t i = 0; i < n; ++i) {
        ps[i] = scores[perm[i]];
        pl[i] = labels[perm[i]];
      }
      const auto base = losses::list_all(scores, labels, 0.5);
      const auto permuted = losses::list_all(ps, pl, 0.5);
      CHECK(permuted.value == doctest::Approx(base.value).epsilon(1e-12));
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(permuted.score_grad[i] ==
              doctest::Approx(base.score_grad[perm[i]]).epsilon(1e-12));
      }
    }
  }
  SUBCASE("list_one loss is bounded below by the target entropy") {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(8);
      std::vector<double> scores(n), aucs(n);
      for (double& v : scores) v = rng.uniform(-3.0, 3.0);
      for (double& v : aucs) v = rng.uniform(0.0, 1.0);
      const auto target = losses::top_one_target(aucs);
      double entropy = 0.0;
      for (double t : target) entropy -= t * std::log(t);
      const auto lg = losses::list_one(scores, target);
      CHECK(lg.value >= entropy - 1e-12);
    }
  }
  SUBCASE("pushing the only sensitive drug down strictly raises list_all") {
    std::vector<double> scores{1.0, 0.4, -0.2, 0.9};
    std::vector<double> labels{1.0, 0.0, 0.0, 0.0};
    double prev = losses::list_all(scores, labels, 0.5).value;
    for (int step = 0; step < 6; ++step) {
      scores[0] -= 0.5;
      const double cur = losses::list_all(scores, labels, 0.5).value;
      CHECK(cur > prev);
      prev = cur;
    }
  }
}
