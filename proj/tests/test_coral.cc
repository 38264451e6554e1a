// test_coral.cc

// Copyright 2026  The kws-confusion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>

#include "gradcheck.h"
#include "kws/coral.h"
#include "test_util.h"

namespace kws {

using testing::random_matrix;

namespace {

/// Two-pass covariance: center the columns, then average outer products.
Matrix two_pass_covariance(const Matrix& d) {
  const std::size_t n = d.rows(), k = d.cols();
  std::vector<double> mean(k, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) mean[c] += d(r, c) / n;
  }
  Matrix cov(k, k);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) cov(i, j) += (d(r, i) - mean[i]) * (d(r, j) - mean[j]) / (n - 1);
    }
  }
  return cov;
}

}  // namespace

TEST_SUITE("coral") {

TEST_CASE("covariance of a 2 x 2 example is exact") {
  Matrix d(2, 2);
  d(0, 0) = 1;
  d(0, 1) = 2;
  d(1, 0) = 3;
  d(1, 1) = 4;
  const Matrix c = covariance(d);
  for (double v : c.data()) CHECK(v == 2.0);
}

TEST_CASE("covariance agrees with the two-pass formula and is symmetric") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const Matrix d = random_matrix(uniform_index(rng, 2, 12), uniform_index(rng, 1, 6), rng, 2.0);
    const Matrix c = covariance(d), ref = two_pass_covariance(d);
    for (std::size_t i = 0; i < c.rows(); ++i) {
      for (std::size_t j = 0; j < c.cols(); ++j) {
        CHECK(c(i, j) == doctest::Approx(ref(i, j)).epsilon(1e-10));
        CHECK(c(i, j) == c(j, i));
      }
    }
  }
}

TEST_CASE("covariance ignores a common offset") {
  Rng rng(4);
  const Matrix d = random_matrix(9, 3, rng);
  Matrix e = d;
  for (std::size_t r = 0; r < 9; ++r) {
    for (std::size_t c = 0; c < 3; ++c) e(r, c) += 5.0 + c;
  }
  const Matrix a = covariance(d), b = covariance(e);
  for (std::size_t i = 0; i < 9; ++i) CHECK(b.data()[i] == doctest::Approx(a.data()[i]).epsilon(1e-9));
}

TEST_CASE("covariance needs two samples") {
  CHECK_THROWS_AS(covariance(Matrix(1, 3)), ValidationError);
}

TEST_CASE("coral loss oracles") {
  Matrix c(2, 2, 2.0);
  CHECK(std::fabs(coral_loss(c, Matrix(2, 2)) - 1.0) <= 1e-12);
  Rng rng(5);
  const Matrix a = covariance(random_matrix(6, 4, rng));
  const Matrix b = covariance(random_matrix(6, 4, rng));
  CHECK(coral_loss(a, a) == 0.0);
  CHECK(coral_loss(a, b) == coral_loss(b, a));
  CHECK(coral_loss(a, b) > 0.0);
  CHECK_THROWS_AS(coral_loss(a, Matrix(3, 3)), ValidationError);
}

TEST_CASE("scaling both feature sets by c scales coral by c^4") {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const Matrix s = random_matrix(7, 3, rng), u = random_matrix(5, 3, rng);
    const double c = uniform(rng, 0.2, 3.0);
    Matrix cs = s, cu = u;
    for (double& v : cs.data()) v *= c;
    for (double& v : cu.data()) v *= c;
    const double base = coral_loss(covariance(s), covariance(u));
    const double scaled = coral_loss(covariance(cs), covariance(cu));
    CHECK(std::fabs(scaled - std::pow(c, 4) * base) <= 1e-10 * std::fabs(scaled));
  }
}

TEST_CASE("joint loss combines the two distances as a ratio") {
  Rng rng(7);
  const Matrix pos = random_matrix(4, 3, rng, 3.0), neg = random_matrix(5, 3, rng),
               syn = random_matrix(4, 3, rng, 0.5);
  const JointLoss jl = joint_loss(0.7, pos, neg, syn);
  const double A = coral_loss(covariance(neg), covariance(syn));
  const double B = coral_loss(covariance(pos), covariance(neg));
  CHECK(jl.coral_neg == doctest::Approx(A));
  CHECK(jl.coral_pos == doctest::Approx(B));
  CHECK(jl.ratio == doctest::Approx(A / (A + B + kCoralEpsilon)));
  CHECK(jl.loss == doctest::Approx(0.7 + jl.ratio));
  CHECK(jl.ratio >= 0.0);
  CHECK(jl.ratio < 1.0);
  CHECK(jl.grad_real_pos.rows() == 4);
  CHECK(jl.grad_real_neg.rows() == 5);
  CHECK(jl.grad_synt_neg.rows() == 4);
  // Identical negative clusters: A = 0, so the ratio vanishes.
  CHECK(joint_loss(0.0, pos, neg, neg).ratio == 0.0);
}

TEST_CASE("joint loss feature gradients match central differences") {
  Rng rng(8);
  testing::GradReport rep;
  for (int t = 0; t < 20; ++t) rep.merge(testing::check_joint_loss(rng));
  CHECK(rep.max_rel < 1e-4);
}

TEST_CASE("single coral gradient matches central differences") {
  Rng rng(9);
  Matrix s = random_matrix(6, 3, rng);
  const Matrix t = random_matrix(5, 3, rng);
  const Matrix ct = covariance(t);
  const Matrix g = coral_feature_gradient(s, covariance(s), ct);
  testing::GradReport rep;
  for (std::size_t i = 0; i < s.data().size(); ++i) {
    rep.add(g.data()[i], testing::central_difference(s.data()[i], [&] { return coral_loss(covariance(s), ct); }));
  }
  CHECK(rep.max_rel < 1e-4);
}

}  // TEST_SUITE

}  // namespace kws
