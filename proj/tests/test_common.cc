// test_common.cc

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

#include <algorithm>
#include <atomic>
#include <numeric>
#include <set>
#include <stdexcept>

#include "kws/common.h"

namespace kws {

TEST_SUITE("common") {

TEST_CASE("derive_seed is a pure function of its salts") {
  CHECK(derive_seed(7, "a", 3) == derive_seed(7, "a", 3));
  CHECK(derive_seed(7, "a", 3) != derive_seed(7, "a", 4));
  CHECK(derive_seed(7, "a", 3) != derive_seed(8, "a", 3));
  CHECK(derive_seed(7, "a") != derive_seed(7, "b"));
  // Folding is left to right.
  CHECK(derive_seed(7, "a", 3) == derive_seed(derive_seed(7, "a"), std::uint64_t{3}));
}

TEST_CASE("hash_string matches the FNV-1a reference values") {
  CHECK(hash_string("") == 0xcbf29ce484222325ULL);
  CHECK(hash_string("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hash_string("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("uniform and uniform_index stay in range") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform(rng, -2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
    const std::size_t k = uniform_index(rng, 4, 9);
    CHECK(k >= 4);
    CHECK(k <= 9);
  }
}

TEST_CASE("gaussian has roughly unit moments") {
  Rng rng(11);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = gaussian(rng);
    s += g;
    s2 += g * g;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("shuffle permutes and is reproducible") {
  std::vector<int> a(50), b(50);
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), 0);
  Rng r1(3), r2(3);
  shuffle(a, r1);
  shuffle(b, r2);
  CHECK(a == b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("parallel_for visits every index once for any job count") {
  for (unsigned jobs : {1u, 2u, 8u}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
}

TEST_CASE("parallel_for rethrows a worker exception") {
  auto boom = [](std::size_t i) {
    if (i == 5) throw ValidationError("index 5");
  };
  CHECK_THROWS_AS(parallel_for(20, 4, boom), ValidationError);
  CHECK_THROWS_AS(parallel_for(20, 1, boom), ValidationError);
}

TEST_CASE("Matrix indexing is row-major") {
  Matrix m(2, 3);
  m(1, 2) = 5.0;
  CHECK(m.data()[5] == 5.0);
  CHECK(m.row(1)[2] == 5.0);
  Matrix n = m;
  CHECK(n == m);
  n(0, 0) = 1.0;
  CHECK_FALSE(n == m);
}

}  // TEST_SUITE

}  // namespace kws
