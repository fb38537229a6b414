#include "markovgen/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "markovgen/rng.hpp"

using namespace markovgen;

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix random_matrix(size_t n, size_t dim, std::uint64_t seed, double shift = 0.0) {
  Rng rng(seed);
  Matrix m(n, std::vector<double>(dim));
  for (auto& row : m) {
    for (double& v : row) v = rng.normal() + shift;
  }
  return m;
}

// independent single-accumulator evaluation of the U-statistic
double naive_mmd2(const Matrix& a, const Matrix& b) {
  const auto dist = [](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
  };
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < a.size(); ++j) {
      if (i != j) saa -= dist(a[i], a[j]);
    }
  }
  for (size_t i = 0; i < b.size(); ++i) {
    for (size_t j = 0; j < b.size(); ++j) {
      if (i != j) sbb -= dist(b[i], b[j]);
    }
  }
  for (const auto& x : a) {
    for (const auto& y : b) sab -= dist(x, y);
  }
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  return saa / (n * (n - 1.0)) + sbb / (m * (m - 1.0)) - 2.0 * sab / (n * m);
}

}  // namespace

TEST(EnergyMmdV, IdenticalSamplesGiveExactZero) {
  const Matrix a = random_matrix(37, 8, 100);
  EXPECT_EQ(energy_mmd_v(a, a), 0.0);
  // a permuted copy is the same multiset but different summation order
  Matrix b = a;
  std::rotate(b.begin(), b.begin() + 11, b.end());
  EXPECT_LT(energy_mmd_v(a, b), 1e-10);
}

TEST(EnergyMmdV, TwoSingletonsGiveRootTwoDelta) {
  const double delta = 0.37;
  EXPECT_NEAR(energy_mmd_v({{1.25}}, {{1.25 + delta}}), std::sqrt(2.0 * delta), 1e-12);
  // 2D: distance 5 between the points
  EXPECT_NEAR(energy_mmd_v({{0.0, 0.0}}, {{3.0, 4.0}}), std::sqrt(10.0), 1e-12);
}

TEST(EnergyMmdU, BlockedSumsMatchNaiveAccumulation) {
  const Matrix a = random_matrix(300, 10, 7);
  const Matrix b = random_matrix(250, 10, 8, 0.3);
  const MmdResult r = energy_mmd_detail(a, b);
  EXPECT_NEAR(r.mmd2, naive_mmd2(a, b), 1e-10);
  EXPECT_FALSE(r.clamped);
  EXPECT_NEAR(r.mmd, std::sqrt(r.mmd2), 1e-15);
}

TEST(EnergyMmdU, SymmetricAndSeparatesDistributions) {
  const Matrix a = random_matrix(200, 4, 1);
  const Matrix b = random_matrix(200, 4, 2);
  const Matrix c = random_matrix(200, 4, 3, 3.0);
  EXPECT_NEAR(energy_mmd(a, b), energy_mmd(b, a), 1e-12);
  const double same = energy_mmd(a, b);
  const double shifted = energy_mmd(a, c);
  EXPECT_GT(shifted, 0.5);
  EXPECT_LT(same, 0.5 * shifted);
}

// Hand-checked negative estimate: saa = -1, sbb = -1e-4, sab = -0.5,
// so mmd2 = -1e-4 and the reported distance clamps to zero.
TEST(EnergyMmdU, NegativeEstimateClampsToZero) {
  const Matrix a = {{0.0}, {1.0}};
  const Matrix b = {{0.5}, {0.5001}};
  const MmdResult r = energy_mmd_detail(a, b);
  EXPECT_TRUE(r.clamped);
  EXPECT_EQ(r.mmd, 0.0);
  EXPECT_NEAR(r.mmd2, -1e-4, 1e-12);
}

TEST(EnergyMmd, RejectsRaggedAndUndersizedInput) {
  const Matrix ok = {{0.0, 1.0}, {2.0, 3.0}};
  const Matrix ragged = {{0.0, 1.0}, {2.0}};
  const Matrix narrow = {{0.0}, {1.0}};
  EXPECT_THROW(energy_mmd(ragged, ok), std::invalid_argument);
  EXPECT_THROW(energy_mmd(ok, narrow), std::invalid_argument);
  EXPECT_THROW(energy_mmd(ok, {{1.0, 2.0}}), std::invalid_argument);  // U-stat needs 2
  EXPECT_THROW(energy_mmd_v(ok, {}), std::invalid_argument);
  EXPECT_NO_THROW(energy_mmd_v(ok, {{1.0, 2.0}}));
}
