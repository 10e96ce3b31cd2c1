#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "evcs/beam_splitter.hpp"

using namespace evcs;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

BeamSplitterSpec random_splitter(std::mt19937_64& rng) {
  return BeamSplitterSpec(uniform(rng, 0.0, 1.0), uniform(rng, -4.0, 4.0), uniform(rng, -4.0, 4.0));
}

// Splitter 1 on (a, b) -> (d, w), splitter 2 on (d, c) -> (u, v), both as 3x3 embeddings.
Matrix3 cascade_product(const BeamSplitterSpec& bs1, const BeamSplitterSpec& bs2) {
  const Matrix2 m1 = bs_matrix(bs1);
  const Matrix2 m2 = bs_matrix(bs2);
  // rows (a, b, c), columns (d, c, w)
  const Matrix3 e1{{{m1[0][0], 0.0, m1[0][1]}, {m1[1][0], 0.0, m1[1][1]}, {0.0, 1.0, 0.0}}};
  // rows (d, c, w), columns (u, v, w)
  const Matrix3 e2{{{m2[0][0], m2[0][1], 0.0}, {m2[1][0], m2[1][1], 0.0}, {0.0, 0.0, 1.0}}};
  return multiply(e1, e2);
}

}  // namespace

TEST(BsMatrix, Limits) {
  const Matrix2 id = bs_matrix(BeamSplitterSpec(1.0));
  EXPECT_EQ(id[0][0], Amplitude(1.0));
  EXPECT_EQ(id[1][1], Amplitude(1.0));
  EXPECT_EQ(std::abs(id[0][1]), 0.0);
  EXPECT_EQ(std::abs(id[1][0]), 0.0);

  const Matrix2 swap = bs_matrix(BeamSplitterSpec(0.0));
  EXPECT_EQ(std::abs(swap[0][0]), 0.0);
  EXPECT_EQ(swap[0][1], Amplitude(1.0));
  EXPECT_EQ(swap[1][0], Amplitude(-1.0));
  EXPECT_EQ(std::abs(swap[1][1]), 0.0);

  EXPECT_LT(unitarity_residual(bs_matrix(BeamSplitterSpec(1.0 / std::sqrt(2.0)))), 1e-14);
}

TEST(BsMatrix, UnitaryForRandomParameters) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) EXPECT_LT(unitarity_residual(bs_matrix(random_splitter(rng))), 1e-14);
}

TEST(BsMatrix, RejectsBadTransmittance) {
  EXPECT_THROW(BeamSplitterSpec(1.2), Error);
  EXPECT_THROW(BeamSplitterSpec(-0.1), Error);
  EXPECT_THROW(BeamSplitterSpec(0.5, std::nan("")), Error);
}

TEST(ComposeQ, TransparentCascade) {
  const QMap q = compose_q(BeamSplitterSpec(1.0), BeamSplitterSpec(1.0));
  EXPECT_EQ(q.q_a_u, Amplitude(1.0));
  EXPECT_EQ(q.q_b_w, Amplitude(1.0));
  EXPECT_EQ(q.q_c_v, Amplitude(1.0));
  for (Amplitude z : {q.q_a_v, q.q_a_w, q.q_b_u, q.q_b_v, q.q_c_u}) EXPECT_EQ(std::abs(z), 0.0);
}

TEST(ComposeQ, EqualsEmbeddedMatrixProduct) {
  std::mt19937_64 rng(5);
  std::vector<std::pair<BeamSplitterSpec, BeamSplitterSpec>> cases{
      {BeamSplitterSpec(0.829), BeamSplitterSpec(0.740)},
      {BeamSplitterSpec(0.999), BeamSplitterSpec(0.999)},
  };
  for (int i = 0; i < 200; ++i) cases.emplace_back(random_splitter(rng), random_splitter(rng));
  for (const auto& [bs1, bs2] : cases) {
    const Matrix3 expected = cascade_product(bs1, bs2);
    const Matrix3 got = compose_q(bs1, bs2).matrix();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_LT(std::abs(expected[i][j] - got[i][j]), 1e-13);
  }
}

TEST(ComposeQ, UnitaryWithUnitRowsAndColumns) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const Matrix3 m = compose_q(random_splitter(rng), random_splitter(rng)).matrix();
    EXPECT_LT(unitarity_residual(m), 1e-12);
    for (int k = 0; k < 3; ++k) {
      double row = 0.0, col = 0.0;
      for (int j = 0; j < 3; ++j) {
        row += std::norm(m[k][j]);
        col += std::norm(m[j][k]);
      }
      EXPECT_NEAR(row, 1.0, 1e-12);
      EXPECT_NEAR(col, 1.0, 1e-12);
    }
  }
}

TEST(SolveT2, TransparentFirstSplitterGivesUnitT2) {
  for (double b : {0.3, 0.813, 1.5})
    for (double g : {0.2, 0.5}) {
      const auto sol = solve_t2(Amplitude(b), std::polar(g, std::numbers::pi), BeamSplitterSpec(1.0));
      EXPECT_EQ(sol.t2, 1.0);
      EXPECT_LT(sol.residual, 1e-12);
    }
}

TEST(SolveT2, PublishedOperatingPoints) {
  const Amplitude gamma = std::polar(0.5, std::numbers::pi);
  EXPECT_NEAR(solve_t2(0.5, gamma, BeamSplitterSpec(0.999)).t2, 0.999, 1e-3);
  const auto psi1 = solve_t2(0.813, gamma, BeamSplitterSpec(0.829));
  EXPECT_NEAR(psi1.t2, 0.740, 1e-3);
  EXPECT_NEAR(psi1.closed_form_squared, psi1.t2, 1e-12);
  EXPECT_GT(std::abs(psi1.closed_form_printed - psi1.t2), 0.05);
}

TEST(SolveT2, RandomTriplesMeetResidual) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 100; ++i) {
    const double b = uniform(rng, 0.05, 2.0);
    const double g = uniform(rng, 0.05, 2.0);
    const double t1 = uniform(rng, 0.01, 0.999);
    const auto sol = solve_t2(b, std::polar(g, std::numbers::pi), BeamSplitterSpec(t1));
    EXPECT_LT(sol.residual, 1e-12);
    const QMap q = compose_q(BeamSplitterSpec(t1), BeamSplitterSpec(sol.t2));
    EXPECT_LT(std::abs(zero_sum_residual(b, std::polar(g, std::numbers::pi), q)), 1e-12);
    EXPECT_NEAR(sol.t2, g / std::sqrt(b * b * (1.0 - t1 * t1) + g * g), 1e-12);
  }
}

TEST(SolveT2, UnsolvableInputsAreRejected) {
  try {
    solve_t2(0.5, 0.5, BeamSplitterSpec(0.8));  // θ = 0: both terms push the same way
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
  }
  EXPECT_THROW(solve_t2(0.5, 0.0, BeamSplitterSpec(0.8)), Error);
  EXPECT_THROW(solve_t2(0.0, 0.0, BeamSplitterSpec(0.8)), Error);
}
