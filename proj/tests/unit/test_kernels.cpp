// Parallel kernels against the serial reference versions.
#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "drn/numerics/kernels.hpp"
#include "drn/numerics/reference_kernels.hpp"

using namespace drn;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-10) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], tol) << "index " << i;
}

}  // namespace

TEST(ReferenceGemm, HandProduct) {
  const std::vector<double> a{1, 2, 3, 4, 5, 6};  // 2x3
  const std::vector<double> b{1, 0, 0, 1, 1, 1};  // 3x2
  std::vector<double> c(4, 0.0);
  reference::gemm<double>({2, 2, 3}, a.data(), b.data(), c.data(), false);
  EXPECT_EQ(c, (std::vector<double>{4, 5, 10, 11}));
}

class GemmMatch : public ::testing::TestWithParam<std::tuple<bool, bool, bool>> {};

TEST_P(GemmMatch, ParallelEqualsReference) {
  const auto [ta, tb, acc] = GetParam();
  const GemmShape s{37, 23, 19, ta, tb};
  const auto a = random_vec(s.m * s.k, 1), b = random_vec(s.k * s.n, 2);
  auto c_ref = random_vec(s.m * s.n, 3);
  auto c_par = c_ref;
  reference::gemm(s, a.data(), b.data(), c_ref.data(), acc);
  kernels::gemm(s, a.data(), b.data(), c_par.data(), acc);
  expect_close(c_ref, c_par);
}

INSTANTIATE_TEST_SUITE_P(AllLayouts, GemmMatch,
                         ::testing::Combine(::testing::Bool(), ::testing::Bool(), ::testing::Bool()));

TEST(Kernels, FloatGemmMatchesWithinRounding) {
  const GemmShape s{64, 48, 130};
  std::vector<float> a(s.m * s.k), b(s.k * s.n), r(s.m * s.n), p(s.m * s.n);
  const auto av = random_vec(a.size(), 5), bv = random_vec(b.size(), 6);
  std::copy(av.begin(), av.end(), a.begin());
  std::copy(bv.begin(), bv.end(), b.begin());
  reference::gemm(s, a.data(), b.data(), r.data(), false);
  kernels::gemm(s, a.data(), b.data(), p.data(), false);
  for (std::size_t i = 0; i < r.size(); ++i) ASSERT_NEAR(r[i], p[i], 1e-4f);
}

TEST(Kernels, ActivationsMatch) {
  const auto x = random_vec(501, 7, -4, 4);
  for (Activation f : kAllActivations) {
    std::vector<double> yr(x.size()), yp(x.size());
    reference::activation_forward(f, x.data(), yr.data(), x.size());
    kernels::activation_forward(f, x.data(), yp.data(), x.size());
    expect_close(yr, yp, 0.0);
    const auto dy = random_vec(x.size(), 8);
    std::vector<double> dr(x.size(), 0.5), dp(x.size(), 0.5);
    reference::activation_backward(f, yr.data(), dy.data(), dr.data(), x.size());
    kernels::activation_backward(f, yp.data(), dy.data(), dp.data(), x.size());
    expect_close(dr, dp, 0.0);
  }
}

TEST(Kernels, SoftmaxRowsMatch) {
  const auto x = random_vec(13 * 10, 9, -20, 20);
  std::vector<double> r(x.size()), p(x.size());
  reference::softmax_rows(x.data(), r.data(), 13, 10);
  kernels::softmax_rows(x.data(), p.data(), 13, 10);
  expect_close(r, p, 1e-15);
}

TEST(Kernels, GatedUpdateMatches) {
  const std::size_t rows = 11, hidden = 7;
  const auto pre = random_vec(rows * 2 * hidden, 10, -3, 3), hp = random_vec(rows * hidden, 11);
  const auto dh = random_vec(rows * hidden, 12);
  for (Activation f : kAllActivations) {
    std::vector<double> c1(rows * hidden), t1(rows * hidden), h1(rows * hidden);
    auto c2 = c1, t2 = t1, h2 = h1;
    reference::gated_update_forward(f, pre.data(), hp.data(), c1.data(), t1.data(), h1.data(), rows, hidden);
    kernels::gated_update_forward(f, pre.data(), hp.data(), c2.data(), t2.data(), h2.data(), rows, hidden);
    expect_close(h1, h2, 0.0);
    std::vector<double> dp1(pre.size(), 0.0), dh1(hp.size(), 0.0);
    auto dp2 = dp1, dh2 = dh1;
    reference::gated_update_backward(f, c1.data(), t1.data(), hp.data(), dh.data(), dp1.data(), dh1.data(), rows,
                                     hidden);
    kernels::gated_update_backward(f, c2.data(), t2.data(), hp.data(), dh.data(), dp2.data(), dh2.data(), rows,
                                   hidden);
    expect_close(dp1, dp2, 1e-14);
    expect_close(dh1, dh2, 1e-14);
  }
}

TEST(Kernels, MixedUpdateMatches) {
  const std::size_t edges = 3, rows = 5, hidden = 6;
  const auto pre = random_vec(edges * rows * 2 * hidden, 13, -3, 3), hp = random_vec(rows * hidden, 14);
  const auto w = random_vec(edges * 4, 15, 0, 1), dh = random_vec(rows * hidden, 16);
  std::vector<double> h1(rows * hidden), h2(rows * hidden);
  reference::mixed_update_forward(pre.data(), hp.data(), w.data(), h1.data(), edges, rows, hidden);
  kernels::mixed_update_forward(pre.data(), hp.data(), w.data(), h2.data(), edges, rows, hidden);
  expect_close(h1, h2, 1e-13);
  std::vector<double> dp1(pre.size(), 0.0), dhp1(hp.size(), 0.0), dw1(w.size(), 0.0);
  auto dp2 = dp1, dhp2 = dhp1, dw2 = dw1;
  reference::mixed_update_backward(pre.data(), hp.data(), w.data(), dh.data(), dp1.data(), dhp1.data(), dw1.data(),
                                   edges, rows, hidden);
  kernels::mixed_update_backward(pre.data(), hp.data(), w.data(), dh.data(), dp2.data(), dhp2.data(), dw2.data(),
                                 edges, rows, hidden);
  expect_close(dp1, dp2, 1e-13);
  expect_close(dhp1, dhp2, 1e-13);
  expect_close(dw1, dw2, 1e-12);
}

TEST(Kernels, Im2colRoundTripCountsCoverage) {
  const ConvGeometry g{2, 5, 4, 3, 1, 1};
  std::vector<double> ones(g.channels * g.height * g.width, 1.0);
  std::vector<double> cols(g.col_rows() * g.col_cols());
  std::vector<double> back(ones.size(), 0.0);
  reference::im2col(g, ones.data(), cols.data());
  reference::col2im(g, cols.data(), back.data());
  // Interior pixels are covered by all 9 taps; corners by 4.
  EXPECT_DOUBLE_EQ(back[1 * g.width + 1], 9.0);
  EXPECT_DOUBLE_EQ(back[0], 4.0);
  std::vector<double> cols2(cols.size()), back2(ones.size(), 0.0);
  kernels::im2col(g, ones.data(), cols2.data());
  kernels::col2im(g, cols2.data(), back2.data());
  expect_close(cols, cols2, 0.0);
  expect_close(back, back2, 0.0);
}

TEST(Kernels, ConvMatches) {
  const ConvGeometry g{3, 9, 8, 3, 2, 1};
  const std::size_t batch = 3, out = 4;
  const auto x = random_vec(batch * g.channels * g.height * g.width, 17);
  const auto w = random_vec(out * g.col_rows(), 18), b = random_vec(out, 19);
  const std::size_t ysize = batch * out * g.out_height() * g.out_width();
  std::vector<double> y1(ysize), y2(ysize);
  reference::conv2d_forward(g, batch, out, x.data(), w.data(), b.data(), y1.data());
  kernels::conv2d_forward(g, batch, out, x.data(), w.data(), b.data(), y2.data());
  expect_close(y1, y2, 1e-12);
  const auto dy = random_vec(ysize, 20);
  std::vector<double> dx1(x.size(), 0.0), dw1(w.size(), 0.0), db1(out, 0.0);
  auto dx2 = dx1, dw2 = dw1, db2 = db1;
  reference::conv2d_backward(g, batch, out, x.data(), w.data(), dy.data(), dx1.data(), dw1.data(), db1.data());
  kernels::conv2d_backward(g, batch, out, x.data(), w.data(), dy.data(), dx2.data(), dw2.data(), db2.data());
  expect_close(dx1, dx2, 1e-12);
  expect_close(dw1, dw2, 1e-12);
  expect_close(db1, db2, 1e-12);
}
