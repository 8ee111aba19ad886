#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gesture/kernels.hpp"
#include "gesture/rng.hpp"

using namespace gesture;
namespace k = gesture::kernels;

namespace {

std::vector<double> random_values(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, std::abs(b[i])));
  }
}

struct ConvCase {
  k::Conv1dShape s;
  std::vector<double> x, w, b, dy;
};

ConvCase conv_case(Rng& rng) {
  ConvCase c;
  c.s = {1 + rng.index(4), 1 + rng.index(9), 1 + rng.index(9), 1 + rng.index(40)};
  c.x = random_values(rng, c.s.batch * c.s.in_channels * c.s.length);
  c.w = random_values(rng, c.s.out_channels * c.s.in_channels * k::kConvTaps);
  c.b = random_values(rng, c.s.out_channels);
  c.dy = random_values(rng, c.s.batch * c.s.out_channels * c.s.length);
  return c;
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace

TEST_CASE("conv1d serial reference is the direct sum") {
  // One input channel, one output channel, taps (1, 2, 3), zero padding.
  const k::Conv1dShape s{1, 1, 1, 4};
  const std::vector<double> x = {1, 2, 3, 4}, w = {1, 2, 3}, b = {0.5};
  std::vector<double> y(4);
  k::serial::conv1d_forward(s, x, w, b, y);
  CHECK(y == std::vector<double>{0.5 + 2 + 6, 0.5 + 1 + 4 + 9, 0.5 + 2 + 6 + 12, 0.5 + 3 + 8});
}

TEST_CASE("parallel conv1d matches the serial reference") {
  Rng rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    auto c = conv_case(rng);
    std::vector<double> ys(c.dy.size()), yp(c.dy.size());
    k::serial::conv1d_forward(c.s, c.x, c.w, c.b, ys);
    k::parallel::conv1d_forward(c.s, c.x, c.w, c.b, yp);
    check_close(yp, ys);

    std::vector<double> dxs(c.x.size(), 0.5), dxp(c.x.size(), 0.5);
    k::serial::conv1d_backward_input(c.s, c.dy, c.w, dxs);
    k::parallel::conv1d_backward_input(c.s, c.dy, c.w, dxp);
    check_close(dxp, dxs);

    std::vector<double> dws(c.w.size(), 0.25), dwp(c.w.size(), 0.25), dbs(c.b.size(), 1.0), dbp(c.b.size(), 1.0);
    k::serial::conv1d_backward_weight(c.s, c.x, c.dy, dws, dbs);
    k::parallel::conv1d_backward_weight(c.s, c.x, c.dy, dwp, dbp);
    check_close(dwp, dws);
    check_close(dbp, dbs);
  }
}

TEST_CASE("parallel batchnorm matches the serial reference") {
  Rng rng(43);
  for (int trial = 0; trial < 25; ++trial) {
    const k::ChannelShape s{1 + rng.index(4), 1 + rng.index(9), 1 + rng.index(40)};
    const auto x = random_values(rng, s.batch * s.channels * s.length);
    std::vector<double> ms(s.channels), vs(s.channels), mp(s.channels), vp(s.channels);
    k::serial::channel_moments(s, x, ms, vs);
    k::parallel::channel_moments(s, x, mp, vp);
    check_close(mp, ms);
    check_close(vp, vs);

    std::vector<double> inv_std(s.channels);
    for (std::size_t c = 0; c < s.channels; ++c) inv_std[c] = 1.0 / std::sqrt(vs[c] + 1e-5);
    const auto gamma = random_values(rng, s.channels), beta = random_values(rng, s.channels);
    std::vector<double> xhs(x.size()), ys(x.size()), xhp(x.size()), yp(x.size());
    k::serial::batchnorm_apply(s, x, ms, inv_std, gamma, beta, xhs, ys);
    k::parallel::batchnorm_apply(s, x, ms, inv_std, gamma, beta, xhp, yp);
    check_close(xhp, xhs);
    check_close(yp, ys);

    const auto dy = random_values(rng, x.size());
    std::vector<double> dxs(x.size(), 0.1), dxp(x.size(), 0.1);
    std::vector<double> dgs(s.channels, 0.0), dgp(s.channels, 0.0), dbs(s.channels, 0.0), dbp(s.channels, 0.0);
    k::serial::batchnorm_backward(s, dy, xhs, inv_std, gamma, dxs, dgs, dbs);
    k::parallel::batchnorm_backward(s, dy, xhs, inv_std, gamma, dxp, dgp, dbp);
    check_close(dxp, dxs);
    check_close(dgp, dgs);
    check_close(dbp, dbs);
  }
}

TEST_CASE("parallel kernels do not depend on the thread count") {
  Rng rng(47);
  auto c = conv_case(rng);
  c.s = {3, 16, 16, 64};
  c.x = random_values(rng, 3 * 16 * 64);
  c.w = random_values(rng, 16 * 16 * 3);
  c.b = random_values(rng, 16);
  c.dy = random_values(rng, 3 * 16 * 64);
  auto run = [&] {
    std::vector<double> y(c.dy.size()), dx(c.x.size(), 0.0), dw(c.w.size(), 0.0), db(16, 0.0);
    k::parallel::conv1d_forward(c.s, c.x, c.w, c.b, y);
    k::parallel::conv1d_backward_input(c.s, c.dy, c.w, dx);
    k::parallel::conv1d_backward_weight(c.s, c.x, c.dy, dw, db);
    const k::ChannelShape bs{3, 16, 64};
    std::vector<double> mean(16), var(16);
    k::parallel::channel_moments(bs, y, mean, var);
    std::vector<double> all = y;
    for (auto* v : {&dx, &dw, &db, &mean, &var}) all.insert(all.end(), v->begin(), v->end());
    return all;
  };
  const int before = k::max_threads();
  set_threads(1);
  const auto one = run();
  set_threads(4);
  const auto four = run();
  set_threads(before);
  CHECK(one == four);
}
