#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "nafd/link_metrics.hpp"
#include "nafd/quant.hpp"

using namespace nafd;

namespace {

OptVars scalar_vars(double eta, double s2d, double s2u, double pu) {
  return OptVars{{eta}, {s2d}, {s2u}, {pu}};
}

}  // namespace

TEST_CASE("quantization covariance, scalar and collapse cases") {
  const std::vector<CMat> f = {CMat::Ones(1, 1)};
  const CMat c = quant_covariance(f, scalar_vars(2.0, 1.0, 1.0, 0.0), QuantModel::with_rho(0.25));
  CHECK(c(0, 0).real() == doctest::Approx(1.125).epsilon(1e-15));

  Rng rng(5);
  const auto cfg = fx::baseline();
  const auto r = fx::realization(cfg, 11);
  const OptVars v = fx::random_vars(cfg, rng);
  const int nrf = cfg.rf_chains;
  const CMat c0 = quant_covariance(r.beams.f_digital, v, QuantModel::with_rho(0.0));
  OptVars v0 = v;
  for (auto& e : v0.eta) e = 0.0;
  const double rho = rho_for_bits(2);
  const CMat ce = quant_covariance(r.beams.f_digital, v0, QuantModel::with_rho(rho));
  for (int i = 0; i < c0.rows(); ++i)
    for (int j = 0; j < c0.cols(); ++j) {
      const double want = i == j ? v.sigma2_dl[i / nrf] : 0.0;
      CHECK(std::abs(c0(i, j) - want) <= 1e-15 * v.sigma2_dl[i / nrf]);
      const double want_e = i == j ? (1 - rho) * v.sigma2_dl[i / nrf] : 0.0;
      CHECK(std::abs(ce(i, j) - want_e) <= 1e-15 * v.sigma2_dl[i / nrf]);
    }
  // Hermitian, PSD, block diagonal
  const CMat cq = quant_covariance(r.beams.f_digital, v, QuantModel::for_bits(1));
  CHECK((cq - cq.adjoint()).norm() == 0.0);
  for (int i = 0; i < cq.rows(); ++i) {
    CHECK(cq(i, i).real() > 0.0);
    for (int j = 0; j < cq.cols(); ++j)
      if (i / nrf != j / nrf) CHECK(cq(i, j) == cd(0.0));
  }
}

TEST_CASE("scalar rate examples") {
  SUBCASE("downlink SNR of one") {
    fx::ScalarSystem s(1.0, 1.0, 1.0, 1.0);
    const auto v = scalar_vars(1.0, 0.0, 1.0, 3.0);
    CHECK(downlink_rate(0, s.beams, v, QuantModel::with_rho(0.0), s.ch, s.cfg) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(downlink_rate(0, s.beams, scalar_vars(0.0, 0.0, 1.0, 3.0), QuantModel::for_bits(1),
                        s.ch, s.cfg) == 0.0);
  }
  SUBCASE("uplink SNR of one") {
    fx::ScalarSystem s(1.0, 1.0, 1.0, 1.0);
    const auto v = scalar_vars(0.0, 0.0, 0.5, 1.5);
    CHECK(uplink_rate(0, s.beams, v, QuantModel::for_bits(3), s.ch, s.cfg) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(uplink_rate(0, s.beams, scalar_vars(0.0, 0.0, 0.5, 0.0), QuantModel::for_bits(3),
                      s.ch, s.cfg) == 0.0);
  }
}

TEST_CASE("scalar fronthaul examples") {
  fx::ScalarSystem s(1.0, 1.0, 1.0, 0.0);
  CHECK(fronthaul_dl(0, s.beams, scalar_vars(3.0, 1.0, 1.0, 0.0)) ==
        doctest::Approx(2.0).epsilon(1e-15));
  CHECK(fronthaul_dl(0, s.beams, scalar_vars(0.0, 1.0, 1.0, 0.0)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(fronthaul_dl(0, s.beams, scalar_vars(1.0, 0.0, 1.0, 0.0)), MetricError);

  const auto q = QuantModel::for_bits(2);
  // P_D = 0 (eta = sigma2_dl = 0), zero noise: only the served user remains
  CHECK(fronthaul_ul(0, s.beams, scalar_vars(0.0, 0.0, 0.7, 0.7), q, s.ch, s.cfg) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(fronthaul_ul(0, s.beams, scalar_vars(0.0, 0.0, 0.7, 0.0), q, s.ch, s.cfg)) <
        1e-15);
  CHECK_THROWS_AS(fronthaul_ul(0, s.beams, scalar_vars(0.0, 0.0, 0.0, 1.0), q, s.ch, s.cfg),
                  MetricError);
}

TEST_CASE("transmit power special cases") {
  Rng rng(8);
  const auto cfg = fx::baseline();
  const auto r = fx::realization(cfg, 3);
  OptVars v = fx::random_vars(cfg, rng);
  const auto q1 = QuantModel::for_bits(1);
  OptVars z = v;
  for (auto& e : z.eta) e = 0.0;
  for (auto& e : z.sigma2_dl) e = 0.0;
  for (int m = 0; m < cfg.n_trau; ++m) CHECK(transmit_power(m, r.beams, z, q1) == 0.0);

  for (int m = 0; m < cfg.n_trau; ++m) {
    const CMat& w = r.beams.w_analog[m];
    const CMat& f = r.beams.f_digital[m];
    double want = v.sigma2_dl[m] * (w * w.adjoint()).trace().real();
    for (int k = 0; k < cfg.n_dl_users; ++k) want += v.eta[k] * (w * f.col(k)).squaredNorm();
    CHECK(fx::rel_err(transmit_power(m, r.beams, v, QuantModel::with_rho(0.0)), want) < 1e-12);
  }
}

TEST_CASE("dual evaluator agreement on 100 random instances") {
  auto cfg = fx::baseline();
  Rng rng(2024);
  double worst = 0.0;
  std::string worst_what;
  for (int t = 0; t < 100; ++t) {
    const auto r = fx::realization(cfg, 900 + t);
    const OptVars v = fx::operating_vars(cfg, r.beams, rng);
    std::string what;
    const double g = oracle::dual_evaluator_gap(cfg, r, v, QuantModel::for_bits(1 + t % 8), &what);
    if (g > worst) { worst = g; worst_what = what; }
  }
  CAPTURE(worst);
  CAPTURE(worst_what);
  CHECK(worst <= 1e-9);
}

TEST_CASE("cofactor determinant") {
  CMat a(2, 2);
  a << cd(2, 0), cd(1, 1), cd(1, -1), cd(3, 0);
  CHECK(std::abs(oracle::cofactor_det(a) - cd(4, 0)) < 1e-15);
}

TEST_CASE("transmit power matches a Monte-Carlo average of the quantized output") {
  auto cfg = fx::baseline();
  Rng vr(77);
  for (int t = 0; t < 10; ++t) {
    const auto r = fx::realization(cfg, 300 + t);
    const OptVars v = fx::random_vars(cfg, vr);
    const auto q = QuantModel::for_bits(1 + t % 4);
    const int m = t % cfg.n_trau;
    Rng rng(1000 + t);
    const double mc = oracle::mc_transmit_power(r.beams, v, q, m, 100000, rng);
    CAPTURE(t);
    CHECK(fx::rel_err(transmit_power(m, r.beams, v, q), mc) < 0.01);
  }
}

TEST_CASE("affine link model reproduces the direct evaluation") {
  auto cfg = fx::baseline();
  Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    const auto r = fx::realization(cfg, 40 + t);
    const auto q = QuantModel::for_bits(1 + t % 8);
    const OptVars v = fx::random_vars(cfg, rng);
    const LinkModel lm = LinkModel::build(r.beams, r.channels, cfg, q);
    const RVec x = lm.layout.pack(v);
    std::vector<double> rdl, rul;
    const double obj = lm.objective(x, &rdl, &rul);
    const RateReport rep = evaluate_report(r.beams, r.channels, cfg, q, v);
    CHECK(fx::rel_err(obj, rep.objective) < 1e-10);
    for (int k = 0; k < cfg.n_dl_users; ++k) CHECK(std::abs(rdl[k] - rep.r_dl[k]) < 1e-10);
    for (int j = 0; j < cfg.n_ul_users; ++j) CHECK(std::abs(rul[j] - rep.r_ul[j]) < 1e-10);
    std::vector<double> pd(cfg.n_trau);
    lm.p_dl.eval(x.data(), pd.data());
    for (int m = 0; m < cfg.n_trau; ++m) CHECK(fx::rel_err(pd[m], rep.p_dl[m]) < 1e-12);
  }
}

TEST_CASE("pack and unpack are inverse") {
  auto cfg = fx::baseline();
  Rng rng(1);
  const OptVars v = fx::random_vars(cfg, rng);
  const auto lay = VarLayout::from(cfg);
  CHECK(lay.size() == 20);
  const OptVars w = lay.unpack(lay.pack(v));
  CHECK(w.eta == v.eta);
  CHECK(w.sigma2_dl == v.sigma2_dl);
  CHECK(w.sigma2_ul == v.sigma2_ul);
  CHECK(w.p_ul == v.p_ul);
}

TEST_CASE("more downlink compression noise lowers downlink rates and capacity") {
  auto cfg = fx::baseline();
  Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    const auto r = fx::realization(cfg, 500 + t);
    const auto q = QuantModel::for_bits(1 + t % 8);
    const OptVars v = fx::operating_vars(cfg, r.beams, rng);
    const int m = t % cfg.n_trau;
    OptVars w = v;
    w.sigma2_dl[m] *= 2.0;
    const auto a = evaluate_report(r.beams, r.channels, cfg, q, v);
    const auto b = evaluate_report(r.beams, r.channels, cfg, q, w);
    CHECK(b.c_dl[m] < a.c_dl[m]);
    for (int k = 0; k < cfg.n_dl_users; ++k) {
      if (r.beams.h_eff[k].segment(m * cfg.rf_chains, cfg.rf_chains).norm() == 0.0) continue;
      CHECK(b.r_dl[k] < a.r_dl[k]);
    }
  }
}

// SINR_D = (1-rho) eta / (rho a + sigma2 b + c / (1-rho)) rises as rho falls.
// The uplink side has no such guarantee: (1-rho)^2 scales the leaked
// downlink signal into the uplink receiver, so only downlink rates are checked.
TEST_CASE("downlink rates at fixed variables do not drop with more DAC bits") {
  auto cfg = fx::baseline();
  Rng rng(19);
  for (int t = 0; t < 20; ++t) {
    const auto r = fx::realization(cfg, 600 + t);
    const OptVars v = t % 2 ? fx::random_vars(cfg, rng) : fx::operating_vars(cfg, r.beams, rng);
    std::vector<double> prev(cfg.n_dl_users, -1.0);
    for (int b = 1; b <= 16; ++b) {
      for (int k = 0; k < cfg.n_dl_users; ++k) {
        const double rk =
            downlink_rate(k, r.beams, v, QuantModel::for_bits(b), r.channels, cfg);
        CAPTURE(t);
        CAPTURE(b);
        CHECK(rk >= prev[k] * (1 - 1e-12));
        prev[k] = rk;
      }
    }
  }
}

TEST_CASE("rates and capacities are non-negative") {
  auto cfg = fx::baseline();
  Rng rng(23);
  for (int t = 0; t < 10; ++t) {
    const auto r = fx::realization(cfg, 700 + t);
    const auto rep =
        evaluate_report(r.beams, r.channels, cfg, QuantModel::for_bits(2), fx::random_vars(cfg, rng));
    for (double x : rep.r_dl) CHECK(x >= 0.0);
    for (double x : rep.r_ul) CHECK(x >= 0.0);
    for (double x : rep.c_dl) CHECK(x >= 0.0);
    for (double x : rep.c_ul) CHECK(x >= 0.0);
    for (double x : rep.p_dl) CHECK(x >= 0.0);
  }
}
