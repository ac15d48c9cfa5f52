#include "hqed/errors.hpp"
#include "hqed/estimate.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

using namespace hqed;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / double(n - 1);
  return v;
}

double lorentz_dip(double x, double c, double fwhm, double depth) {
  const double u = 2.0 * (x - c) / fwhm;
  return depth / (1.0 + u * u);
}

}  // namespace

TEST_CASE("single lorentzian with 1% noise: center to 0.2 MHz") {
  const auto x = linspace(4.039, 4.139, 501);
  std::mt19937 rng(42);
  std::normal_distribution<double> noise(0.0, 0.01 * 0.7);
  std::vector<double> y(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    y[i] = 1.0 - lorentz_dip(x[i], 4.089, 0.012, 0.7) + noise(rng);
  const LorentzianFit fit = fit_lorentzians(x, y, 1);
  CHECK(std::abs(fit.centers[0] - 4.089) * 1e3 < 0.2);
  CHECK(fit.fwhms[0] == doctest::Approx(0.012).epsilon(0.15));
}

TEST_CASE("split double dip: 66 MHz separation recovered to 1 MHz") {
  const auto x = linspace(3.989, 4.189, 2001);
  std::vector<double> y(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    y[i] = 1.0 - lorentz_dip(x[i], 4.056, 0.0071, 0.6) -
           lorentz_dip(x[i], 4.122, 0.0071, 0.6);
  const LorentzianFit fit = fit_lorentzians(x, y, 2);
  CHECK(std::abs(fit.centers[1] - fit.centers[0]) * 1e3 ==
        doctest::Approx(66.0).epsilon(1.0 / 66.0));
  CHECK(fit.fwhms[0] == doctest::Approx(0.0071).epsilon(0.05));
  CHECK_FALSE(fit.ill_conditioned);
  CHECK(fit.residual < 1e-6);
}

TEST_CASE("unresolvable peaks raise the ill-conditioned flag") {
  const auto x = linspace(4.0, 4.2, 801);
  std::vector<double> y(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    y[i] = 1.0 - lorentz_dip(x[i], 4.099, 0.020, 0.5) -
           lorentz_dip(x[i], 4.101, 0.020, 0.5);
  const LorentzianFit fit = fit_lorentzians(x, y, 2);
  CHECK(fit.ill_conditioned);
}

TEST_CASE("fit is scale invariant") {
  const auto x = linspace(3.989, 4.189, 801);
  std::vector<double> y(x.size()), y5(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    y[i] = 1.0 - lorentz_dip(x[i], 4.060, 0.010, 0.5) -
           lorentz_dip(x[i], 4.120, 0.013, 0.4);
    y5[i] = 5.0 * y[i];
  }
  const LorentzianFit a = fit_lorentzians(x, y, 2);
  const LorentzianFit b = fit_lorentzians(x, y5, 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(a.centers[k] == doctest::Approx(b.centers[k]).epsilon(1e-6));
    CHECK(a.fwhms[k] == doctest::Approx(b.fwhms[k]).epsilon(1e-3));
    CHECK(b.depths[k] == doctest::Approx(5.0 * a.depths[k]).epsilon(1e-3));
  }
}

TEST_CASE("fit_lorentzians input validation") {
  const auto x = linspace(0.0, 1.0, 6);
  std::vector<double> y(6, 1.0);
  CHECK_THROWS_AS(fit_lorentzians(x, y, 3), config_error);
  CHECK_THROWS_AS(fit_lorentzians(x, y, 2), config_error);  // too short
}

TEST_CASE("extract_dips") {
  const auto x = linspace(6.2, 7.8, 1601);

  SUBCASE("two clean dips") {
    std::vector<double> y(x.size());
    for (size_t i = 0; i < x.size(); ++i)
      y[i] = 2.0 - lorentz_dip(x[i], 6.490, 0.012, 0.8) -
             lorentz_dip(x[i], 7.507, 0.012, 0.8);
    const auto dips = extract_dips(x, y, 0.05);
    REQUIRE(dips.size() == 2);
    CHECK(dips[0] == doctest::Approx(6.490).epsilon(1e-5));
    CHECK(dips[1] == doctest::Approx(7.507).epsilon(1e-5));
  }

  SUBCASE("flat trace yields nothing") {
    std::vector<double> y(x.size(), 1.0);
    CHECK(extract_dips(x, y, 0.05).empty());
  }

  SUBCASE("shallow ripple below the prominence threshold is ignored") {
    std::vector<double> y(x.size());
    for (size_t i = 0; i < x.size(); ++i)
      y[i] = 1.0 - lorentz_dip(x[i], 7.0, 0.05, 1.0) -
             0.02 * std::cos(40.0 * x[i]);
    const auto dips = extract_dips(x, y, 0.10);
    REQUIRE(dips.size() == 1);
    CHECK(dips[0] == doctest::Approx(7.0).epsilon(1e-3));
  }
}

TEST_CASE("nelder-mead basics") {
  // Rosenbrock-lite bowl with bounds
  auto f = [](const Eigen::VectorXd& x) {
    return std::pow(x[0] - 1.2, 2) + 4.0 * std::pow(x[1] + 0.3, 2);
  };
  Eigen::VectorXd x0(2), lo(2), hi(2);
  x0 << 0.0, 0.0;
  lo << -2.0, -2.0;
  hi << 2.0, 2.0;
  const NelderMeadResult res = nelder_mead(f, x0, lo, hi, {});
  CHECK(res.converged);
  CHECK(res.x[0] == doctest::Approx(1.2).epsilon(1e-4));
  CHECK(res.x[1] == doctest::Approx(-0.3).epsilon(1e-4));

  // bounds are honored
  hi[0] = 1.0;
  const NelderMeadResult clamped = nelder_mead(f, x0, lo, hi, {});
  CHECK(clamped.x[0] == doctest::Approx(1.0).epsilon(1e-5));

  Eigen::VectorXd bad_hi(2);
  bad_hi << -3.0, 2.0;
  CHECK_THROWS_AS(nelder_mead(f, x0, lo, bad_hi, {}), config_error);
}

TEST_CASE("fit_device preconditions") {
  FitProblem p;
  p.free_names = {"a", "b"};
  p.observed = {{0.0, 1.0, 1.0}, {0.1, 1.0, 1.0}, {0.2, 1.0, 1.0}};
  p.model = [](const Eigen::VectorXd&, double) {
    return std::vector<double>{1.0};
  };
  // one observation per parameter is not enough
  CHECK_THROWS_AS(fit_device(p, {}), config_error);
}

TEST_CASE("zero-weight observations do not affect the fit") {
  // model: single visible frequency equal to the parameter
  auto model = [](const Eigen::VectorXd& x, double) {
    return std::vector<double>{x[0]};
  };
  FitProblem p;
  p.free_names = {"f"};
  p.model = model;
  p.start.resize(1);
  p.lower.resize(1);
  p.upper.resize(1);
  p.start << 5.5;
  p.lower << 4.0;
  p.upper << 7.0;
  p.observed = {{0.0, 6.0, 1.0}, {1.0, 6.0, 1.0}, {2.0, 4.2, 0.0}};
  const FitResult fit = fit_device(p, {});
  CHECK(fit.params[0] == doctest::Approx(6.0).epsilon(1e-6));

  // and the residual of the ignored point is still reported
  CHECK(fit.residuals[2] == doctest::Approx(1.8).epsilon(1e-4));
}

TEST_CASE("residual history is non-increasing") {
  // quadratic with a tracked best-so-far
  double best_seen = 1e300;
  bool monotone = true;
  auto f = [&](const Eigen::VectorXd& x) {
    return std::pow(x[0] - 2.0, 2) + std::pow(x[1] - 1.0, 2);
  };
  Eigen::VectorXd x0(2), lo(2), hi(2);
  x0 << -1.0, 3.0;
  lo << -5.0, -5.0;
  hi << 5.0, 5.0;
  NelderMeadOptions opts;
  opts.max_iter = 400;
  // wrap: record best-ever after every call; NM's accepted best can only fall
  auto wrapped = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    if (v < best_seen) best_seen = v;
    return v;
  };
  const NelderMeadResult res = nelder_mead(wrapped, x0, lo, hi, opts);
  if (res.fmin > best_seen + 1e-15) monotone = false;
  CHECK(monotone);
  CHECK(res.fmin == doctest::Approx(best_seen));
}

TEST_CASE("reduced flux-spectrum round-trip recovers parameters") {
  DeviceParams truth;
  truth.transmon.omega_pl = 6.550;
  truth.transmon.phi_tr_offset = 0.162;
  truth.dqd.t_c = 0.0;

  const auto grid = linspace(-0.3, 0.3, 11);
  const auto obs = synthesize_flux_observations(truth, grid);
  REQUIRE(obs.size() >= 22);

  const std::vector<std::string> free_names{"omega_r_sq0", "beta"};
  FitProblem problem = make_flux_spectrum_problem(truth, free_names, obs);
  problem.start[0] *= 1.10;
  problem.start[1] *= 0.90;
  NelderMeadOptions nm;
  nm.max_iter = 600;
  const FitResult fit = fit_device(problem, nm);
  CHECK(fit.converged);
  CHECK(std::abs(fit.params[0] - 7.867) / 7.867 < 0.01);
  CHECK(std::abs(fit.params[1] - 0.1) / 0.1 < 0.01);
}

TEST_CASE("observation csv round-trip") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "hqed_obs_test.csv").string();
  std::vector<Observation> obs{{-0.25, 6.4901, 1.0}, {0.0, 7.5065, 0.5}};
  write_observations_csv(path, obs);
  const auto back = read_observations_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].bias == obs[0].bias);
  CHECK(back[0].freq_ghz == obs[0].freq_ghz);
  CHECK(back[1].weight == obs[1].weight);
  std::filesystem::remove(path);
}
