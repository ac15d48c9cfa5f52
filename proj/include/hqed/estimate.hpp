#pragma once

#include "hqed/device.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hqed {

struct LorentzianFit {
  std::vector<double> centers;  // same x units as the trace
  std::vector<double> fwhms;
  std::vector<double> depths;
  double baseline = 0.0;
  double residual = 0.0;        // RMS
  bool ill_conditioned = false; // peaks closer than half their width
};

// Fit n_peaks dips, model b - sum_k d_k / (1 + (2(x-c_k)/w_k)^2), by
// derivative-free least squares from multi-start initial guesses.
LorentzianFit fit_lorentzians(std::span<const double> x,
                              std::span<const double> y, int n_peaks);

// Local minima below a prominence threshold (fraction of the trace range),
// refined by 3-point quadratic interpolation. Empty result allowed.
std::vector<double> extract_dips(std::span<const double> x,
                                 std::span<const double> y,
                                 double prominence = 0.05);

struct NelderMeadOptions {
  int max_iter = 2000;
  double ftol = 1e-10;      // absolute spread of vertex values
  double xtol = 1e-7;       // relative spread of vertex coordinates
  double initial_step = 0.05;  // relative simplex size
  int restarts = 2;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double fmin = 0.0;
  int iterations = 0;
  double spread = 0.0;     // final vertex-value spread
  bool converged = false;
};

// Bounded Nelder-Mead simplex minimization (reflect/expand/contract/shrink,
// coordinates clamped to the box). Best vertex value is non-increasing.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper,
                             const NelderMeadOptions& opts = {});

struct Observation {
  double bias = 0.0;      // axis value (flux, detuning, ...)
  double freq_ghz = 0.0;  // extracted resonance frequency
  double weight = 1.0;
};

// Model: visible transition frequencies (GHz) at a bias for a parameter
// vector. Each observation contributes weight * (distance to the nearest
// visible frequency)^2.
using SpectrumModel =
    std::function<std::vector<double>(const Eigen::VectorXd&, double bias)>;

struct FitProblem {
  std::vector<Observation> observed;
  std::vector<std::string> free_names;
  Eigen::VectorXd start;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  SpectrumModel model;
};

struct FitResult {
  Eigen::VectorXd params;
  std::vector<std::string> names;
  std::vector<double> residuals;  // per observation, GHz
  double residual_rms = 0.0;
  double simplex_spread = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Weighted least-squares device fit. Requires at least 2x more
// observations than free parameters. A simplex collapse without meeting
// tolerance is reported through converged = false, best-so-far included.
// Bias points are evaluated in parallel; the residual accumulation order
// is fixed, so results do not depend on the thread count.
FitResult fit_device(const FitProblem& problem,
                     const NelderMeadOptions& opts = {}, int threads = 0);

// Flux-sweep spectrum fit of the coupled transmon + two-resonator system.
// free_names may contain: omega_pl, omega_r_sq0, beta, g0_tr_sq, g0_tr_50.
// Visible transitions are those with photonic weight above w_min.
FitProblem make_flux_spectrum_problem(const DeviceParams& base,
                                      const std::vector<std::string>& free_names,
                                      std::vector<Observation> observed,
                                      double w_min = 0.2);

// Synthetic observations from the same visibility rule, for round-trips.
std::vector<Observation> synthesize_flux_observations(
    const DeviceParams& truth, std::span<const double> phi_sq,
    double w_min = 0.2);

// CSV interchange: header "bias,freq_ghz,weight".
std::vector<Observation> read_observations_csv(const std::string& path);
void write_observations_csv(const std::string& path,
                            std::span<const Observation> obs);

}  // namespace hqed
