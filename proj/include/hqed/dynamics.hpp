#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace hqed {

// Two-qubit (transmon x DQD) dispersive-exchange dynamics, worked in the
// frame rotating at the DQD frequency: only the detuning enters the
// generator. Time in ns, Hamiltonians in angular units (rad/ns).

struct LindbladRates {
  double t1_tr = 185.0;      // ns
  double t2star_tr = 127.0;  // ns
  double gamma2_dqd = 2.6;   // MHz (spectroscopic linewidth /2pi)
};

struct LindbladModel {
  std::function<Eigen::Matrix4cd(double)> h_of_t;  // rad/ns
  std::vector<Eigen::Matrix4cd> collapse;          // pre-scaled by sqrt(rate)
};

struct EvolveOptions {
  double step_ns = 0.05;
  double trace_tol = 1e-6;
  double negativity_tol = 1e-7;
};

// Fixed-step RK4 integration of
//   drho/dt = -i[H(t), rho] + sum_k (L rho L^dag - {L^dag L, rho}/2),
// sampled at t_grid (increasing). Trace drift beyond trace_tol or
// negativity beyond -negativity_tol throws numeric_error.
std::vector<Eigen::Matrix4cd> evolve(const LindbladModel& model,
                                     const Eigen::Matrix4cd& rho0,
                                     std::span<const double> t_grid,
                                     const EvolveOptions& opts = {});

// Square plateau convolved with a unit-area Gaussian of width sigma:
// s(t) = (erf(t/(sqrt2 sigma)) - erf((t - plateau)/(sqrt2 sigma)))/2.
struct PulseProtocol {
  double amplitude = 0.6;        // A/A0
  double plateau_ns = 100.0;
  double filter_sigma_ns = 3.0;
  double prep_offset_ns = 23.0;  // idle time between state prep and pulse
  double resonant_amplitude = 0.6;
  double slope_ghz = 0.216;      // d(transmon freq)/d(A/A0)
  double omega_dqd_ghz = 3.660;
};

// Filtered envelope s(t) in [0,1] on the given grid.
std::vector<double> shape_flux_pulse(const PulseProtocol& p,
                                     std::span<const double> t_ns);

// Linear amplitude map: transmon-DQD detuning at envelope value s, GHz.
double pulse_detuning(const PulseProtocol& p, double s);

// Exchange model at constant detuning (GHz); splitting at resonance is
// two_j. Collapse ops: transmon decay 1/T1, transmon pure dephasing
// 1/T2* - 1/(2 T1), DQD dephasing 2pi gamma2.
LindbladModel exchange_model(double two_j_mhz, double detuning_ghz,
                             const LindbladRates& rates);

// Time-dependent variant driven by the filtered flux pulse.
LindbladModel pulsed_exchange_model(double two_j_mhz, const PulseProtocol& p,
                                    const LindbladRates& rates);

// rho for (transmon excited) x (DQD ground).
Eigen::Matrix4cd prepared_state();

// P_e of the transmon, tracing out the DQD.
double transmon_population(const Eigen::Matrix4cd& rho);

struct ChevronResult {
  std::vector<double> amplitudes;       // A/A0 grid
  std::vector<double> plateaus_ns;      // interaction-length grid
  Eigen::MatrixXd population;           // rows: plateau, cols: amplitude
};

struct ChevronOptions {
  EvolveOptions evolve;
  int threads = 0;
};

// Prepared state, prep_offset idle, filtered pulse of each grid cell's
// amplitude and plateau, transmon population read out at pulse end.
ChevronResult run_chevron(double two_j_mhz, const PulseProtocol& base,
                          const LindbladRates& rates,
                          std::span<const double> amplitudes,
                          std::span<const double> plateaus_ns,
                          const ChevronOptions& opts = {});

// Serial reference for the parallel grid kernel.
ChevronResult run_chevron_serial(double two_j_mhz, const PulseProtocol& base,
                                 const LindbladRates& rates,
                                 std::span<const double> amplitudes,
                                 std::span<const double> plateaus_ns,
                                 const ChevronOptions& opts = {});

// Cavity-mediated decay kappa_tot g^2 / delta^2 (MHz in, MHz out);
// throws numeric_error at zero detuning.
double purcell_rate(double g_mhz, double kappa_tot_mhz, double delta_mhz);

}  // namespace hqed
