#pragma once

#include <string>

namespace hqed {

// Frequencies are plain /2pi values. Resonator and transmon scales are in
// GHz, qubit splittings and couplings in MHz, flux in units of the flux
// quantum. Conversions happen at the point of use.

// External flux pair, both in Phi_0 units.
struct FluxBias {
  double phi_sq = 0.0;
  double phi_tr = 0.0;
};

struct SquidArrayParams {
  double omega0 = 7.867;    // zero-flux resonance, GHz
  double beta = 0.1;        // series-inductance fraction
  double gamma = 0.43;      // flux lever arm
  double phi_c = 0.0072;    // flux offset, Phi_0 units
  int n_sq = 35;            // junction pairs in the array
  int n_sj = 34;            // stray single junctions
  double kappa_ext = 4.0;   // MHz
  double kappa_int = 8.0;   // MHz
};

struct TransmonParams {
  double e_c = 243.0;        // charging energy/h, MHz
  double e_j0 = 30.0;        // zero-flux Josephson energy/h, GHz
  double omega_pl = 0.0;     // fitted plasma frequency, GHz; 0 = sqrt(8 Ec Ej0)
  double alpha = 4.41;       // SQUID-loop area ratio (array flux crosstalk)
  double phi_tr_offset = 0.0;  // fixed transmon flux bias, Phi_0 units
  double n_g = 0.0;          // offset charge
  int n_levels = 4;
};

struct DqdParams {
  double t_c = 0.0;     // tunnel coupling/h, MHz
  double delta = 0.0;   // detuning/h, MHz
  double gamma2 = 2.6;  // dephasing linewidth/2pi, MHz
};

struct CouplingParams {
  double g0_tr_sq = 230.0;   // MHz
  double g0_tr_50 = 120.0;   // MHz
  double g0_dqd_sq = 45.8;   // MHz
  double omega_r50 = 6.490;  // GHz
};

struct DeviceParams {
  SquidArrayParams squid;
  TransmonParams transmon;
  DqdParams dqd;
  CouplingParams coupling;
  double kappa50_ext = 4.0;   // MHz
  double kappa50_int = 8.0;   // MHz
  double t1_tr = 185.0;       // ns
  double t2star_tr = 127.0;   // ns
};

// Named linewidth presets for the array resonator: the two reported
// (kappa_ext + kappa_int) configurations.
SquidArrayParams squid_preset(const std::string& name);

// Composite flux phases, in radians (arguments of the cos terms).
double total_flux_sq(const SquidArrayParams& p, const FluxBias& b);
double total_flux_tr(const TransmonParams& p, const FluxBias& b);

// omega0 / sqrt(beta + 1/|cos|); tends to 0 at half flux quantum.
double squid_array_frequency(const SquidArrayParams& p, const FluxBias& b);

// Plasma-frequency approximation of the 0-1 transition, GHz.
// Uses the fitted omega_pl when set, sqrt(8 Ec Ej0) otherwise. Goes to
// -E_c at half flux quantum (model breakdown, returned as-is).
double transmon_frequency(const TransmonParams& p, const FluxBias& b);

double transmon_plasma_frequency(const TransmonParams& p);  // GHz

// Flux-dependent Josephson energy Ej0 |cos|, GHz. Derives Ej0 from
// omega_pl when a fitted value is set.
double transmon_ej(const TransmonParams& p, const FluxBias& b);

// sqrt(4 t_c^2 + delta^2), MHz.
double dqd_frequency(const DqdParams& p);

double coupling_tr_sq(const CouplingParams& c, const SquidArrayParams& sq,
                      const TransmonParams& tr, const FluxBias& b);
double coupling_tr_50(const CouplingParams& c, const TransmonParams& tr,
                      const FluxBias& b);
// Includes the 2 t_c / omega_DQD mixing-angle renormalization; throws
// numeric_error when omega_DQD = 0.
double coupling_dqd_sq(const CouplingParams& c, const SquidArrayParams& sq,
                       const DqdParams& d, const FluxBias& b);

// Z(Phi)/Z(0) = sqrt((beta + 1/|cos|)/(beta + 1)).
double squid_impedance(const SquidArrayParams& p, const FluxBias& b);

}  // namespace hqed
