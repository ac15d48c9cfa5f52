#pragma once

#include "hqed/device.hpp"
#include "hqed/operators.hpp"

#include <Eigen/Dense>

namespace hqed {

// Exact charge-basis solution of the transmon island.
struct TransmonSolution {
  Eigen::VectorXd levels;    // lowest n_levels eigenfrequencies, GHz, ground-referenced
  Eigen::MatrixXd n_matrix;  // Cooper-pair-number matrix elements in the eigenbasis

  double anharmonicity() const {
    return (levels[2] - levels[1]) - (levels[1] - levels[0]);
  }
};

// Diagonalize 4 Ec (n - n_g)^2 - (Ej/2) sum |n><n+1| + h.c. on the charge
// basis n in [-cutoff, cutoff]. Eigenvector phases are fixed so that
// n_{i,i+1} > 0. Throws numeric_error when the retained levels press
// against the truncated band edge.
TransmonSolution solve_transmon(const TransmonParams& p, double e_j_ghz,
                                int charge_cutoff = 20);

// Memoized variant, safe for concurrent lookups during sweeps.
const TransmonSolution& solve_transmon_cached(const TransmonParams& p,
                                              double e_j_ghz,
                                              int charge_cutoff = 20);

// Josephson energy whose exact 0-1 transition equals the target, GHz.
double calibrate_ej(const TransmonParams& p, double target_w10_ghz,
                    int charge_cutoff = 20);

// DQD eigenbasis rotation: theta = atan2(2 t_c, delta); columns of
// eigenvectors are |+> and |-> expressed in the (R, L) position basis.
struct DqdRotation {
  double theta;
  Eigen::Matrix2d eigenvectors;
};
DqdRotation dqd_basis_rotation(double delta_mhz, double t_c_mhz);

// Cavity-bus exchange 2J = g1 g2 (1/|d_tr| + 1/|d_dqd|), MHz in, MHz out.
double dispersive_exchange(double g1_mhz, double g2_mhz, double delta_tr_mhz,
                           double delta_dqd_mhz);

// theta_m = atan2(2 g, |delta|)/2.
double rabi_mixing_angle(double g_mhz, double delta_mhz);

// Scalar inputs of one Hamiltonian assembly. Frequencies of the resonators
// and transmon in GHz, qubit quantities in MHz. Couplings are the effective
// 0-1 values at this bias; g_dqd_sq is quoted at the sweet spot (delta = 0)
// and rescaled by 2 t_c / omega_DQD internally.
struct OperatingPoint {
  double two_t_c = 0.0;    // MHz
  double delta = 0.0;      // MHz
  double omega_tr = 0.0;   // GHz, exact 0-1 transition target
  double e_j = 0.0;        // GHz; when > 0, used directly instead of omega_tr
  double omega_r_sq = 0.0; // GHz
  double omega_r_50 = 0.0; // GHz
  double g_tr_sq = 0.0;    // MHz
  double g_dqd_sq = 0.0;   // MHz, at delta = 0
  double g_tr_50 = 0.0;    // MHz
};

struct AssembleOptions {
  int n_tr = 4;
  int n_sq = 5;
  int n_50 = 3;
  int charge_cutoff = 20;
  double e_c = 243.0;  // MHz
  double n_g = 0.0;
  bool include_dqd = true;
};

struct SystemHamiltonian {
  OperatorMatrix h;           // Hermitian, full layout
  OperatingPoint point;       // snapshot with the effective g_dqd at this delta
  TransmonSolution transmon;  // levels and n-matrix actually used
};

SpaceLayout system_layout(const AssembleOptions& opts);

// Full system Hamiltonian: DQD qubit + multilevel transmon + two resonator
// modes, rotating-wave DQD-resonator coupling and full (a^dag + a) transmon
// couplings weighted by n_ij / n_01.
SystemHamiltonian assemble(const OperatingPoint& point,
                           const AssembleOptions& opts);

// Operating point evaluated from the flux-law device model at a bias.
OperatingPoint flux_point(const DeviceParams& dev, const FluxBias& bias);

}  // namespace hqed
