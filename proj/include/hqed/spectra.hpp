#pragma once

#include "hqed/estimate.hpp"
#include "hqed/hamiltonian.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hqed {

// One ground-state transition: frequency in GHz plus the photonic weight
// |<psi_k| a^dag |ground>|^2 for each resonator mode.
struct Transition {
  double freq = 0.0;
  double w_sq = 0.0;
  double w_50 = 0.0;
};

struct SweepPoint {
  std::vector<Transition> transitions;
  bool ok = true;
  std::string error;
};

struct SweepResult {
  std::string axis_name;
  std::vector<double> axis;
  std::vector<SweepPoint> points;
};

using HamiltonianBuilder = std::function<SystemHamiltonian(double)>;

struct SweepOptions {
  int n_transitions = 6;
  int threads = 0;            // 0 = runtime default
  bool track_branches = true; // follow eigenvector overlap across points
};

// Diagonalize the builder's Hamiltonian at every axis value and emit the
// lowest ground-state transitions with their photonic weights. Points that
// fail to build or diagonalize are recorded and the sweep continues.
SweepResult sweep_spectrum(const HamiltonianBuilder& builder,
                           const std::string& axis_name,
                           std::span<const double> axis,
                           const SweepOptions& opts = {});

// Single-threaded reference implementation; kept as the ground truth the
// parallel kernel is tested against.
SweepResult sweep_spectrum_serial(const HamiltonianBuilder& builder,
                                  const std::string& axis_name,
                                  std::span<const double> axis,
                                  const SweepOptions& opts = {});

// Transitions and weights of a single already-assembled Hamiltonian.
SweepPoint spectrum_point(const SystemHamiltonian& sys, int n_transitions);

struct AvoidedCrossing {
  double location = 0.0;  // axis value at minimal gap
  double gap_mhz = 0.0;
  int branch_lo = 0;
  int branch_hi = 1;
};

// Minimal vertical gap between two branches, refined by local quadratic
// interpolation of gap^2. Throws numeric_error when the gap is monotone
// over the range.
AvoidedCrossing find_avoided_crossing(const SweepResult& sweep, int branch_lo,
                                      int branch_hi);

struct ResonatorLine {
  double kappa_ext = 0.0;  // MHz
  double kappa_int = 0.0;  // MHz
};

enum class ProbedMode { Sq, R50 };

struct ReflectionSpec {
  std::vector<double> probe_ghz;  // strictly increasing
  ResonatorLine sq;
  ResonatorLine r50;
  double multiplex_phase = 0.0;   // radians
};

// One-port linear-response reflection: S11(w) = 1 - sum_k kext w_k /
// (i(w_k - w) + ktot/2) over the transitions visible in the probed mode.
std::vector<complexd> reflection_s11(const ReflectionSpec& spec,
                                     const SweepPoint& point, ProbedMode mode);

// Pointwise |S_sq + e^{i phi} S_50| on a shared probe grid.
std::vector<double> multiplexed_response(std::span<const complexd> s11_sq,
                                         std::span<const complexd> s11_50,
                                         double phi);

struct RabiTrace {
  std::vector<double> probe_ghz;
  std::vector<double> magnitude;
  LorentzianFit fit;
  double splitting_mhz = 0.0;
  double linewidth_mhz = 0.0;  // mean fitted FWHM
};

// |S11| trace of a resonant qubit-resonator doublet plus a two-Lorentzian
// fit of the dips. The probe grid defaults to the doublet span plus a
// margin; span_ghz > 0 fixes the window width around the doublet center.
RabiTrace vacuum_rabi_trace(const SystemHamiltonian& sys,
                            const ReflectionSpec& spec, ProbedMode mode,
                            int n_probe = 2001, double span_ghz = 0.0);

}  // namespace hqed
