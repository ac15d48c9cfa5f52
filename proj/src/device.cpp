#include "hqed/device.hpp"

#include "hqed/errors.hpp"

#include <cmath>

namespace hqed {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
// |cos| below this is treated as the degenerate half-flux-quantum limit.
constexpr double kCosFloor = 1e-12;
}  // namespace

SquidArrayParams squid_preset(const std::string& name) {
  SquidArrayParams p;
  if (name == "main") {
    p.kappa_ext = 3.0;
    p.kappa_int = 5.0;
  } else if (name == "undercoupled") {
    p.kappa_ext = 4.0;
    p.kappa_int = 8.0;
  } else {
    throw config_error("unknown squid preset '" + name + "'");
  }
  return p;
}

double total_flux_sq(const SquidArrayParams& p, const FluxBias& b) {
  return kTwoPi * (p.gamma * b.phi_sq + p.phi_c);
}

double total_flux_tr(const TransmonParams& p, const FluxBias& b) {
  return kTwoPi * (p.alpha * b.phi_sq + b.phi_tr);
}

double squid_array_frequency(const SquidArrayParams& p, const FluxBias& b) {
  const double c = std::abs(std::cos(total_flux_sq(p, b)));
  if (c < kCosFloor) return 0.0;
  return p.omega0 / std::sqrt(p.beta + 1.0 / c);
}

double transmon_plasma_frequency(const TransmonParams& p) {
  if (p.omega_pl > 0.0) return p.omega_pl;
  return std::sqrt(8.0 * (p.e_c * 1e-3) * p.e_j0);
}

double transmon_ej(const TransmonParams& p, const FluxBias& b) {
  const double wpl = transmon_plasma_frequency(p);
  const double ej0 = wpl * wpl / (8.0 * (p.e_c * 1e-3));
  return ej0 * std::abs(std::cos(total_flux_tr(p, b)));
}

double transmon_frequency(const TransmonParams& p, const FluxBias& b) {
  const double c = std::abs(std::cos(total_flux_tr(p, b)));
  return transmon_plasma_frequency(p) * std::sqrt(c) - p.e_c * 1e-3;
}

double dqd_frequency(const DqdParams& p) {
  return std::sqrt(4.0 * p.t_c * p.t_c + p.delta * p.delta);
}

namespace {
// (beta + 1/|cos|)^(1/4) shared by the array-side coupling laws.
double squid_flux_factor(const SquidArrayParams& sq, const FluxBias& b) {
  const double c = std::abs(std::cos(total_flux_sq(sq, b)));
  if (c < kCosFloor) return 0.0;  // caller sees coupling -> 0
  return std::pow(sq.beta + 1.0 / c, 0.25);
}
}  // namespace

double coupling_tr_sq(const CouplingParams& c, const SquidArrayParams& sq,
                      const TransmonParams& tr, const FluxBias& b) {
  const double ctr = std::abs(std::cos(total_flux_tr(tr, b)));
  const double denom = squid_flux_factor(sq, b);
  if (denom == 0.0) return 0.0;
  return c.g0_tr_sq * std::pow(ctr, 0.25) / denom;
}

double coupling_tr_50(const CouplingParams& c, const TransmonParams& tr,
                      const FluxBias& b) {
  const double ctr = std::abs(std::cos(total_flux_tr(tr, b)));
  return c.g0_tr_50 * std::pow(ctr, 0.25);
}

double coupling_dqd_sq(const CouplingParams& c, const SquidArrayParams& sq,
                       const DqdParams& d, const FluxBias& b) {
  const double w = dqd_frequency(d);
  if (w == 0.0)
    throw numeric_error("coupling_dqd_sq: omega_DQD = 0, mixing undefined");
  const double denom = squid_flux_factor(sq, b);
  if (denom == 0.0) return 0.0;
  return c.g0_dqd_sq / denom * (2.0 * d.t_c / w);
}

double squid_impedance(const SquidArrayParams& p, const FluxBias& b) {
  const double c = std::abs(std::cos(total_flux_sq(p, b)));
  if (c < kCosFloor) return INFINITY;
  return std::sqrt((p.beta + 1.0 / c) / (p.beta + 1.0));
}

}  // namespace hqed
