#include "hqed/dynamics.hpp"

#include "hqed/errors.hpp"
#include "hqed/operators.hpp"

#include <Eigen/Eigenvalues>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>

namespace hqed {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct PreparedCollapse {
  Eigen::Matrix4cd l;
  Eigen::Matrix4cd ldag;
  Eigen::Matrix4cd ldl_half;  // L^dag L / 2
};

Eigen::Matrix4cd rhs(const LindbladModel& model,
                     const std::vector<PreparedCollapse>& ops, double t,
                     const Eigen::Matrix4cd& rho) {
  const complexd i(0.0, 1.0);
  const Eigen::Matrix4cd h = model.h_of_t(t);
  Eigen::Matrix4cd out = -i * (h * rho - rho * h);
  for (const PreparedCollapse& c : ops) {
    out += c.l * rho * c.ldag - c.ldl_half * rho - rho * c.ldl_half;
  }
  return out;
}

void check_state(const Eigen::Matrix4cd& rho, const EvolveOptions& opts,
                 double t) {
  const double tr_err = std::abs(rho.trace() - complexd(1.0, 0.0));
  if (tr_err > opts.trace_tol)
    throw numeric_error("evolve: trace drift " + std::to_string(tr_err) +
                        " at t = " + std::to_string(t) +
                        " ns; reduce the step size");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho);
  if (es.eigenvalues().minCoeff() < -opts.negativity_tol)
    throw numeric_error("evolve: density matrix negativity at t = " +
                        std::to_string(t) + " ns");
}

// Composite index = 2 * transmon + dqd, each factor ordered (e, g).
Eigen::Matrix4cd lift_tr(const Matrix& op) {
  return kron(op, Matrix::Identity(2, 2));
}
Eigen::Matrix4cd lift_dqd(const Matrix& op) {
  return kron(Matrix::Identity(2, 2), op);
}

}  // namespace

std::vector<Eigen::Matrix4cd> evolve(const LindbladModel& model,
                                     const Eigen::Matrix4cd& rho0,
                                     std::span<const double> t_grid,
                                     const EvolveOptions& opts) {
  if (t_grid.size() < 1) throw config_error("evolve: empty time grid");
  for (size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw config_error("evolve: time grid must be increasing");
  if (opts.step_ns <= 0.0) throw config_error("evolve: step must be > 0");
  if ((rho0 - rho0.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw config_error("evolve: initial state not Hermitian");
  if (std::abs(rho0.trace() - complexd(1.0, 0.0)) > 1e-9)
    throw config_error("evolve: initial state not normalized");
  {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho0);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw config_error("evolve: initial state not positive semidefinite");
  }

  std::vector<PreparedCollapse> ops;
  ops.reserve(model.collapse.size());
  for (const Eigen::Matrix4cd& l : model.collapse) {
    PreparedCollapse c;
    c.l = l;
    c.ldag = l.adjoint();
    c.ldl_half = 0.5 * c.ldag * l;
    ops.push_back(c);
  }

  std::vector<Eigen::Matrix4cd> traj;
  traj.reserve(t_grid.size());
  Eigen::Matrix4cd rho = rho0;
  traj.push_back(rho);
  check_state(rho, opts, t_grid[0]);

  for (size_t seg = 1; seg < t_grid.size(); ++seg) {
    const double t0 = t_grid[seg - 1];
    const double t1 = t_grid[seg];
    const int n_sub = std::max(1, int(std::ceil((t1 - t0) / opts.step_ns)));
    const double h = (t1 - t0) / double(n_sub);
    for (int s = 0; s < n_sub; ++s) {
      const double t = t0 + s * h;
      const Eigen::Matrix4cd k1 = rhs(model, ops, t, rho);
      const Eigen::Matrix4cd k2 =
          rhs(model, ops, t + 0.5 * h, rho + 0.5 * h * k1);
      const Eigen::Matrix4cd k3 =
          rhs(model, ops, t + 0.5 * h, rho + 0.5 * h * k2);
      const Eigen::Matrix4cd k4 = rhs(model, ops, t + h, rho + h * k3);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    check_state(rho, opts, t1);
    traj.push_back(rho);
  }
  return traj;
}

std::vector<double> shape_flux_pulse(const PulseProtocol& p,
                                     std::span<const double> t_ns) {
  if (p.filter_sigma_ns <= 0.0)
    throw config_error("shape_flux_pulse: filter sigma must be > 0");
  const double s2 = std::sqrt(2.0) * p.filter_sigma_ns;
  std::vector<double> s(t_ns.size());
  for (size_t i = 0; i < t_ns.size(); ++i) {
    s[i] = 0.5 * (std::erf(t_ns[i] / s2) -
                  std::erf((t_ns[i] - p.plateau_ns) / s2));
  }
  return s;
}

double pulse_detuning(const PulseProtocol& p, double s) {
  return (p.amplitude * s - p.resonant_amplitude) * p.slope_ghz;
}

namespace {

std::vector<Eigen::Matrix4cd> collapse_ops(const LindbladRates& rates) {
  if (rates.t1_tr <= 0.0 || rates.t2star_tr <= 0.0)
    throw config_error("collapse_ops: T1 and T2* must be > 0");
  const double gamma1 = 1.0 / rates.t1_tr;
  const double gamma_phi = 1.0 / rates.t2star_tr - 0.5 * gamma1;
  if (gamma_phi < -1e-12)
    throw config_error("collapse_ops: T2* exceeds 2 T1");
  const double gamma2_dqd = kTwoPi * rates.gamma2_dqd * 1e-3;  // 1/ns

  std::vector<Eigen::Matrix4cd> ops;
  ops.push_back(std::sqrt(gamma1) * lift_tr(pauli(Pauli::Minus).m));
  if (gamma_phi > 0.0)
    ops.push_back(std::sqrt(0.5 * gamma_phi) * lift_tr(pauli(Pauli::Z).m));
  if (gamma2_dqd > 0.0)
    ops.push_back(std::sqrt(0.5 * gamma2_dqd) * lift_dqd(pauli(Pauli::Z).m));
  return ops;
}

Eigen::Matrix4cd exchange_hamiltonian(double j_ghz, double detuning_ghz) {
  const Eigen::Matrix4cd swap =
      lift_tr(pauli(Pauli::Plus).m) * lift_dqd(pauli(Pauli::Minus).m) +
      lift_tr(pauli(Pauli::Minus).m) * lift_dqd(pauli(Pauli::Plus).m);
  return kTwoPi *
         (0.5 * detuning_ghz * lift_tr(pauli(Pauli::Z).m) + j_ghz * swap);
}

}  // namespace

LindbladModel exchange_model(double two_j_mhz, double detuning_ghz,
                             const LindbladRates& rates) {
  const double j_ghz = 0.5 * two_j_mhz * 1e-3;
  LindbladModel model;
  const Eigen::Matrix4cd h = exchange_hamiltonian(j_ghz, detuning_ghz);
  model.h_of_t = [h](double) { return h; };
  model.collapse = collapse_ops(rates);
  return model;
}

LindbladModel pulsed_exchange_model(double two_j_mhz, const PulseProtocol& p,
                                    const LindbladRates& rates) {
  if (p.filter_sigma_ns <= 0.0)
    throw config_error("pulsed_exchange_model: filter sigma must be > 0");
  const double j_ghz = 0.5 * two_j_mhz * 1e-3;
  LindbladModel model;
  model.h_of_t = [j_ghz, p](double t) {
    const double s2 = std::sqrt(2.0) * p.filter_sigma_ns;
    const double s = 0.5 * (std::erf(t / s2) -
                            std::erf((t - p.plateau_ns) / s2));
    return exchange_hamiltonian(j_ghz, pulse_detuning(p, s));
  };
  model.collapse = collapse_ops(rates);
  return model;
}

Eigen::Matrix4cd prepared_state() {
  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
  rho(1, 1) = 1.0;  // (transmon e) x (DQD g)
  return rho;
}

double transmon_population(const Eigen::Matrix4cd& rho) {
  return std::real(rho(0, 0) + rho(1, 1));
}

namespace {

double chevron_cell(double two_j_mhz, const PulseProtocol& proto,
                    const LindbladRates& rates, const EvolveOptions& evolve_opts) {
  LindbladModel model = pulsed_exchange_model(two_j_mhz, proto, rates);
  const double t_start = -proto.prep_offset_ns;
  const double t_end = proto.plateau_ns + 4.0 * proto.filter_sigma_ns;
  const double grid[] = {t_start, t_end};
  const auto traj = evolve(model, prepared_state(), grid, evolve_opts);
  return transmon_population(traj.back());
}

}  // namespace

ChevronResult run_chevron_serial(double two_j_mhz, const PulseProtocol& base,
                                 const LindbladRates& rates,
                                 std::span<const double> amplitudes,
                                 std::span<const double> plateaus_ns,
                                 const ChevronOptions& opts) {
  ChevronResult out;
  out.amplitudes.assign(amplitudes.begin(), amplitudes.end());
  out.plateaus_ns.assign(plateaus_ns.begin(), plateaus_ns.end());
  out.population.resize(plateaus_ns.size(), amplitudes.size());
  for (size_t it = 0; it < plateaus_ns.size(); ++it) {
    for (size_t ia = 0; ia < amplitudes.size(); ++ia) {
      PulseProtocol proto = base;
      proto.amplitude = amplitudes[ia];
      proto.plateau_ns = plateaus_ns[it];
      out.population(it, ia) = chevron_cell(two_j_mhz, proto, rates,
                                            opts.evolve);
    }
  }
  return out;
}

ChevronResult run_chevron(double two_j_mhz, const PulseProtocol& base,
                          const LindbladRates& rates,
                          std::span<const double> amplitudes,
                          std::span<const double> plateaus_ns,
                          const ChevronOptions& opts) {
  ChevronResult out;
  out.amplitudes.assign(amplitudes.begin(), amplitudes.end());
  out.plateaus_ns.assign(plateaus_ns.begin(), plateaus_ns.end());
  out.population.resize(plateaus_ns.size(), amplitudes.size());
  const int n_cells =
      static_cast<int>(plateaus_ns.size() * amplitudes.size());
  std::string first_error;
#ifdef _OPENMP
  const int nt = opts.threads > 0 ? opts.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
  for (int cell = 0; cell < n_cells; ++cell) {
    const size_t it = cell / amplitudes.size();
    const size_t ia = cell % amplitudes.size();
    PulseProtocol proto = base;
    proto.amplitude = amplitudes[ia];
    proto.plateau_ns = plateaus_ns[it];
    try {
      out.population(it, ia) =
          chevron_cell(two_j_mhz, proto, rates, opts.evolve);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!first_error.empty())
    throw numeric_error("run_chevron: " + first_error);
  return out;
}

double purcell_rate(double g_mhz, double kappa_tot_mhz, double delta_mhz) {
  if (delta_mhz == 0.0)
    throw numeric_error("purcell_rate: zero detuning");
  const double r = g_mhz / delta_mhz;
  return kappa_tot_mhz * r * r;
}

}  // namespace hqed
