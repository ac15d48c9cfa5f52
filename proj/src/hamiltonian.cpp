#include "hqed/hamiltonian.hpp"

#include "hqed/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <tuple>

namespace hqed {

TransmonSolution solve_transmon(const TransmonParams& p, double e_j_ghz,
                                int charge_cutoff) {
  if (charge_cutoff < 10)
    throw config_error("solve_transmon: charge cutoff must be >= 10");
  if (p.n_levels < 2)
    throw config_error("solve_transmon: need at least 2 levels");
  if (e_j_ghz < 0.0)
    throw config_error("solve_transmon: negative Josephson energy");

  const int dim = 2 * charge_cutoff + 1;
  if (p.n_levels > dim)
    throw config_error("solve_transmon: more levels than basis states");

  const double ec = p.e_c * 1e-3;  // GHz
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const double n = double(k - charge_cutoff) - p.n_g;
    h(k, k) = 4.0 * ec * n * n;
    if (k + 1 < dim) {
      h(k, k + 1) = -0.5 * e_j_ghz;
      h(k + 1, k) = -0.5 * e_j_ghz;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success)
    throw numeric_error("solve_transmon: diagonalization failed");
  const Eigen::VectorXd& ev = es.eigenvalues();

  // Levels pressing against the truncated band edge mean the cutoff is
  // too small for the requested states.
  if (ev[p.n_levels - 1] - ev[0] > 0.99 * (ev[dim - 1] - ev[0]))
    throw numeric_error("solve_transmon: charge cutoff too small");

  Eigen::MatrixXd vecs = es.eigenvectors().leftCols(p.n_levels);
  Eigen::VectorXd nvals(dim);
  for (int k = 0; k < dim; ++k) nvals[k] = double(k - charge_cutoff);

  // Phase convention: n_{i,i+1} > 0.
  for (int i = 0; i + 1 < p.n_levels; ++i) {
    const double nii1 =
        vecs.col(i).dot(nvals.asDiagonal() * vecs.col(i + 1));
    if (nii1 < 0.0) vecs.col(i + 1) *= -1.0;
  }

  TransmonSolution sol;
  sol.levels = ev.head(p.n_levels).array() - ev[0];
  sol.n_matrix = vecs.transpose() * nvals.asDiagonal() * vecs;
  return sol;
}

namespace {

using TransmonKey = std::tuple<double, double, double, int, int>;

std::map<TransmonKey, TransmonSolution>& transmon_cache() {
  static std::map<TransmonKey, TransmonSolution> cache;
  return cache;
}

std::shared_mutex& transmon_cache_mutex() {
  static std::shared_mutex mtx;
  return mtx;
}

}  // namespace

const TransmonSolution& solve_transmon_cached(const TransmonParams& p,
                                              double e_j_ghz,
                                              int charge_cutoff) {
  const TransmonKey key{p.e_c, e_j_ghz, p.n_g, p.n_levels, charge_cutoff};
  {
    std::shared_lock lock(transmon_cache_mutex());
    auto it = transmon_cache().find(key);
    if (it != transmon_cache().end()) return it->second;
  }
  TransmonSolution sol = solve_transmon(p, e_j_ghz, charge_cutoff);
  std::unique_lock lock(transmon_cache_mutex());
  return transmon_cache().emplace(key, std::move(sol)).first->second;
}

double calibrate_ej(const TransmonParams& p, double target_w10_ghz,
                    int charge_cutoff) {
  if (target_w10_ghz <= 0.0)
    throw config_error("calibrate_ej: target transition must be positive");

  const double ec = p.e_c * 1e-3;
  auto w10 = [&](double ej) {
    return solve_transmon(p, ej, charge_cutoff).levels[1];
  };

  // Plasma-frequency estimate brackets the root; w10 grows with Ej.
  double lo = 0.5 * std::pow(target_w10_ghz + ec, 2) / (8.0 * ec);
  double hi = 2.0 * std::pow(target_w10_ghz + ec, 2) / (8.0 * ec);
  while (w10(lo) > target_w10_ghz && lo > 1e-9) lo *= 0.5;
  while (w10(hi) < target_w10_ghz && hi < 1e6) hi *= 2.0;
  if (w10(lo) > target_w10_ghz || w10(hi) < target_w10_ghz)
    throw numeric_error("calibrate_ej: could not bracket the target");

  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double w = w10(mid);
    if (std::abs(w - target_w10_ghz) < 1e-12) return mid;
    (w < target_w10_ghz ? lo : hi) = mid;
    if (hi - lo < 1e-12 * hi) break;
  }
  return 0.5 * (lo + hi);
}

DqdRotation dqd_basis_rotation(double delta_mhz, double t_c_mhz) {
  if (delta_mhz == 0.0 && t_c_mhz == 0.0)
    throw numeric_error("dqd_basis_rotation: angle undefined at t_c = delta = 0");
  DqdRotation r;
  r.theta = std::atan2(2.0 * t_c_mhz, delta_mhz);
  const double c = std::cos(0.5 * r.theta);
  const double s = std::sin(0.5 * r.theta);
  // Columns: |+> = (c, s), |-> = (-s, c) in the (R, L) basis; these
  // diagonalize (delta/2) tau_z + t_c tau_x with eigenvalues +-omega/2.
  r.eigenvectors << c, -s, s, c;
  return r;
}

double dispersive_exchange(double g1_mhz, double g2_mhz, double delta_tr_mhz,
                           double delta_dqd_mhz) {
  if (delta_tr_mhz == 0.0 || delta_dqd_mhz == 0.0)
    throw numeric_error("dispersive_exchange: zero detuning");
  return g1_mhz * g2_mhz *
         (1.0 / std::abs(delta_tr_mhz) + 1.0 / std::abs(delta_dqd_mhz));
}

double rabi_mixing_angle(double g_mhz, double delta_mhz) {
  return 0.5 * std::atan2(2.0 * g_mhz, std::abs(delta_mhz));
}

SpaceLayout system_layout(const AssembleOptions& opts) {
  SpaceLayout layout;
  if (opts.include_dqd) {
    layout.dims.push_back(2);
    layout.labels.push_back("DQD");
  }
  layout.dims.push_back(opts.n_tr);
  layout.labels.push_back("tr");
  layout.dims.push_back(opts.n_sq);
  layout.labels.push_back("Sq");
  layout.dims.push_back(opts.n_50);
  layout.labels.push_back("50");
  layout.validate();
  return layout;
}

namespace {

// Embedded operator structure of one layout, built once and reused by
// every assembly (sweeps call assemble thousands of times).
struct LayoutOps {
  SpaceLayout layout;
  Matrix num_sq, num_50;        // photon number operators
  Matrix dqd_proj_e;            // |e><e| of the charge qubit
  Matrix dqd_swap;              // sigma^- a^dag + sigma^+ a
  std::vector<Matrix> tr_diag;  // |i><i| per transmon level
  std::vector<Matrix> pair_sq;  // (|i><j| + |j><i|)(a + a^dag), i < j;
  std::vector<Matrix> pair_50;  // diagonal entries hold |i><i|(a + a^dag)
};

int pair_index(int i, int j, int n) { return i * n + j; }

LayoutOps build_layout_ops(const AssembleOptions& opts) {
  LayoutOps ops;
  ops.layout = system_layout(opts);
  const SpaceLayout& layout = ops.layout;

  const Matrix a_sq = embed(annihilation(opts.n_sq), "Sq", layout).m;
  const Matrix b_50 = embed(annihilation(opts.n_50), "50", layout).m;
  ops.num_sq = a_sq.adjoint() * a_sq;
  ops.num_50 = b_50.adjoint() * b_50;

  const Matrix apa = a_sq + a_sq.adjoint();
  const Matrix bpb = b_50 + b_50.adjoint();
  ops.tr_diag.resize(opts.n_tr);
  ops.pair_sq.resize(opts.n_tr * opts.n_tr);
  ops.pair_50.resize(opts.n_tr * opts.n_tr);
  for (int i = 0; i < opts.n_tr; ++i) {
    for (int j = i; j < opts.n_tr; ++j) {
      Matrix unit = Matrix::Zero(opts.n_tr, opts.n_tr);
      unit(i, j) = 1.0;
      if (j > i) unit(j, i) = 1.0;
      const Matrix lifted =
          embed({single_factor(opts.n_tr, "tr"), unit}, "tr", layout).m;
      if (j == i) ops.tr_diag[i] = lifted;
      ops.pair_sq[pair_index(i, j, opts.n_tr)] = lifted * apa;
      ops.pair_50[pair_index(i, j, opts.n_tr)] = lifted * bpb;
    }
  }

  if (opts.include_dqd) {
    ops.dqd_proj_e = embed(pauli(Pauli::Plus), "DQD", layout).m *
                     embed(pauli(Pauli::Minus), "DQD", layout).m;
    const Matrix term =
        embed(pauli(Pauli::Minus), "DQD", layout).m * a_sq.adjoint();
    ops.dqd_swap = term + term.adjoint();
  }
  return ops;
}

const LayoutOps& layout_ops(const AssembleOptions& opts) {
  using Key = std::tuple<bool, int, int, int>;
  static std::map<Key, LayoutOps> cache;
  static std::shared_mutex mtx;
  const Key key{opts.include_dqd, opts.n_tr, opts.n_sq, opts.n_50};
  {
    std::shared_lock lock(mtx);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  LayoutOps ops = build_layout_ops(opts);
  std::unique_lock lock(mtx);
  return cache.emplace(key, std::move(ops)).first->second;
}

}  // namespace

SystemHamiltonian assemble(const OperatingPoint& point,
                           const AssembleOptions& opts) {
  TransmonParams tp;
  tp.e_c = opts.e_c;
  tp.n_g = opts.n_g;
  tp.n_levels = opts.n_tr;
  const double ej = point.e_j > 0.0
                        ? point.e_j
                        : calibrate_ej(tp, point.omega_tr, opts.charge_cutoff);
  const TransmonSolution& tsol =
      solve_transmon_cached(tp, ej, opts.charge_cutoff);

  const LayoutOps& ops = layout_ops(opts);
  const int total = ops.layout.total_dim();

  Matrix h = Matrix::Zero(total, total);
  h += point.omega_r_sq * ops.num_sq;
  h += point.omega_r_50 * ops.num_50;
  for (int i = 1; i < opts.n_tr; ++i) h += tsol.levels[i] * ops.tr_diag[i];

  // Transmon-resonator couplings, charge matrix elements referenced to the
  // 0-1 element so the configured g is the effective 0-1 coupling.
  const double n01 = tsol.n_matrix(0, 1);
  if ((point.g_tr_sq != 0.0 || point.g_tr_50 != 0.0) &&
      std::abs(n01) < 1e-12)
    throw numeric_error("assemble: vanishing 0-1 charge matrix element");
  if (point.g_tr_sq != 0.0 || point.g_tr_50 != 0.0) {
    const double g_sq = point.g_tr_sq * 1e-3;
    const double g_50 = point.g_tr_50 * 1e-3;
    for (int i = 0; i < opts.n_tr; ++i) {
      for (int j = i; j < opts.n_tr; ++j) {
        const double c = tsol.n_matrix(i, j) / n01;
        if (c == 0.0) continue;
        const int k = pair_index(i, j, opts.n_tr);
        if (g_sq != 0.0) h += (g_sq * c) * ops.pair_sq[k];
        if (g_50 != 0.0) h += (g_50 * c) * ops.pair_50[k];
      }
    }
  }

  OperatingPoint snapshot = point;
  snapshot.e_j = ej;
  snapshot.omega_tr = tsol.levels[1];

  // DQD qubit and its rotating-wave resonator coupling. The qubit term is
  // written as omega |e><e| = (omega/2)(sigma_z + 1) so the bare ground
  // configuration sits at zero energy like every other subsystem.
  if (opts.include_dqd) {
    DqdParams d{0.5 * point.two_t_c, point.delta, 0.0};
    const double w_dqd = dqd_frequency(d) * 1e-3;  // GHz
    h += w_dqd * ops.dqd_proj_e;
    double g_eff = 0.0;
    if (point.g_dqd_sq != 0.0) {
      if (w_dqd == 0.0)
        throw numeric_error("assemble: omega_DQD = 0 with finite coupling");
      g_eff = point.g_dqd_sq * (point.two_t_c * 1e-3 / w_dqd);
      h += (g_eff * 1e-3) * ops.dqd_swap;
    }
    snapshot.g_dqd_sq = g_eff;
  }

  return SystemHamiltonian{{ops.layout, std::move(h)}, snapshot, tsol};
}

OperatingPoint flux_point(const DeviceParams& dev, const FluxBias& bias) {
  OperatingPoint pt;
  pt.two_t_c = 2.0 * dev.dqd.t_c;
  pt.delta = dev.dqd.delta;
  pt.e_j = transmon_ej(dev.transmon, bias);
  pt.omega_tr = transmon_frequency(dev.transmon, bias);
  pt.omega_r_sq = squid_array_frequency(dev.squid, bias);
  pt.omega_r_50 = dev.coupling.omega_r50;
  pt.g_tr_sq = coupling_tr_sq(dev.coupling, dev.squid, dev.transmon, bias);
  pt.g_tr_50 = coupling_tr_50(dev.coupling, dev.transmon, bias);
  if (dev.dqd.t_c > 0.0) {
    DqdParams sweet = dev.dqd;
    sweet.delta = 0.0;
    pt.g_dqd_sq = coupling_dqd_sq(dev.coupling, dev.squid, sweet, bias);
  }
  return pt;
}

}  // namespace hqed
