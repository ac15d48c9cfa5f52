#include "hqed/spectra.hpp"

#include "hqed/errors.hpp"

#include <Eigen/Eigenvalues>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <utility>

namespace hqed {

namespace {

struct PointData {
  SweepPoint point;
  Matrix vecs;  // eigenvectors of the reported transitions, one per column
};

// Diagonalize one Hamiltonian and pull out the lowest ground-state
// transitions with their photonic weights.
PointData spectrum_point_impl(const SystemHamiltonian& sys, int n_transitions) {
  PointData out;
  const Matrix& h = sys.h.m;
  if (sys.h.hermiticity_error() > 1e-10)
    throw numeric_error("sweep: Hamiltonian not Hermitian");

  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success)
    throw numeric_error("sweep: diagonalization failed");

  const int total = static_cast<int>(h.rows());
  const int k = std::min(n_transitions, total - 1);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const Matrix& vecs = es.eigenvectors();
  const Vector ground = vecs.col(0);

  Vector a_sq_ground = Vector::Zero(total);
  Vector b_50_ground = Vector::Zero(total);
  const SpaceLayout& layout = sys.h.layout;
  if (layout.has("Sq")) {
    const Matrix adag =
        embed(annihilation(layout.dims[layout.index_of("Sq")]), "Sq", layout)
            .m.adjoint();
    a_sq_ground = adag * ground;
  }
  if (layout.has("50")) {
    const Matrix bdag =
        embed(annihilation(layout.dims[layout.index_of("50")]), "50", layout)
            .m.adjoint();
    b_50_ground = bdag * ground;
  }

  out.point.transitions.resize(k);
  out.vecs.resize(total, k);
  for (int j = 0; j < k; ++j) {
    Transition t;
    t.freq = ev[j + 1] - ev[0];
    const Vector state = vecs.col(j + 1);
    t.w_sq = std::min(1.0, std::norm(state.dot(a_sq_ground)));
    t.w_50 = std::min(1.0, std::norm(state.dot(b_50_ground)));
    out.point.transitions[j] = t;
    out.vecs.col(j) = state;
  }
  return out;
}

PointData evaluate_point(const HamiltonianBuilder& builder, double x,
                         int n_transitions) {
  try {
    return spectrum_point_impl(builder(x), n_transitions);
  } catch (const std::exception& e) {
    PointData bad;
    bad.point.ok = false;
    bad.point.error = e.what();
    return bad;
  }
}

// Reorder each point's transitions to follow the previous point's
// eigenvectors (overlap > 0.5), falling back to frequency order.
void track_branches(std::vector<PointData>& data) {
  for (size_t i = 1; i < data.size(); ++i) {
    PointData& cur = data[i];
    const PointData& prev = data[i - 1];
    if (!cur.point.ok || !prev.point.ok) continue;
    const int k = static_cast<int>(cur.point.transitions.size());
    if (static_cast<int>(prev.point.transitions.size()) != k) continue;

    std::vector<int> slot_of(k, -1);
    std::vector<bool> slot_used(k, false);
    for (int j = 0; j < k; ++j) {
      int best = -1;
      double best_ov = 0.5;
      for (int s = 0; s < k; ++s) {
        if (slot_used[s]) continue;
        const double ov = std::norm(prev.vecs.col(s).dot(cur.vecs.col(j)));
        if (ov > best_ov) {
          best_ov = ov;
          best = s;
        }
      }
      if (best >= 0) {
        slot_of[j] = best;
        slot_used[best] = true;
      }
    }
    int next_free = 0;
    for (int j = 0; j < k; ++j) {
      if (slot_of[j] >= 0) continue;
      while (next_free < k && slot_used[next_free]) ++next_free;
      slot_of[j] = next_free;
      slot_used[next_free] = true;
    }

    std::vector<Transition> reordered(k);
    Matrix rvecs(cur.vecs.rows(), k);
    for (int j = 0; j < k; ++j) {
      reordered[slot_of[j]] = cur.point.transitions[j];
      rvecs.col(slot_of[j]) = cur.vecs.col(j);
    }
    cur.point.transitions = std::move(reordered);
    cur.vecs = std::move(rvecs);
  }
}

SweepResult collect(const std::string& axis_name,
                    std::span<const double> axis,
                    std::vector<PointData>&& data, bool track) {
  if (track) track_branches(data);
  SweepResult out;
  out.axis_name = axis_name;
  out.axis.assign(axis.begin(), axis.end());
  out.points.reserve(data.size());
  for (auto& d : data) out.points.push_back(std::move(d.point));
  return out;
}

}  // namespace

SweepResult sweep_spectrum_serial(const HamiltonianBuilder& builder,
                                  const std::string& axis_name,
                                  std::span<const double> axis,
                                  const SweepOptions& opts) {
  std::vector<PointData> data(axis.size());
  for (size_t i = 0; i < axis.size(); ++i)
    data[i] = evaluate_point(builder, axis[i], opts.n_transitions);
  return collect(axis_name, axis, std::move(data), opts.track_branches);
}

SweepResult sweep_spectrum(const HamiltonianBuilder& builder,
                           const std::string& axis_name,
                           std::span<const double> axis,
                           const SweepOptions& opts) {
  const int n = static_cast<int>(axis.size());
  std::vector<PointData> data(axis.size());
#ifdef _OPENMP
  const int nt = opts.threads > 0 ? opts.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (int i = 0; i < n; ++i)
    data[i] = evaluate_point(builder, axis[i], opts.n_transitions);
#else
  for (int i = 0; i < n; ++i)
    data[i] = evaluate_point(builder, axis[i], opts.n_transitions);
#endif
  return collect(axis_name, axis, std::move(data), opts.track_branches);
}

AvoidedCrossing find_avoided_crossing(const SweepResult& sweep, int branch_lo,
                                      int branch_hi) {
  std::vector<double> xv, gap;
  for (size_t i = 0; i < sweep.points.size(); ++i) {
    const SweepPoint& p = sweep.points[i];
    if (!p.ok) continue;
    if (branch_hi >= static_cast<int>(p.transitions.size()) || branch_lo < 0)
      throw config_error("find_avoided_crossing: branch index out of range");
    xv.push_back(sweep.axis[i]);
    gap.push_back(std::abs(p.transitions[branch_hi].freq -
                           p.transitions[branch_lo].freq));
  }
  if (xv.size() < 3)
    throw numeric_error("find_avoided_crossing: too few valid points");

  size_t m = 0;
  for (size_t i = 1; i < gap.size(); ++i)
    if (gap[i] < gap[m]) m = i;
  if (m == 0 || m + 1 == gap.size())
    throw numeric_error(
        "find_avoided_crossing: gap is monotone over the range");

  // Quadratic through (x, gap^2) around the minimum; gap^2 of an ideal
  // two-level crossing is exactly parabolic in the axis value.
  const double x0 = xv[m - 1], x1 = xv[m], x2 = xv[m + 1];
  const double y0 = gap[m - 1] * gap[m - 1];
  const double y1 = gap[m] * gap[m];
  const double y2 = gap[m + 1] * gap[m + 1];
  const double d0 = (y0 - y1) / (x0 - x1);
  const double d1 = (y1 - y2) / (x1 - x2);
  const double a = (d0 - d1) / (x0 - x2);

  AvoidedCrossing found;
  found.branch_lo = branch_lo;
  found.branch_hi = branch_hi;
  if (a <= 0.0) {
    found.location = x1;
    found.gap_mhz = gap[m] * 1e3;
    return found;
  }
  const double xs = 0.5 * (x0 + x1) - 0.5 * d0 / a;
  const double ys = y1 - a * (x1 - xs) * (x1 - xs);
  found.location = xs;
  found.gap_mhz = std::sqrt(std::max(0.0, ys)) * 1e3;
  return found;
}

std::vector<complexd> reflection_s11(const ReflectionSpec& spec,
                                     const SweepPoint& point,
                                     ProbedMode mode) {
  const ResonatorLine& line = mode == ProbedMode::Sq ? spec.sq : spec.r50;
  const double kext = line.kappa_ext * 1e-3;  // GHz
  const double ktot = (line.kappa_ext + line.kappa_int) * 1e-3;
  if (ktot <= 0.0) throw numeric_error("reflection_s11: kappa_tot must be > 0");

  std::vector<complexd> out(spec.probe_ghz.size());
  const complexd i(0.0, 1.0);
  for (size_t p = 0; p < spec.probe_ghz.size(); ++p) {
    const double wp = spec.probe_ghz[p];
    complexd s(1.0, 0.0);
    for (const Transition& t : point.transitions) {
      const double w = mode == ProbedMode::Sq ? t.w_sq : t.w_50;
      if (w == 0.0) continue;
      s -= kext * w / (i * (t.freq - wp) + 0.5 * ktot);
    }
    out[p] = s;
  }
  return out;
}

std::vector<double> multiplexed_response(std::span<const complexd> s11_sq,
                                         std::span<const complexd> s11_50,
                                         double phi) {
  if (s11_sq.size() != s11_50.size())
    throw config_error("multiplexed_response: probe grids differ in size");
  const complexd rot = std::exp(complexd(0.0, phi));
  std::vector<double> out(s11_sq.size());
  for (size_t k = 0; k < s11_sq.size(); ++k)
    out[k] = std::abs(s11_sq[k] + rot * s11_50[k]);
  return out;
}

SweepPoint spectrum_point(const SystemHamiltonian& sys, int n_transitions) {
  return spectrum_point_impl(sys, n_transitions).point;
}

RabiTrace vacuum_rabi_trace(const SystemHamiltonian& sys,
                            const ReflectionSpec& spec, ProbedMode mode,
                            int n_probe, double span_ghz) {
  SweepPoint point = spectrum_point(sys, 8);

  // Doublet = the two most photonic transitions of the probed mode.
  std::vector<int> order(point.transitions.size());
  for (size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto wa = mode == ProbedMode::Sq ? point.transitions[a].w_sq
                                           : point.transitions[a].w_50;
    const auto wb = mode == ProbedMode::Sq ? point.transitions[b].w_sq
                                           : point.transitions[b].w_50;
    return wa > wb;
  });
  if (order.size() < 2)
    throw numeric_error("vacuum_rabi_trace: fewer than two transitions");
  const double f1 = point.transitions[order[0]].freq;
  const double f2 = point.transitions[order[1]].freq;

  RabiTrace out;
  if (!spec.probe_ghz.empty()) {
    out.probe_ghz = spec.probe_ghz;
  } else {
    const ResonatorLine& line = mode == ProbedMode::Sq ? spec.sq : spec.r50;
    const double ktot = (line.kappa_ext + line.kappa_int) * 1e-3;
    const double lo = std::min(f1, f2), hi = std::max(f1, f2);
    double start = 0.0, width = 0.0;
    if (span_ghz > 0.0) {
      start = 0.5 * (lo + hi) - 0.5 * span_ghz;
      width = span_ghz;
    } else {
      const double margin = std::max(3.0 * ktot, 1.5 * (hi - lo));
      start = lo - margin;
      width = hi - lo + 2.0 * margin;
    }
    out.probe_ghz.resize(n_probe);
    for (int p = 0; p < n_probe; ++p)
      out.probe_ghz[p] = start + width * p / double(n_probe - 1);
  }

  ReflectionSpec local = spec;
  local.probe_ghz = out.probe_ghz;
  const std::vector<complexd> s11 = reflection_s11(local, point, mode);
  out.magnitude.resize(s11.size());
  for (size_t k = 0; k < s11.size(); ++k) out.magnitude[k] = std::abs(s11[k]);

  out.fit = fit_lorentzians(out.probe_ghz, out.magnitude, 2);
  out.splitting_mhz = std::abs(out.fit.centers[1] - out.fit.centers[0]) * 1e3;
  out.linewidth_mhz = 0.5 * (out.fit.fwhms[0] + out.fit.fwhms[1]) * 1e3;
  return out;
}

}  // namespace hqed
