#include "hqed/estimate.hpp"

#include "hqed/csv.hpp"
#include "hqed/errors.hpp"
#include "hqed/hamiltonian.hpp"
#include "hqed/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hqed {

namespace {

double clamp_to(double v, double lo, double hi) {
  return std::min(hi, std::max(lo, v));
}

Eigen::VectorXd clamp_box(Eigen::VectorXd x, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x[i] = clamp_to(x[i], lo[i], hi[i]);
  return x;
}

struct Simplex {
  std::vector<Eigen::VectorXd> v;
  std::vector<double> f;
};

void sort_simplex(Simplex& s) {
  std::vector<int> idx(s.v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return s.f[a] < s.f[b]; });
  Simplex sorted;
  for (int i : idx) {
    sorted.v.push_back(s.v[i]);
    sorted.f.push_back(s.f[i]);
  }
  s = std::move(sorted);
}

NelderMeadResult nelder_mead_once(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& x0, const Eigen::VectorXd& lo,
    const Eigen::VectorXd& hi, const NelderMeadOptions& opts, int max_iter) {
  const int n = static_cast<int>(x0.size());

  Simplex s;
  s.v.push_back(clamp_box(x0, lo, hi));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd vi = s.v[0];
    double h = opts.initial_step * std::abs(vi[i]);
    if (h == 0.0) h = opts.initial_step * std::max(1e-3, 0.1 * (hi[i] - lo[i]));
    vi[i] = clamp_to(vi[i] + h, lo[i], hi[i]);
    if (vi[i] == s.v[0][i]) vi[i] = clamp_to(vi[i] - 2.0 * h, lo[i], hi[i]);
    s.v.push_back(vi);
  }
  for (auto& v : s.v) s.f.push_back(fn(v));
  sort_simplex(s);

  NelderMeadResult res;
  int iter = 0;
  while (iter < max_iter) {
    ++iter;
    const double fspread = s.f[n] - s.f[0];
    double xspread = 0.0;
    for (int i = 1; i <= n; ++i)
      for (int d = 0; d < n; ++d)
        xspread = std::max(xspread, std::abs(s.v[i][d] - s.v[0][d]) /
                                        std::max(1.0, std::abs(s.v[0][d])));
    if (fspread < opts.ftol && xspread < opts.xtol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += s.v[i];
    centroid /= double(n);

    const Eigen::VectorXd xr = clamp_box(centroid + (centroid - s.v[n]), lo, hi);
    const double fr = fn(xr);
    if (fr < s.f[0]) {
      const Eigen::VectorXd xe =
          clamp_box(centroid + 2.0 * (centroid - s.v[n]), lo, hi);
      const double fe = fn(xe);
      if (fe < fr) {
        s.v[n] = xe;
        s.f[n] = fe;
      } else {
        s.v[n] = xr;
        s.f[n] = fr;
      }
    } else if (fr < s.f[n - 1]) {
      s.v[n] = xr;
      s.f[n] = fr;
    } else {
      const bool outside = fr < s.f[n];
      const Eigen::VectorXd base = outside ? xr : s.v[n];
      const Eigen::VectorXd xc = clamp_box(centroid + 0.5 * (base - centroid), lo, hi);
      const double fc = fn(xc);
      if (fc < std::min(fr, s.f[n])) {
        s.v[n] = xc;
        s.f[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          s.v[i] = clamp_box(s.v[0] + 0.5 * (s.v[i] - s.v[0]), lo, hi);
          s.f[i] = fn(s.v[i]);
        }
      }
    }
    sort_simplex(s);
  }

  res.x = s.v[0];
  res.fmin = s.f[0];
  res.iterations = iter;
  res.spread = s.f[n] - s.f[0];
  return res;
}

}  // namespace

NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
    const Eigen::VectorXd& upper, const NelderMeadOptions& opts) {
  if (x0.size() == 0) throw config_error("nelder_mead: empty parameter vector");
  if (lower.size() != x0.size() || upper.size() != x0.size())
    throw config_error("nelder_mead: bound size mismatch");
  for (Eigen::Index i = 0; i < x0.size(); ++i)
    if (!(lower[i] < upper[i]) || !std::isfinite(lower[i]) ||
        !std::isfinite(upper[i]))
      throw config_error("nelder_mead: bounds must be finite with lo < hi");

  const int runs = std::max(1, opts.restarts + 1);
  const int iters_per_run = std::max(1, opts.max_iter / runs);

  NelderMeadResult best;
  best.fmin = std::numeric_limits<double>::infinity();
  Eigen::VectorXd start = x0;
  int total_iter = 0;
  bool converged = false;
  for (int r = 0; r < runs; ++r) {
    NelderMeadOptions o = opts;
    o.initial_step = opts.initial_step / double(1 << r);
    NelderMeadResult res =
        nelder_mead_once(fn, start, lower, upper, o, iters_per_run);
    total_iter += res.iterations;
    converged = res.converged;
    if (res.fmin <= best.fmin) best = std::move(res);
    start = best.x;
    // Restarts (fresh halved-step simplex around the best point) only run
    // when the previous pass stalled without meeting tolerance.
    if (converged) break;
  }
  best.converged = converged;
  best.iterations = total_iter;
  return best;
}

std::vector<double> extract_dips(std::span<const double> x,
                                 std::span<const double> y,
                                 double prominence) {
  if (x.size() != y.size()) throw config_error("extract_dips: size mismatch");
  const size_t n = x.size();
  std::vector<double> dips;
  if (n < 3) return dips;
  const double ymax = *std::max_element(y.begin(), y.end());
  const double ymin = *std::min_element(y.begin(), y.end());
  const double range = ymax - ymin;
  if (range <= 0.0) return dips;

  for (size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] <= y[i - 1] && y[i] < y[i + 1])) continue;
    // Topographic prominence: highest barrier before a lower point.
    double left = y[i];
    for (size_t j = i; j-- > 0;) {
      if (y[j] < y[i]) break;
      left = std::max(left, y[j]);
    }
    double right = y[i];
    for (size_t j = i + 1; j < n; ++j) {
      if (y[j] < y[i]) break;
      right = std::max(right, y[j]);
    }
    if (std::min(left, right) - y[i] < prominence * range) continue;

    // 3-point quadratic refinement.
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    double xr = x[i];
    if (denom > 0.0) {
      const double shift = 0.5 * (y0 - y2) / denom;
      xr = x[i] + shift * 0.5 * (x[i + 1] - x[i - 1]);
    }
    dips.push_back(xr);
  }
  return dips;
}

namespace {

double lorentz_model(const Eigen::VectorXd& p, int n_peaks, double x) {
  double v = p[0];
  for (int k = 0; k < n_peaks; ++k) {
    const double c = p[1 + 3 * k];
    const double w = p[2 + 3 * k];
    const double d = p[3 + 3 * k];
    const double u = 2.0 * (x - c) / w;
    v -= d / (1.0 + u * u);
  }
  return v;
}

}  // namespace

LorentzianFit fit_lorentzians(std::span<const double> x,
                              std::span<const double> y, int n_peaks) {
  if (n_peaks < 1 || n_peaks > 2)
    throw config_error("fit_lorentzians: n_peaks must be 1 or 2");
  if (static_cast<int>(x.size()) < 5 * n_peaks)
    throw config_error("fit_lorentzians: trace too short");
  if (x.size() != y.size())
    throw config_error("fit_lorentzians: size mismatch");

  const size_t n = x.size();
  const double xmin = x.front(), xmax = x.back();
  const double span = xmax - xmin;
  const double ymax = *std::max_element(y.begin(), y.end());
  const double ymin = *std::min_element(y.begin(), y.end());
  const double range = std::max(ymax - ymin, 1e-300);

  // Seed centers from the most prominent dips, deepest first.
  std::vector<double> seeds = extract_dips(x, y, 0.02);
  std::sort(seeds.begin(), seeds.end(), [&](double a, double b) {
    auto depth = [&](double c) {
      size_t i = std::min(
          n - 1, static_cast<size_t>((c - xmin) / std::max(span, 1e-300) *
                                     double(n - 1)));
      return y[i];
    };
    return depth(a) < depth(b);
  });
  double c0 = seeds.empty()
                  ? x[std::min_element(y.begin(), y.end()) - y.begin()]
                  : seeds[0];
  double c1 = seeds.size() > 1 ? seeds[1] : c0 + span / 10.0;

  // Width estimate: half-depth crossing around the deepest dip.
  double w0 = span / 20.0;
  {
    size_t im = std::min_element(y.begin(), y.end()) - y.begin();
    const double half = ymax - 0.5 * (ymax - y[im]);
    size_t l = im, r = im;
    while (l > 0 && y[l] < half) --l;
    while (r + 1 < n && y[r] < half) ++r;
    if (r > l) w0 = std::max(x[r] - x[l], 2.0 * span / double(n));
  }

  const int np = 1 + 3 * n_peaks;
  Eigen::VectorXd lo(np), hi(np);
  lo[0] = ymin - range;
  hi[0] = ymax + range;
  for (int k = 0; k < n_peaks; ++k) {
    lo[1 + 3 * k] = xmin;
    hi[1 + 3 * k] = xmax;
    lo[2 + 3 * k] = 2.0 * span / double(n);
    hi[2 + 3 * k] = span;
    lo[3 + 3 * k] = 0.0;
    hi[3 + 3 * k] = 2.0 * range;
  }

  auto objective = [&](const Eigen::VectorXd& p) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double r = lorentz_model(p, n_peaks, x[i]) - y[i];
      s += r * r;
    }
    return s;
  };

  // Deterministic multi-start: seeded centers, swapped and split variants,
  // each at two width scales.
  std::vector<Eigen::VectorXd> starts;
  auto push_start = [&](double a, double b, double w) {
    Eigen::VectorXd p(np);
    p[0] = ymax;
    p[1] = a;
    p[2] = w;
    p[3] = range;
    if (n_peaks == 2) {
      p[4] = b;
      p[5] = w;
      p[6] = range;
    }
    starts.push_back(clamp_box(p, lo, hi));
  };
  for (double ws : {1.0, 0.35}) {
    push_start(c0, c1, w0 * ws);
    push_start(c1, c0, w0 * ws);
    push_start(c0 - w0, c0 + w0, w0 * ws);
    push_start(c0 - span / 8, c0 + span / 8, w0 * ws);
  }

  NelderMeadOptions nm;
  nm.max_iter = 800;
  nm.ftol = 1e-14 * range * range * double(n);
  nm.xtol = 1e-8;
  nm.restarts = 1;

  NelderMeadResult best;
  best.fmin = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& s0 : starts) {
    NelderMeadResult r = nelder_mead(objective, s0, lo, hi, nm);
    if (!any || r.fmin < best.fmin) {
      best = r;
      any = true;
    }
  }
  if (!any) throw numeric_error("fit_lorentzians: all starts failed");

  LorentzianFit fit;
  fit.baseline = best.x[0];
  for (int k = 0; k < n_peaks; ++k) {
    fit.centers.push_back(best.x[1 + 3 * k]);
    fit.fwhms.push_back(best.x[2 + 3 * k]);
    fit.depths.push_back(best.x[3 + 3 * k]);
  }
  // Report centers in ascending order.
  if (n_peaks == 2 && fit.centers[0] > fit.centers[1]) {
    std::swap(fit.centers[0], fit.centers[1]);
    std::swap(fit.fwhms[0], fit.fwhms[1]);
    std::swap(fit.depths[0], fit.depths[1]);
  }
  fit.residual = std::sqrt(best.fmin / double(n));
  if (n_peaks == 2) {
    const double meanw = 0.5 * (fit.fwhms[0] + fit.fwhms[1]);
    fit.ill_conditioned =
        std::abs(fit.centers[1] - fit.centers[0]) < 0.5 * meanw;
  }
  return fit;
}

namespace {

struct ParamBinding {
  std::string name;
  double* slot;
};

std::vector<ParamBinding> bind_params(DeviceParams& dev,
                                      const std::vector<std::string>& names) {
  std::map<std::string, double*> table{
      {"omega_pl", &dev.transmon.omega_pl},
      {"e_c", &dev.transmon.e_c},
      {"alpha", &dev.transmon.alpha},
      {"omega_r_sq0", &dev.squid.omega0},
      {"beta", &dev.squid.beta},
      {"gamma", &dev.squid.gamma},
      {"phi_c", &dev.squid.phi_c},
      {"omega_r50", &dev.coupling.omega_r50},
      {"g0_tr_sq", &dev.coupling.g0_tr_sq},
      {"g0_tr_50", &dev.coupling.g0_tr_50},
      {"g0_dqd_sq", &dev.coupling.g0_dqd_sq},
  };
  std::vector<ParamBinding> out;
  for (const auto& n : names) {
    auto it = table.find(n);
    if (it == table.end())
      throw config_error("unknown fit parameter '" + n + "'");
    out.push_back({n, it->second});
  }
  return out;
}

std::vector<double> visible_flux_transitions(const DeviceParams& dev,
                                             double phi_sq, double w_min) {
  const FluxBias bias{phi_sq, dev.transmon.phi_tr_offset};
  OperatingPoint pt = flux_point(dev, bias);
  AssembleOptions opts;
  opts.include_dqd = false;
  opts.e_c = dev.transmon.e_c;
  opts.n_g = dev.transmon.n_g;
  opts.n_tr = dev.transmon.n_levels;
  SystemHamiltonian sys = assemble(pt, opts);
  SweepPoint sp = spectrum_point(sys, 6);
  std::vector<double> out;
  for (const Transition& t : sp.transitions)
    if (t.w_sq + t.w_50 >= w_min) out.push_back(t.freq);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

FitResult fit_device(const FitProblem& problem, const NelderMeadOptions& opts,
                     int threads) {
  const int n_free = static_cast<int>(problem.free_names.size());
  if (n_free == 0) throw config_error("fit_device: no free parameters");
  if (static_cast<int>(problem.observed.size()) < 2 * n_free)
    throw config_error(
        "fit_device: need at least 2 observations per free parameter");
  if (!problem.model) throw config_error("fit_device: missing model");

  // Group observations by bias so the model runs once per bias per eval.
  std::map<double, std::vector<int>> groups;
  for (size_t i = 0; i < problem.observed.size(); ++i)
    groups[problem.observed[i].bias].push_back(static_cast<int>(i));
  std::vector<std::pair<double, std::vector<int>>> grouped(groups.begin(),
                                                           groups.end());
  const int n_groups = static_cast<int>(grouped.size());

  std::vector<double> last_res(problem.observed.size(), 0.0);
  std::vector<double> group_sums(grouped.size(), 0.0);
  auto objective = [&](const Eigen::VectorXd& x) {
#ifdef _OPENMP
    const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
    for (int gi = 0; gi < n_groups; ++gi) {
      const auto& [bias, idx] = grouped[gi];
      std::vector<double> freqs;
      try {
        freqs = problem.model(x, bias);
      } catch (const std::exception&) {
        freqs.clear();  // unphysical trial point; penalized below
      }
      double sum = 0.0;
      for (int i : idx) {
        const Observation& o = problem.observed[i];
        double d = 1.0;  // strong penalty when nothing is visible
        for (double f : freqs) d = std::min(d, std::abs(f - o.freq_ghz));
        last_res[i] = d;
        sum += o.weight * d * d;
      }
      group_sums[gi] = sum;
    }
    // Fixed-order accumulation keeps the result thread-count independent.
    double total = 0.0;
    for (double s : group_sums) total += s;
    return total;
  };

  NelderMeadResult nm = nelder_mead(objective, problem.start, problem.lower,
                                    problem.upper, opts);

  FitResult out;
  out.params = nm.x;
  out.names = problem.free_names;
  out.iterations = nm.iterations;
  out.simplex_spread = nm.spread;
  out.converged = nm.converged;
  objective(nm.x);  // refresh residuals at the optimum
  out.residuals = last_res;
  double ssq = 0.0, wsum = 0.0;
  for (size_t i = 0; i < last_res.size(); ++i) {
    ssq += problem.observed[i].weight * last_res[i] * last_res[i];
    wsum += problem.observed[i].weight;
  }
  out.residual_rms = wsum > 0.0 ? std::sqrt(ssq / wsum) : 0.0;
  return out;
}

FitProblem make_flux_spectrum_problem(const DeviceParams& base,
                                      const std::vector<std::string>& free_names,
                                      std::vector<Observation> observed,
                                      double w_min) {
  FitProblem problem;
  problem.observed = std::move(observed);
  problem.free_names = free_names;

  DeviceParams proto = base;
  auto bindings = bind_params(proto, free_names);
  const int n = static_cast<int>(bindings.size());
  problem.start.resize(n);
  problem.lower.resize(n);
  problem.upper.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v = *bindings[i].slot;
    problem.start[i] = v;
    problem.lower[i] = 0.5 * v;
    problem.upper[i] = 1.5 * v;
  }

  problem.model = [base, free_names, w_min](const Eigen::VectorXd& x,
                                            double bias) {
    DeviceParams dev = base;
    auto slots = bind_params(dev, free_names);
    for (size_t i = 0; i < slots.size(); ++i) *slots[i].slot = x[i];
    return visible_flux_transitions(dev, bias, w_min);
  };
  return problem;
}

std::vector<Observation> synthesize_flux_observations(
    const DeviceParams& truth, std::span<const double> phi_sq, double w_min) {
  std::vector<Observation> out;
  for (double phi : phi_sq) {
    for (double f : visible_flux_transitions(truth, phi, w_min))
      out.push_back({phi, f, 1.0});
  }
  return out;
}

std::vector<Observation> read_observations_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  if (t.header != std::vector<std::string>{"bias", "freq_ghz", "weight"})
    throw config_error(path + ": expected header bias,freq_ghz,weight");
  std::vector<Observation> out;
  for (const auto& row : t.rows) {
    if (row.size() != 3) throw config_error(path + ": bad row width");
    out.push_back({std::stod(row[0]), std::stod(row[1]), std::stod(row[2])});
  }
  return out;
}

void write_observations_csv(const std::string& path,
                            std::span<const Observation> obs) {
  CsvTable t;
  t.header = {"bias", "freq_ghz", "weight"};
  for (const Observation& o : obs)
    t.rows.push_back({fmt_g12(o.bias), fmt_g12(o.freq_ghz), fmt_g12(o.weight)});
  write_csv(path, t);
}

}  // namespace hqed
