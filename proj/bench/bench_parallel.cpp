// Timing comparison of the OpenMP sweep/chevron kernels against their
// serial reference implementations.

#include "hqed/dynamics.hpp"
#include "hqed/hamiltonian.hpp"
#include "hqed/spectra.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <vector>

namespace {

double seconds(std::chrono::steady_clock::time_point a,
               std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

hqed::OperatingPoint bus_point() {
  hqed::OperatingPoint pt;
  pt.two_t_c = 3635.0;
  pt.omega_tr = 3.695;
  pt.omega_r_sq = 4.062;
  pt.omega_r_50 = 6.490;
  pt.g_tr_sq = 128.0;
  pt.g_dqd_sq = 36.0;
  pt.g_tr_50 = 93.0;
  return pt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel benchmark"};
  int sweep_points = 161;
  int chevron_amps = 11;
  int chevron_taus = 26;
  int threads = 0;
  app.add_option("--sweep-points", sweep_points, "bias points in the sweep");
  app.add_option("--chevron-amps", chevron_amps, "amplitude grid size");
  app.add_option("--chevron-taus", chevron_taus, "plateau grid size");
  app.add_option("--threads", threads, "thread cap (0 = auto)");
  CLI11_PARSE(app, argc, argv);

  using clock = std::chrono::steady_clock;

  {
    const hqed::OperatingPoint base = bus_point();
    const hqed::AssembleOptions opts;
    auto builder = [&](double delta) {
      hqed::OperatingPoint p = base;
      p.delta = delta;
      return hqed::assemble(p, opts);
    };
    std::vector<double> axis(sweep_points);
    for (int i = 0; i < sweep_points; ++i)
      axis[i] = -800.0 + 1600.0 * i / double(sweep_points - 1);

    hqed::SweepOptions sopts;
    sopts.threads = threads;
    // Warm the transmon cache so both variants pay the same setup cost.
    builder(0.0);

    auto t0 = clock::now();
    auto serial = hqed::sweep_spectrum_serial(builder, "delta", axis, sopts);
    auto t1 = clock::now();
    auto parallel = hqed::sweep_spectrum(builder, "delta", axis, sopts);
    auto t2 = clock::now();

    double max_diff = 0.0;
    for (size_t i = 0; i < serial.points.size(); ++i)
      for (size_t k = 0; k < serial.points[i].transitions.size(); ++k)
        max_diff = std::max(max_diff,
                            std::abs(serial.points[i].transitions[k].freq -
                                     parallel.points[i].transitions[k].freq));
    const double ts = seconds(t0, t1), tp = seconds(t1, t2);
    std::printf("spectrum sweep  %4d points: serial %7.3f s  openmp %7.3f s  "
                "speedup %5.2fx  max|df| %.3g GHz\n",
                sweep_points, ts, tp, ts / tp, max_diff);
  }

  {
    hqed::PulseProtocol pulse;
    hqed::LindbladRates rates;
    std::vector<double> amps(chevron_amps), taus(chevron_taus);
    for (int i = 0; i < chevron_amps; ++i)
      amps[i] = chevron_amps == 1 ? 0.6 : i / double(chevron_amps - 1);
    for (int i = 0; i < chevron_taus; ++i)
      taus[i] = 250.0 * i / double(chevron_taus - 1);

    hqed::ChevronOptions copts;
    copts.threads = threads;

    auto t0 = clock::now();
    auto serial = hqed::run_chevron_serial(21.6, pulse, rates, amps, taus, copts);
    auto t1 = clock::now();
    auto parallel = hqed::run_chevron(21.6, pulse, rates, amps, taus, copts);
    auto t2 = clock::now();

    const double max_diff =
        (serial.population - parallel.population).cwiseAbs().maxCoeff();
    const double ts = seconds(t0, t1), tp = seconds(t1, t2);
    std::printf("chevron %3dx%-3d cells:      serial %7.3f s  openmp %7.3f s  "
                "speedup %5.2fx  max|dP| %.3g\n",
                chevron_amps, chevron_taus, ts, tp, ts / tp, max_diff);
  }
  return 0;
}
