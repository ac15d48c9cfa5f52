#include "hqed/errors.hpp"
#include "hqed/spectra.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace hqed;

namespace {

// Dispersive bus operating point (both qubits below the array).
OperatingPoint bus_point() {
  OperatingPoint pt;
  pt.two_t_c = 3635.0;
  pt.delta = 0.0;
  pt.omega_tr = 3.695;
  pt.omega_r_sq = 4.062;
  pt.omega_r_50 = 6.490;
  pt.g_tr_sq = 128.0;
  pt.g_dqd_sq = 36.0;
  pt.g_tr_50 = 93.0;
  return pt;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / double(n - 1);
  return v;
}

HamiltonianBuilder delta_builder(const OperatingPoint& base) {
  AssembleOptions opts;
  return [base, opts](double d) {
    OperatingPoint p = base;
    p.delta = d;
    return assemble(p, opts);
  };
}

SweepPoint bare_cavity_point(double freq_ghz) {
  SweepPoint p;
  p.transitions.push_back({freq_ghz, 1.0, 0.0});
  return p;
}

}  // namespace

TEST_CASE("decoupled sweep: uninvolved transitions stay constant") {
  OperatingPoint pt = bus_point();
  pt.g_tr_sq = 0.0;
  pt.g_dqd_sq = 0.0;
  pt.g_tr_50 = 0.0;
  const auto axis = linspace(-400.0, 400.0, 9);
  const SweepResult sweep =
      sweep_spectrum_serial(delta_builder(pt), "delta", axis, {});
  for (const SweepPoint& p : sweep.points) {
    REQUIRE(p.ok);
    // transmon, array and readout transitions do not move with delta
    CHECK(p.transitions[1].freq == doctest::Approx(3.695).epsilon(1e-10));
  }
  // the DQD branch follows sqrt(4 tc^2 + delta^2)
  for (size_t i = 0; i < axis.size(); ++i) {
    const double expect = std::hypot(3635.0, axis[i]) * 1e-3;
    CHECK(sweep.points[i].transitions[0].freq ==
          doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("two-level crossing follows the exact hyperbola") {
  // DQD swept through the array at the sweet spot: a pure rotating-wave
  // pair, so the gap is exactly sqrt(detuning^2 + 4 g^2).
  OperatingPoint pt;
  pt.omega_tr = 7.5;  // parked far above
  pt.omega_r_sq = 4.230;
  pt.omega_r_50 = 6.490;
  pt.g_dqd_sq = 25.0;
  AssembleOptions opts;
  auto builder = [pt, opts](double two_tc) {
    OperatingPoint p = pt;
    p.two_t_c = two_tc;
    return assemble(p, opts);
  };
  const auto axis = linspace(4130.0, 4330.0, 41);
  const SweepResult sweep = sweep_spectrum(builder, "two_t_c", axis, {});
  for (size_t i = 0; i < axis.size(); ++i) {
    const double detuning = axis[i] - 4230.0;
    const double expect = std::hypot(detuning, 2.0 * 25.0);
    const double gap = (sweep.points[i].transitions[1].freq -
                        sweep.points[i].transitions[0].freq) *
                       1e3;
    CHECK(gap == doctest::Approx(expect).epsilon(1e-6));
  }

  const AvoidedCrossing ac = find_avoided_crossing(sweep, 0, 1);
  CHECK(ac.gap_mhz == doctest::Approx(50.0).epsilon(2e-3));
  CHECK(ac.location == doctest::Approx(4230.0).epsilon(1e-4));

  // photonic weights split evenly on resonance
  size_t res_idx = 20;  // axis value 4230
  CHECK(sweep.points[res_idx].transitions[0].w_sq == doctest::Approx(0.5).epsilon(0.04));
  CHECK(sweep.points[res_idx].transitions[1].w_sq == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("synthetic hyperbola crossing recovered to 0.1 MHz") {
  SweepResult sweep;
  sweep.axis_name = "x";
  sweep.axis = linspace(-10.0, 10.0, 81);
  for (double x : sweep.axis) {
    SweepPoint p;
    const double gap = std::hypot(4.0 * x, 50.0) * 1e-3;  // GHz
    p.transitions.push_back({5.0 - 0.5 * gap, 0.5, 0.0});
    p.transitions.push_back({5.0 + 0.5 * gap, 0.5, 0.0});
    sweep.points.push_back(p);
  }
  const AvoidedCrossing ac = find_avoided_crossing(sweep, 0, 1);
  CHECK(std::abs(ac.gap_mhz - 50.0) < 0.1);
  CHECK(std::abs(ac.location) < 0.1);
}

TEST_CASE("monotone gap raises not-found") {
  SweepResult sweep;
  sweep.axis_name = "x";
  sweep.axis = linspace(0.0, 1.0, 11);
  for (double x : sweep.axis) {
    SweepPoint p;
    p.transitions.push_back({1.0, 0.0, 0.0});
    p.transitions.push_back({2.0 + x, 0.0, 0.0});
    sweep.points.push_back(p);
  }
  CHECK_THROWS_AS(find_avoided_crossing(sweep, 0, 1), numeric_error);
  CHECK_THROWS_AS(find_avoided_crossing(sweep, 0, 5), config_error);
}

TEST_CASE("qubit-qubit avoided crossing matches the dispersive estimate") {
  const auto axis = linspace(0.0, 800.0, 161);
  const SweepResult sweep =
      sweep_spectrum(delta_builder(bus_point()), "delta", axis, {});
  const AvoidedCrossing ac = find_avoided_crossing(sweep, 0, 1);
  CHECK(ac.gap_mhz == doctest::Approx(21.0).epsilon(2.0 / 21.0));

  const double exchange = dispersive_exchange(128.0, 36.0, 4062.0 - 3695.0,
                                              4062.0 - 3635.0);
  CHECK(std::abs(exchange - ac.gap_mhz) / ac.gap_mhz < 0.15);
}

TEST_CASE("gap agrees between detuning and transmon-frequency sweeps") {
  OperatingPoint pt = bus_point();
  const SweepResult s1 =
      sweep_spectrum(delta_builder(pt), "delta", linspace(0.0, 800.0, 161), {});
  const double gap1 = find_avoided_crossing(s1, 0, 1).gap_mhz;

  OperatingPoint pt3 = bus_point();
  pt3.two_t_c = 3638.0;
  AssembleOptions opts;
  auto builder = [pt3, opts](double w_mhz) {
    OperatingPoint p = pt3;
    p.omega_tr = w_mhz * 1e-3;
    p.e_j = 0.0;
    return assemble(p, opts);
  };
  const SweepResult s2 =
      sweep_spectrum(builder, "omega_tr", linspace(3540.0, 3740.0, 101), {});
  const double gap2 = find_avoided_crossing(s2, 0, 1).gap_mhz;
  CHECK(std::abs(gap1 - gap2) < 1.0);
}

TEST_CASE("branch tracking keeps identity through a true crossing") {
  // No DQD-array coupling: the DQD branch crosses the array branch with
  // zero gap. Overlap tracking keeps column 0 on the DQD (dark) state.
  OperatingPoint pt;
  pt.omega_tr = 7.5;
  pt.omega_r_sq = 4.230;
  pt.omega_r_50 = 6.490;
  pt.g_dqd_sq = 0.0;
  AssembleOptions opts;
  auto builder = [pt, opts](double two_tc) {
    OperatingPoint p = pt;
    p.two_t_c = two_tc;
    return assemble(p, opts);
  };
  const auto axis = linspace(4150.0, 4310.0, 33);  // avoids exact degeneracy
  const SweepResult sweep = sweep_spectrum(builder, "two_t_c", axis, {});
  for (size_t i = 0; i < axis.size(); ++i) {
    CHECK(sweep.points[i].transitions[0].w_sq < 0.01);  // stays the dark branch
    CHECK(sweep.points[i].transitions[1].w_sq > 0.99);
    CHECK(sweep.points[i].transitions[0].freq ==
          doctest::Approx(axis[i] * 1e-3).epsilon(1e-9));
  }
  // frequencies really did cross
  CHECK(sweep.points.front().transitions[0].freq <
        sweep.points.front().transitions[1].freq);
  CHECK(sweep.points.back().transitions[0].freq >
        sweep.points.back().transitions[1].freq);
}

TEST_CASE("sweep records per-point errors and continues") {
  AssembleOptions opts;
  auto builder = [opts](double x) {
    if (x > 0.5) throw numeric_error("synthetic failure");
    OperatingPoint p = bus_point();
    return assemble(p, opts);
  };
  const auto axis = linspace(0.0, 1.0, 5);
  const SweepResult sweep = sweep_spectrum(builder, "x", axis, {});
  CHECK(sweep.points[0].ok);
  CHECK_FALSE(sweep.points[4].ok);
  CHECK(sweep.points[4].error == "synthetic failure");
}

TEST_CASE("one-port reflection closed forms") {
  ReflectionSpec spec;
  spec.sq = {4.0, 8.0};
  spec.probe_ghz = {4.060};
  const SweepPoint cavity = bare_cavity_point(4.060);

  auto s11 = reflection_s11(spec, cavity, ProbedMode::Sq);
  CHECK(std::abs(s11[0]) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  // lossless overcoupled limit: full reflection with a pi phase flip
  spec.sq = {4.0, 0.0};
  s11 = reflection_s11(spec, cavity, ProbedMode::Sq);
  CHECK(std::abs(s11[0]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::arg(s11[0]) == doctest::Approx(M_PI).epsilon(1e-12));

  // far off resonance the line reflects everything without phase
  spec.sq = {4.0, 8.0};
  spec.probe_ghz = {9.0};
  s11 = reflection_s11(spec, cavity, ProbedMode::Sq);
  CHECK(std::abs(s11[0]) == doctest::Approx(1.0).epsilon(1e-3));

  spec.sq = {0.0, 0.0};
  CHECK_THROWS_AS(reflection_s11(spec, cavity, ProbedMode::Sq), numeric_error);
}

TEST_CASE("reflection passivity on physical traces") {
  AssembleOptions opts;
  const SystemHamiltonian sys = assemble(bus_point(), opts);
  const SweepPoint point = spectrum_point(sys, 6);
  ReflectionSpec spec;
  spec.sq = {4.0, 8.0};
  spec.r50 = {4.0, 8.0};
  spec.probe_ghz = linspace(3.4, 7.2, 1501);
  for (ProbedMode mode : {ProbedMode::Sq, ProbedMode::R50}) {
    const auto s11 = reflection_s11(spec, point, mode);
    for (const complexd& s : s11) CHECK(std::abs(s) <= 1.0 + 1e-9);
  }
}

TEST_CASE("multiplexed response") {
  ReflectionSpec spec;
  spec.sq = {4.0, 8.0};
  spec.r50 = {4.0, 8.0};
  spec.probe_ghz = linspace(4.0, 4.12, 601);
  const SweepPoint cavity = bare_cavity_point(4.060);

  const auto s_sq = reflection_s11(spec, cavity, ProbedMode::Sq);

  SUBCASE("zero phase doubles identical traces") {
    const auto multi = multiplexed_response(s_sq, s_sq, 0.0);
    for (size_t i = 0; i < multi.size(); ++i)
      CHECK(multi[i] == doctest::Approx(2.0 * std::abs(s_sq[i])).epsilon(1e-12));
  }

  SUBCASE("far-detuned partner leaves the dip visible on unit background") {
    const SweepPoint far = bare_cavity_point(9.5);
    const auto s_50 = reflection_s11(spec, far, ProbedMode::Sq);
    const auto multi = multiplexed_response(s_sq, s_50, 0.0);
    // background ~2, single dip at the live resonance
    const size_t imin =
        std::min_element(multi.begin(), multi.end()) - multi.begin();
    CHECK(spec.probe_ghz[imin] == doctest::Approx(4.060).epsilon(1e-4));
    CHECK(multi.front() == doctest::Approx(2.0).epsilon(1e-2));
  }

  SUBCASE("grid mismatch is rejected") {
    std::vector<complexd> shorter(s_sq.begin(), s_sq.end() - 1);
    CHECK_THROWS_AS(multiplexed_response(s_sq, shorter, 0.0), config_error);
  }
}

TEST_CASE("vacuum rabi trace: charge qubit on the array") {
  OperatingPoint pt;
  pt.two_t_c = 4090.0;
  pt.omega_tr = 1.720;
  pt.omega_r_sq = 4.089;
  pt.omega_r_50 = 6.490;
  pt.g_tr_sq = 91.0;
  pt.g_dqd_sq = 33.0;
  pt.g_tr_50 = 66.0;
  AssembleOptions opts;
  const SystemHamiltonian sys = assemble(pt, opts);
  ReflectionSpec spec;
  spec.sq = {4.0, 8.0};
  spec.r50 = {4.0, 8.0};
  const RabiTrace trace = vacuum_rabi_trace(sys, spec, ProbedMode::Sq);
  CHECK(trace.splitting_mhz == doctest::Approx(66.0).epsilon(2.0 / 66.0));
  // dips resolved: effective linewidth of order kappa_tot
  CHECK(trace.linewidth_mhz > 5.0);
  CHECK(trace.linewidth_mhz < 20.0);
  CHECK_FALSE(trace.fit.ill_conditioned);
}

TEST_CASE("vacuum rabi trace: transmon on the array") {
  OperatingPoint pt;
  pt.two_t_c = 4000.0;
  pt.delta = 10000.0;  // charge qubit parked in blockade
  pt.omega_tr = 5.181;
  pt.omega_r_sq = 5.181;
  pt.omega_r_50 = 6.490;
  pt.g_tr_sq = 225.5;
  pt.g_tr_50 = 109.0;
  AssembleOptions opts;
  const SystemHamiltonian sys = assemble(pt, opts);
  ReflectionSpec spec;
  spec.sq = {4.0, 8.0};
  spec.r50 = {4.0, 8.0};
  const RabiTrace trace = vacuum_rabi_trace(sys, spec, ProbedMode::Sq);
  CHECK(trace.splitting_mhz == doctest::Approx(451.0).epsilon(10.0 / 451.0));
}

TEST_CASE("vacuum rabi trace: uncoupled resonator shows one dip") {
  OperatingPoint pt;
  pt.two_t_c = 4089.0;
  pt.omega_tr = 1.720;
  pt.omega_r_sq = 4.089;
  pt.omega_r_50 = 6.490;
  pt.g_dqd_sq = 0.0;
  AssembleOptions opts;
  const SystemHamiltonian sys = assemble(pt, opts);
  ReflectionSpec spec;
  spec.sq = {4.0, 8.0};
  spec.r50 = {4.0, 8.0};
  spec.probe_ghz = linspace(4.03, 4.15, 1201);
  const RabiTrace trace = vacuum_rabi_trace(sys, spec, ProbedMode::Sq);
  // two-Lorentzian model collapses onto a single dip
  CHECK(trace.splitting_mhz < 0.5 * trace.linewidth_mhz);
  CHECK(trace.fit.ill_conditioned);
}
