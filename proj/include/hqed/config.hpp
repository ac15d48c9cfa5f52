#pragma once

#include "hqed/device.hpp"
#include "hqed/dynamics.hpp"
#include "hqed/estimate.hpp"
#include "hqed/hamiltonian.hpp"
#include "hqed/spectra.hpp"

#include <map>
#include <string>
#include <vector>

namespace hqed {

enum class ExperimentType { SpectrumSweep, Rabi, S11, Chevron, Fit };

struct SweepSpec {
  std::string axis = "delta";  // delta | omega_tr | phi_tr | phi_sq
  double start = 0.0;          // MHz for frequency axes, Phi_0 for flux axes
  double stop = 0.0;
  int points = 0;
  int transitions = 6;
};

struct S11Spec {
  double f_min = 0.0;   // GHz
  double f_max = 0.0;   // GHz
  int points = 2001;
  double phase = 0.0;   // multiplexing phase, radians
};

struct RabiSpec {
  std::string resonator = "sq";  // sq | 50
  double span = 0.0;             // MHz; 0 = auto around the doublet
  int points = 2001;
};

struct ChevronSpec {
  double two_j = 21.6;  // MHz
  PulseProtocol pulse;
  LindbladRates rates;
  double amp_min = 0.0, amp_max = 1.0;
  int amp_points = 21;
  double tau_min = 0.0, tau_max = 250.0;  // ns
  int tau_points = 126;
  double step_ns = 0.05;
};

struct FitSpec {
  std::string mode = "roundtrip";  // roundtrip | csv
  std::vector<std::string> free_names;
  double perturb = 0.10;
  unsigned seed = 1;
  double phi_min = -0.3, phi_max = 0.3;
  int phi_points = 31;
  std::string observations;  // csv path, csv mode only
  int max_iter = 2000;
};

struct RunConfig {
  ExperimentType type = ExperimentType::SpectrumSweep;
  bool use_flux_model = false;  // operating point from flux laws vs scalars
  DeviceParams device;
  FluxBias bias;
  OperatingPoint point;
  AssembleOptions numerics;
  SweepSpec sweep;
  S11Spec s11;
  RabiSpec rabi;
  ChevronSpec chevron;
  FitSpec fit;
  int threads = 0;
  // Fully-resolved key/value view (defaults included) embedded in every
  // output JSON so a job can be re-run from its metadata alone.
  std::map<std::string, std::map<std::string, std::string>> resolved;
};

// Strict parser for the sectioned key-value format: unknown sections or
// keys, duplicate keys, missing units on dimensioned quantities and
// malformed numbers all throw config_error with a line reference.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text,
                            const std::string& origin = "<memory>");

// Device parameter sets round-trip through the same format.
DeviceParams read_device_file(const std::string& path);
void write_device_file(const std::string& path, const DeviceParams& dev);

struct RunOutput {
  std::vector<std::string> files;  // everything written, csv + json
};

RunOutput cmd_spectrum(const RunConfig& cfg, const std::string& out_dir,
                       SweepResult* sweep_out = nullptr);
RunOutput cmd_chevron(const RunConfig& cfg, const std::string& out_dir,
                      ChevronResult* chevron_out = nullptr);
RunOutput cmd_s11(const RunConfig& cfg, const std::string& out_dir,
                  std::vector<double>* multiplexed_out = nullptr);
RunOutput cmd_rabi(const RunConfig& cfg, const std::string& out_dir,
                   RabiTrace* trace_out = nullptr);
RunOutput cmd_fit(const RunConfig& cfg, const std::string& out_dir,
                  FitResult* fit_out = nullptr);

}  // namespace hqed
