#include "hqed/config.hpp"
#include "hqed/errors.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

namespace {

struct CommonArgs {
  std::string config;
  std::string out = ".";
  int threads = 0;
  bool verbose = false;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "run configuration file")
      ->required();
  sub->add_option("--out", args.out, "output directory");
  sub->add_option("--threads", args.threads, "worker thread cap (0 = auto)");
  sub->add_flag("--verbose", args.verbose, "chatty progress output");
}

int run(hqed::ExperimentType want, const CommonArgs& args) {
  hqed::RunConfig cfg = hqed::parse_config_file(args.config);
  if (cfg.type != want)
    throw hqed::config_error(args.config +
                             ": experiment type does not match subcommand");
  cfg.threads = args.threads;

  hqed::RunOutput out;
  switch (cfg.type) {
    case hqed::ExperimentType::SpectrumSweep:
      out = hqed::cmd_spectrum(cfg, args.out);
      break;
    case hqed::ExperimentType::Chevron:
      out = hqed::cmd_chevron(cfg, args.out);
      break;
    case hqed::ExperimentType::S11:
      out = hqed::cmd_s11(cfg, args.out);
      break;
    case hqed::ExperimentType::Rabi:
      out = hqed::cmd_rabi(cfg, args.out);
      break;
    case hqed::ExperimentType::Fit:
      out = hqed::cmd_fit(cfg, args.out);
      break;
  }
  if (args.verbose)
    for (const std::string& f : out.files) std::printf("wrote %s\n", f.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid circuit-QED spectrum and dynamics toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::map<std::string, hqed::ExperimentType> subs{
      {"spectrum", hqed::ExperimentType::SpectrumSweep},
      {"chevron", hqed::ExperimentType::Chevron},
      {"s11", hqed::ExperimentType::S11},
      {"rabi", hqed::ExperimentType::Rabi},
      {"fit", hqed::ExperimentType::Fit},
  };
  for (auto& [name, type] : subs) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub, args);
    hqed::ExperimentType t = type;
    sub->callback([&args, t]() {
      int rc = run(t, args);
      if (rc != 0) throw CLI::RuntimeError(rc);
    });
  }

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const hqed::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const hqed::numeric_error& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
