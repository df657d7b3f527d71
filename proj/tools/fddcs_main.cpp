// Command-line front end for Monte-Carlo sweeps of the joint training/feedback schemes.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fddcs/experiments.hpp"

namespace {

std::vector<double> parse_snr_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw fddcs::InvalidInput("--snr: '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw fddcs::InvalidInput("--snr: empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential joint channel training/feedback simulator"};

  std::string config_path;
  std::string output_path;
  std::string profile = "desk";
  std::uint64_t seed = 0;
  int trials = 0;
  std::string snr;
  std::string scheme;
  std::string solver;
  std::string aggregation;
  bool no_timestamp = false;

  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--output", output_path, "CSV output path (\"-\" for stdout)");
  app.add_option("--profile", profile, "Base profile before the config is applied")
      ->check(CLI::IsMember({"desk", "paper"}));
  auto* seed_opt = app.add_option("--seed", seed, "Master RNG seed");
  app.add_option("--trials", trials, "Monte-Carlo trials per cell")->check(CLI::PositiveNumber);
  app.add_option("--snr", snr, "Comma-separated SNR grid in dB");
  app.add_option("--scheme", scheme,
                 "differential-joint | nondifferential-joint | conventional-separate");
  app.add_option("--solver", solver, "scosamp | cosamp | omp | ls");
  app.add_option("--aggregation", aggregation, "energy | literal-sum")
      ->check(CLI::IsMember({"energy", "literal-sum"}));
  app.add_flag("--no-timestamp", no_timestamp, "Omit the generation timestamp from the CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    fddcs::ExperimentConfig cfg =
        profile == "paper" ? fddcs::paper_scale_profile() : fddcs::desk_profile();
    if (!config_path.empty()) cfg = fddcs::load_config(config_path, cfg);
    if (!output_path.empty()) cfg.output_path = output_path;
    if (*seed_opt) cfg.seed = seed;
    if (trials > 0) cfg.trials = trials;
    if (!snr.empty()) cfg.snr_db = parse_snr_list(snr);
    if (!aggregation.empty()) cfg.protocol.aggregation = fddcs::parse_aggregation(aggregation);
    if (!scheme.empty() || !solver.empty()) {
      fddcs::ArmConfig arm{cfg.protocol.scheme, cfg.protocol.solver, cfg.eta, 0, 0};
      if (!cfg.arms.empty()) arm = cfg.arms.front();
      if (!scheme.empty()) arm.scheme = fddcs::parse_scheme(scheme);
      if (!solver.empty()) arm.solver = fddcs::parse_solver(solver);
      cfg.arms = {arm};
    }
    if (cfg.output_path.empty()) {
      throw fddcs::InvalidInput("no output path: pass --output or set \"output\" in the config");
    }
    cfg.validate();

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (cfg.output_path != "-") {
      file.open(cfg.output_path, std::ios::out | std::ios::trunc);
      if (!file) {
        throw fddcs::InvalidInput("cannot write output file '" + cfg.output_path + "'");
      }
      out = &file;
    }

    const auto result = fddcs::run_sweep(cfg);
    fddcs::write_csv(*out, result, cfg, {.timestamp = !no_timestamp});
    out->flush();
    if (!*out) {
      std::cerr << "fddcs: error writing '" << cfg.output_path << "'\n";
      return 3;
    }
  } catch (const fddcs::InvalidInput& e) {
    std::cerr << "fddcs: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fddcs: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
