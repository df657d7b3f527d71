#include "fddcs/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "fddcs/metrics.hpp"

namespace fddcs {

namespace {

using nlohmann::json;

// Stream keys under the master seed.
constexpr std::uint64_t kChannelStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kPilotStream = 3;
constexpr std::uint64_t kDiffStream = 4;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidInput("config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw InvalidInput("config: unknown key '" + where + "." + key + "' (allowed: " + list + ")");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput("config: '" + where + "." + key + "' has the wrong type: " + e.what());
  }
}

// Integers that also accept "auto" (stored as 0).
void read_auto(const json& obj, const char* key, int& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (v.is_string() && v.get<std::string>() == "auto") {
    out = 0;
  } else if (v.is_number_integer()) {
    out = v.get<int>();
  } else {
    throw InvalidInput("config: '" + where + "." + key + "' must be an integer or \"auto\"");
  }
}

std::string format_double(double x, const char* fmt = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

int resolved_sparsity(const ExperimentConfig& cfg) {
  if (cfg.sparsity > 0) return cfg.sparsity;
  return std::max(1, static_cast<int>(std::lround(cfg.channel.activity * cfg.channel.taps)));
}

int thread_count() {
  if (const char* env = std::getenv("FDDCS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

void ExperimentConfig::validate() const {
  channel.validate();
  if (n < channel.taps) throw InvalidInput("config: pilot.n must be >= channel.taps");
  if (trials < 1) throw InvalidInput("config: trials must be >= 1");
  if (users < 1) throw InvalidInput("config: users must be >= 1");
  if (snr_db.empty()) throw InvalidInput("config: snr_db must list at least one value");
  for (double s : snr_db) {
    if (!std::isfinite(s)) throw InvalidInput("config: snr_db values must be finite");
  }
  if (arms.empty()) throw InvalidInput("config: no arms to run");
  if (!(init_scale >= 1.0)) throw InvalidInput("config: pilot.init_scale must be >= 1");
  if (sparsity < 0 || sparsity > channel.taps) {
    throw InvalidInput("config: protocol.sparsity must be \"auto\" or in 1..taps");
  }
  if (diff_sparsity < 0) throw InvalidInput("config: protocol.diff_sparsity must be >= 1 or \"auto\"");
  if (!(diff_quantile > 0.0 && diff_quantile <= 1.0)) {
    throw InvalidInput("config: diff_estimation.quantile must lie in (0, 1]");
  }
  if (diff_samples < 1) throw InvalidInput("config: diff_estimation.samples must be >= 1");
  if (!(diff_significance >= 0.0)) throw InvalidInput("config: diff_estimation.significance must be >= 0");

  ProtocolConfig probe = protocol;
  probe.sparsity = resolved_sparsity(*this);
  probe.diff_sparsity = diff_sparsity > 0 ? diff_sparsity : 1;
  probe.validate(channel.taps);
  for (const auto& arm : arms) resolve_arm(arm, *this);
}

ExperimentConfig paper_scale_profile() {
  ExperimentConfig cfg;
  cfg.channel = ChannelParams{};
  cfg.n = 2048;
  cfg.sparsity = 6;  // mu * L
  cfg.protocol.reinit_period = 3;
  cfg.protocol.slots = 9;
  cfg.protocol.tolerance = 1e-3;
  cfg.arms = {ArmConfig{Scheme::DifferentialJoint, Solver::SCoSaMP, 0.4, 0, 0}};
  return cfg;
}

ExperimentConfig desk_profile() {
  ExperimentConfig cfg = paper_scale_profile();
  cfg.n = 256;
  cfg.channel.antennas = 8;
  cfg.channel.taps = 32;
  cfg.sparsity = 5;
  cfg.arms.push_back(ArmConfig{Scheme::ConventionalSeparate, Solver::CoSaMP, 0.7, 0, 0});
  return cfg;
}

ExperimentConfig config_from_json(const json& doc, ExperimentConfig cfg) {
  reject_unknown(doc,
                 {"channel", "pilot", "protocol", "arms", "snr_db", "trials", "users", "seed",
                  "output", "exclude_init_slots", "diff_estimation", "profile"},
                 "root");
  if (doc.contains("profile")) {
    const auto name = doc.at("profile").get<std::string>();
    if (name == "desk") {
      cfg = desk_profile();
    } else if (name == "paper") {
      cfg = paper_scale_profile();
    } else {
      throw InvalidInput("config: profile must be \"desk\" or \"paper\", got '" + name + "'");
    }
  }
  if (doc.contains("channel")) {
    const auto& c = doc.at("channel");
    reject_unknown(c, {"antennas", "taps", "activity", "p01", "doppler_hz", "slot_s", "innovation_var"},
                   "channel");
    read(c, "antennas", cfg.channel.antennas, "channel");
    read(c, "taps", cfg.channel.taps, "channel");
    read(c, "activity", cfg.channel.activity, "channel");
    read(c, "p01", cfg.channel.p01, "channel");
    read(c, "doppler_hz", cfg.channel.doppler_hz, "channel");
    read(c, "slot_s", cfg.channel.slot_s, "channel");
    read(c, "innovation_var", cfg.channel.innovation_var, "channel");
  }
  if (doc.contains("pilot")) {
    const auto& p = doc.at("pilot");
    reject_unknown(p, {"n", "eta", "init_scale"}, "pilot");
    read(p, "n", cfg.n, "pilot");
    read(p, "eta", cfg.eta, "pilot");
    read(p, "init_scale", cfg.init_scale, "pilot");
    for (auto& arm : cfg.arms) read(p, "eta", arm.eta, "pilot");
  }
  if (doc.contains("protocol")) {
    const auto& p = doc.at("protocol");
    reject_unknown(p,
                   {"reinit_period", "slots", "sparsity", "diff_sparsity", "tolerance", "max_iters",
                    "aggregation", "scheme", "solver", "downlink_noise_share", "uplink_noise_share"},
                   "protocol");
    read(p, "reinit_period", cfg.protocol.reinit_period, "protocol");
    read(p, "slots", cfg.protocol.slots, "protocol");
    read_auto(p, "sparsity", cfg.sparsity, "protocol");
    read_auto(p, "diff_sparsity", cfg.diff_sparsity, "protocol");
    read(p, "tolerance", cfg.protocol.tolerance, "protocol");
    read(p, "max_iters", cfg.protocol.max_iters, "protocol");
    read(p, "downlink_noise_share", cfg.protocol.downlink_noise_share, "protocol");
    read(p, "uplink_noise_share", cfg.protocol.uplink_noise_share, "protocol");
    if (p.contains("aggregation")) {
      cfg.protocol.aggregation = parse_aggregation(p.at("aggregation").get<std::string>());
    }
    if (p.contains("scheme") || p.contains("solver")) {
      ArmConfig arm{cfg.protocol.scheme, cfg.protocol.solver, cfg.eta, 0, 0};
      if (p.contains("scheme")) arm.scheme = parse_scheme(p.at("scheme").get<std::string>());
      if (p.contains("solver")) arm.solver = parse_solver(p.at("solver").get<std::string>());
      cfg.protocol.scheme = arm.scheme;
      cfg.protocol.solver = arm.solver;
      cfg.arms = {arm};
    }
  }
  if (doc.contains("arms")) {
    const auto& list = doc.at("arms");
    if (!list.is_array()) throw InvalidInput("config: 'arms' must be an array");
    cfg.arms.clear();
    for (const auto& a : list) {
      reject_unknown(a, {"scheme", "solver", "eta", "initial_pilots", "pilots"}, "arms[]");
      ArmConfig arm{cfg.protocol.scheme, cfg.protocol.solver, cfg.eta, 0, 0};
      if (a.contains("scheme")) arm.scheme = parse_scheme(a.at("scheme").get<std::string>());
      if (a.contains("solver")) arm.solver = parse_solver(a.at("solver").get<std::string>());
      read(a, "eta", arm.eta, "arms[]");
      read(a, "initial_pilots", arm.initial_pilots, "arms[]");
      read(a, "pilots", arm.pilots, "arms[]");
      cfg.arms.push_back(arm);
    }
  }
  if (doc.contains("diff_estimation")) {
    const auto& d = doc.at("diff_estimation");
    reject_unknown(d, {"quantile", "samples", "significance"}, "diff_estimation");
    read(d, "quantile", cfg.diff_quantile, "diff_estimation");
    read(d, "samples", cfg.diff_samples, "diff_estimation");
    read(d, "significance", cfg.diff_significance, "diff_estimation");
  }
  read(doc, "snr_db", cfg.snr_db, "root");
  read(doc, "trials", cfg.trials, "root");
  read(doc, "users", cfg.users, "root");
  read(doc, "seed", cfg.seed, "root");
  read(doc, "output", cfg.output_path, "root");
  read(doc, "exclude_init_slots", cfg.exclude_init_slots, "root");
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json arms = json::array();
  for (const auto& a : cfg.arms) {
    arms.push_back({{"scheme", std::string(to_string(a.scheme))},
                    {"solver", std::string(to_string(a.solver))},
                    {"eta", a.eta},
                    {"initial_pilots", a.initial_pilots},
                    {"pilots", a.pilots}});
  }
  const auto auto_or = [](int v) { return v > 0 ? json(v) : json("auto"); };
  return {
      {"channel",
       {{"antennas", cfg.channel.antennas},
        {"taps", cfg.channel.taps},
        {"activity", cfg.channel.activity},
        {"p01", cfg.channel.p01},
        {"doppler_hz", cfg.channel.doppler_hz},
        {"slot_s", cfg.channel.slot_s},
        {"innovation_var", cfg.channel.innovation_var}}},
      {"pilot", {{"n", cfg.n}, {"eta", cfg.eta}, {"init_scale", cfg.init_scale}}},
      {"protocol",
       {{"reinit_period", cfg.protocol.reinit_period},
        {"slots", cfg.protocol.slots},
        {"sparsity", auto_or(cfg.sparsity)},
        {"diff_sparsity", auto_or(cfg.diff_sparsity)},
        {"tolerance", cfg.protocol.tolerance},
        {"max_iters", cfg.protocol.max_iters},
        {"aggregation", std::string(to_string(cfg.protocol.aggregation))},
        {"downlink_noise_share", cfg.protocol.downlink_noise_share},
        {"uplink_noise_share", cfg.protocol.uplink_noise_share}}},
      {"arms", arms},
      {"diff_estimation",
       {{"quantile", cfg.diff_quantile},
        {"samples", cfg.diff_samples},
        {"significance", cfg.diff_significance}}},
      {"snr_db", cfg.snr_db},
      {"trials", cfg.trials},
      {"users", cfg.users},
      {"seed", cfg.seed},
      {"exclude_init_slots", cfg.exclude_init_slots},
  };
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc, std::move(base));
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string canonical = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ResolvedArm resolve_arm(const ArmConfig& arm, const ExperimentConfig& cfg) {
  ResolvedArm r;
  r.arm = arm;
  const int n = cfg.n;
  const int period = cfg.protocol.reinit_period;
  if (arm.pilots > 0) {
    r.pilots = arm.pilots;
    r.initial_pilots = arm.initial_pilots > 0 ? arm.initial_pilots : arm.pilots;
  } else {
    if (!(arm.eta > 0.0 && arm.eta <= 1.0)) {
      throw InvalidInput("config: arm eta must lie in (0, 1], got " + format_double(arm.eta));
    }
    if (arm.scheme == Scheme::DifferentialJoint) {
      // eta = (s P + (R - 1) P) / (R N) with P0 = s P.
      const double p = period * arm.eta * n / (cfg.init_scale + period - 1);
      r.pilots = std::max(1, static_cast<int>(std::lround(p)));
      r.initial_pilots = std::min(n, static_cast<int>(std::lround(cfg.init_scale * r.pilots)));
    } else {
      r.pilots = std::max(1, static_cast<int>(std::lround(arm.eta * n)));
      r.initial_pilots = r.pilots;
    }
  }
  if (r.pilots > r.initial_pilots || r.initial_pilots > n) {
    throw InvalidInput("config: arm needs P <= P0 <= N, got P=" + std::to_string(r.pilots) +
                       ", P0=" + std::to_string(r.initial_pilots) + ", N=" + std::to_string(n));
  }
  if (arm.scheme == Scheme::DifferentialJoint) {
    r.eta = average_overhead(r.initial_pilots, r.pilots, period, n);
  } else {
    r.eta = static_cast<double>(r.pilots) / n;
  }
  return r;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const Rng master(cfg.seed);

  SweepResult result;
  result.config_hash = config_hash(cfg);
  result.sparsity = resolved_sparsity(cfg);
  if (cfg.diff_sparsity > 0) {
    result.diff_sparsity = std::min(cfg.diff_sparsity, result.sparsity);
  } else {
    Rng diff_rng = master.split(kDiffStream);
    result.diff_estimate = estimate_diff_sparsity(cfg.channel, cfg.diff_quantile, cfg.diff_samples,
                                                  cfg.diff_significance, diff_rng);
    result.diff_sparsity = std::clamp(result.diff_estimate.k_diff, 1, result.sparsity);
  }

  ProtocolConfig base = cfg.protocol;
  base.sparsity = result.sparsity;
  base.diff_sparsity = result.diff_sparsity;

  // Arms with equal pilot counts share one scheme.
  std::vector<PilotScheme> schemes;
  for (const auto& arm : cfg.arms) {
    const ResolvedArm r = resolve_arm(arm, cfg);
    result.arms.push_back(r);
    Rng pilot_rng = master.split(kPilotStream)
                        .split(static_cast<std::uint64_t>(r.initial_pilots) * 1000003ULL +
                               static_cast<std::uint64_t>(r.pilots));
    schemes.push_back(build_scheme(cfg.n, cfg.channel.antennas, cfg.channel.taps,
                                   r.initial_pilots, r.pilots, pilot_rng));
  }

  const std::size_t n_arms = cfg.arms.size();
  const std::size_t n_snr = cfg.snr_db.size();
  const std::size_t n_cells = n_arms * n_snr;
  const auto n_trials = static_cast<std::size_t>(cfg.trials);
  // [cell][trial]
  std::vector<std::vector<double>> trial_nmse(n_cells, std::vector<double>(n_trials));
  std::vector<std::vector<double>> trial_rate(n_cells, std::vector<double>(n_trials));

  const RateMetric rate_metric(cfg.n, cfg.channel.taps);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto run_trial = [&](std::size_t trial) {
    std::vector<CompensatedSum> nmse_acc(n_cells), rate_acc(n_cells);
    std::vector<int> nmse_users(n_cells, 0);
    for (int user = 0; user < cfg.users; ++user) {
      Rng channel_rng = master.split(kChannelStream).split(trial).split(static_cast<std::uint64_t>(user));
      const auto trajectory = simulate_trajectory(cfg.channel, cfg.protocol.slots, channel_rng);
      for (std::size_t s = 0; s < n_snr; ++s) {
        const double snr = db_to_linear(cfg.snr_db[s]);
        const Rng noise = master.split(kNoiseStream).split(s).split(trial).split(
            static_cast<std::uint64_t>(user));
        for (std::size_t a = 0; a < n_arms; ++a) {
          ProtocolConfig pc = base;
          pc.scheme = cfg.arms[a].scheme;
          pc.solver = cfg.arms[a].solver;
          const auto traces = run_protocol(trajectory, schemes[a], pc, snr, noise);

          CompensatedSum slot_nmse, slot_rate;
          int nmse_slots = 0;
          int rate_slots = 0;
          for (const auto& tr : traces) {
            if (cfg.exclude_init_slots && tr.slot % pc.reinit_period == 0) continue;
            const auto& h = trajectory[static_cast<std::size_t>(tr.slot)].cir;
            slot_rate.add(rate_metric(h, tr.estimate, snr, cfg.channel.antennas));
            ++rate_slots;
            if (tr.has_nmse()) {
              slot_nmse.add(tr.nmse);
              ++nmse_slots;
            }
          }
          const std::size_t cell = a * n_snr + s;
          if (rate_slots > 0) rate_acc[cell].add(slot_rate.value() / rate_slots);
          if (nmse_slots > 0) {
            nmse_acc[cell].add(slot_nmse.value() / nmse_slots);
            ++nmse_users[cell];
          }
        }
      }
    }
    for (std::size_t c = 0; c < n_cells; ++c) {
      trial_nmse[c][trial] = nmse_users[c] > 0 ? nmse_acc[c].value() / nmse_users[c] : nan;
      trial_rate[c][trial] = rate_acc[c].value() / cfg.users;
    }
  };

  const int workers = std::min<int>(thread_count(), cfg.trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t t = next++; t < n_trials; t = next++) {
      try {
        run_trial(t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t a = 0; a < n_arms; ++a) {
    for (std::size_t s = 0; s < n_snr; ++s) {
      const std::size_t cell = a * n_snr + s;
      std::vector<double> valid;
      for (double x : trial_nmse[cell]) {
        if (x == x) valid.push_back(x);
      }
      const auto nmse_stats = summarize(valid);
      const auto rate_stats = summarize(trial_rate[cell]);
      ResultRow row;
      row.scheme = std::string(to_string(cfg.arms[a].scheme));
      row.solver = std::string(to_string(cfg.arms[a].solver));
      row.snr_db = cfg.snr_db[s];
      row.eta = result.arms[a].eta;
      row.nmse = nmse_stats.mean;
      row.nmse_db = nmse_db(nmse_stats.mean);
      row.rate = rate_stats.mean;
      row.trials = cfg.trials;
      row.ci95 = nmse_stats.ci95;
      row.rate_ci95 = rate_stats.ci95;
      row.config_hash = result.config_hash;
      row.trial_nmse = std::move(trial_nmse[cell]);
      row.trial_rate = std::move(trial_rate[cell]);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

void write_csv(std::ostream& os, const SweepResult& result, const ExperimentConfig& cfg,
               const CsvOptions& opts) {
  os << "# fddcs sweep\n";
  if (opts.timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << "# generated " << buf << "\n";
  }
  os << "# config_hash " << result.config_hash << "\n";
  os << "# aggregation " << to_string(cfg.protocol.aggregation) << "\n";
  os << "# noise per measurement = ||Theta h||^2 / (SNR * P); differential pilots carry 2x that\n";
  os << "# sparsity K=" << result.sparsity << " K'=" << result.diff_sparsity;
  if (cfg.diff_sparsity == 0) {
    os << " (K' = " << format_double(cfg.diff_quantile, "%g") << " quantile of significant taps, mean "
       << format_double(result.diff_estimate.mean_significant, "%.4f") << ")";
  }
  os << "\n";
  os << "# nmse averages " << (cfg.exclude_init_slots ? "exclude" : "include")
     << " re-initialization slots\n";
  for (const auto& arm : result.arms) {
    os << "# arm " << to_string(arm.arm.scheme) << "/" << to_string(arm.arm.solver)
       << " P0=" << arm.initial_pilots << " P=" << arm.pilots
       << " eta=" << format_double(arm.eta, "%.6f") << "\n";
  }
  os << kCsvHeader << "\n";
  for (const auto& r : result.rows) {
    os << r.scheme << ',' << r.solver << ',' << format_double(r.snr_db, "%g") << ','
       << format_double(r.eta, "%.6f") << ',' << format_double(r.nmse) << ','
       << format_double(r.nmse_db, "%.4f") << ',' << format_double(r.rate) << ',' << r.trials
       << ',' << format_double(r.ci95) << ',' << r.config_hash << "\n";
  }
}

}  // namespace fddcs
