#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "subnyq/harness.hpp"

#ifndef SUBNYQ_VERSION
#define SUBNYQ_VERSION "0.0.0"
#endif

namespace subnyq::cli {

namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

// Accepts "3", "1,2,5" and ranges such as "1-8".
std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      const auto dash = item.find('-', 1);
      if (dash == std::string::npos) {
        out.push_back(std::stoi(item));
      } else {
        const int lo = std::stoi(item.substr(0, dash));
        const int hi = std::stoi(item.substr(dash + 1));
        if (hi < lo) throw ConfigError("empty range '" + item + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("cannot parse integer list '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

std::array<int, 3> three_factors(const std::vector<int>& factors) {
  if (factors.size() != 3)
    throw ConfigError("--factors needs exactly three values a,b,c");
  std::array<int, 3> f{factors[0], factors[1], factors[2]};
  try {
    require_pairwise_coprime(f);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("factors must be pairwise coprime: ") + e.what());
  }
  return f;
}

SignalSpec make_spec(double fh, const std::vector<double>& freqs,
                     std::optional<double> snr_db, std::uint64_t seed) {
  SignalSpec spec;
  spec.fH = fh;
  spec.seed = seed;
  for (double f : freqs) spec.components.push_back({f, 1.0, 0.0});
  spec.noise_variance = snr_db ? noise_variance_for_snr(spec.components, *snr_db) : 0.0;
  try {
    spec.validate();
  } catch (const InvalidSpec& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

void write_atomically(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + tmp.string() + " for writing");
    body(f);
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw ConfigError("failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

void write_manifest(const fs::path& path, const std::string& command,
                    const std::string& config_echo, std::uint64_t seed,
                    const std::string& started, const std::vector<fs::path>& outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = SUBNYQ_VERSION;
  j["config"] = config_echo;
  j["seed"] = seed;
  j["started"] = started;
  j["finished"] = utc_now();
  j["outputs"] = nlohmann::json::array();
  for (const auto& p : outputs) j["outputs"].push_back(p.string());
  write_atomically(path, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

struct SignalFlags {
  double fh = 0.0;
  std::vector<int> factors;
  std::vector<double> freqs;
  std::optional<double> snr_db;
  bool noiseless = false;
  std::uint64_t seed = 1;

  void attach(CLI::App* cmd, bool factors_required) {
    cmd->add_option("--fh", fh, "Band limit fH in Hz")->required();
    auto* fo = cmd->add_option("--factors", factors, "Undersampling factors a,b,c")
                   ->delimiter(',');
    if (factors_required) fo->required();
    cmd->add_option("--freqs", freqs, "True tone frequencies in Hz")
        ->delimiter(',')
        ->required();
    cmd->add_option("--snr-db", snr_db, "SNR in dB (sum |s_k|^2 / sigma^2)");
    cmd->add_flag("--noiseless", noiseless, "No additive noise (default)");
    cmd->add_option("--seed", seed, "Noise seed")->capture_default_str();
  }

  std::optional<double> effective_snr() const {
    if (noiseless && snr_db) throw ConfigError("--noiseless conflicts with --snr-db");
    return noiseless ? std::nullopt : snr_db;
  }
};

int cmd_estimate(const SignalFlags& sig, std::optional<int> k, int snapshots,
                 std::optional<int> window, const std::string& mode_text,
                 const std::string& out_dir, bool porcelain, const std::string& config_echo,
                 std::ostream& out) {
  const std::string started = utc_now();
  const auto factors = three_factors(sig.factors);
  const auto spec = make_spec(sig.fh, sig.freqs, sig.effective_snr(), sig.seed);
  SelectionMode mode{};
  try {
    mode = parse_selection_mode(mode_text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const int K = k.value_or(static_cast<int>(spec.K()));
  if (K < 1) throw ConfigError("--k must be >= 1");
  if (snapshots < 1) throw ConfigError("--snapshots must be >= 1");

  const int a = *std::min_element(factors.begin(), factors.end());
  const Eigen::Index N = window ? (*window / a) * a : default_screen_window(a);
  if (N <= K + 1)
    throw ConfigError(fmt::format("window {} (multiple of {}) too small for K={}", N, a, K));

  std::vector<ChannelConfig> configs;
  for (int f : factors) configs.push_back({f, 1});
  const auto channels = synthesize_multichannel(
      spec, configs, static_cast<std::size_t>(snapshots + N - 1));
  PipelineOptions opts;
  opts.mode = mode;
  const auto res = run_pipeline(channels, K, N, opts);

  if (porcelain) {
    for (double f : res.final_freqs) fmt::print(out, "{:.9f}\n", f);
  } else {
    std::string line;
    for (std::size_t i = 0; i < res.final_freqs.size(); ++i)
      line += fmt::format("{}{:.9f}", i ? " " : "", res.final_freqs[i]);
    out << line << '\n';
    if (res.final_freqs.size() == spec.K())
      fmt::print(out, "mse={:.9g}\n", mse_metric(res.final_freqs, spec.frequencies()));
    if (res.collision_flag) out << "warning: fold-down collision detected\n";
  }

  if (!out_dir.empty()) {
    const fs::path csv = fs::path(out_dir) / "scenario.csv";
    write_atomically(csv, [&](std::ostream& o) { write_scenario_csv(o, res); });
    write_manifest(fs::path(out_dir) / "scenario.manifest.json", "estimate", config_echo,
                   sig.seed, started, {csv});
  }
  return res.collision_flag ? kDegenerate : kOk;
}

int cmd_audit(double fh, const std::vector<int>& factors_in,
              const std::vector<double>& freqs, double tol, std::ostream& out) {
  const auto factors = three_factors(factors_in);
  const auto report = audit_ambiguity(freqs, factors, fh, tol);
  fmt::print(out, "{:>3} {:>3} {:>16} {:>16} {:>8} {:>8}\n", "l", "m", "f_l", "f_m",
             "channels", "multiple");
  for (const auto& c : report.conflicts)
    fmt::print(out, "{:>3} {:>3} {:>16.9f} {:>16.9f} {:>8} {:>8}\n", c.l, c.m,
               freqs[static_cast<std::size_t>(c.l)], freqs[static_cast<std::size_t>(c.m)],
               fmt::format("{},{}", c.channels.first, c.channels.second), c.multiple);
  return kOk;
}

int cmd_synth(const SignalFlags& sig, int samples, const std::string& out_dir,
              const std::string& config_echo, std::ostream& out) {
  const std::string started = utc_now();
  if (sig.factors.empty()) throw ConfigError("--factors is required");
  for (int f : sig.factors)
    if (f < 1) throw ConfigError("factors must be >= 1");
  if (samples < 1) throw ConfigError("--samples must be >= 1");
  const auto spec = make_spec(sig.fh, sig.freqs, sig.effective_snr(), sig.seed);
  std::vector<ChannelConfig> configs;
  for (int f : sig.factors) configs.push_back({f, 1});
  const auto channels =
      synthesize_multichannel(spec, configs, static_cast<std::size_t>(samples));
  auto body = [&](std::ostream& o) {
    o << "factor,n,re,im\n";
    for (const auto& ch : channels)
      for (std::size_t i = 0; i < ch.size(); ++i)
        fmt::print(o, "{},{},{:.9g},{:.9g}\n", ch.config.factor,
                   ch.config.start_index + static_cast<long>(i), ch.samples[i].real(),
                   ch.samples[i].imag());
  };
  if (out_dir.empty()) {
    body(out);
    return kOk;
  }
  const fs::path csv = fs::path(out_dir) / "samples.csv";
  write_atomically(csv, body);
  write_manifest(fs::path(out_dir) / "samples.manifest.json", "synth", config_echo, sig.seed,
                 started, {csv});
  return kOk;
}

struct SweepFlags {
  std::optional<double> fh;
  std::vector<int> factors;
  std::string k;
  std::vector<double> snr_db;
  std::optional<int> trials;
  std::optional<int> snapshots;
  std::optional<int> window;
  std::optional<std::uint64_t> seed;
  std::string mode = "combined";
  std::string out = ".";

  void attach(CLI::App* cmd) {
    cmd->add_option("--fh", fh, "Band limit fH in Hz");
    cmd->add_option("--factors", factors, "Undersampling factors a,b,c")->delimiter(',');
    cmd->add_option("--k", k, "Model orders, e.g. 3 or 1-8 or 1,2,4");
    cmd->add_option("--snr-db", snr_db, "SNR list in dB")->delimiter(',');
    cmd->add_option("--trials", trials, "Trials per point");
    cmd->add_option("--snapshots", snapshots, "Snapshots T per channel");
    cmd->add_option("--window", window, "Window length N");
    cmd->add_option("--seed", seed, "Base seed");
    cmd->add_option("--mode", mode, "combined | intersect")->capture_default_str();
    cmd->add_option("--out", out, "Output directory")->capture_default_str();
  }

  void apply(ExperimentConfig& cfg) const {
    if (fh) cfg.fH = *fh;
    if (!factors.empty()) cfg.factors = three_factors(factors);
    if (!k.empty()) cfg.K_values = parse_int_list(k);
    if (!snr_db.empty()) cfg.snr_db = snr_db;
    if (trials) cfg.num_trials = *trials;
    if (snapshots) cfg.snapshots = *snapshots;
    if (window) cfg.window = *window;
    if (seed) cfg.seed = *seed;
    try {
      cfg.mode = parse_selection_mode(mode);
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

int cmd_sweep_success(const SweepFlags& flags, const std::string& config_echo,
                      std::ostream& err) {
  const std::string started = utc_now();
  auto cfg = success_sweep_defaults();
  flags.apply(cfg);
  std::vector<SuccessRow> rows;
  for (int K : cfg.K_values) {
    auto one = cfg;
    one.K_values = {K};
    const auto r = run_success_sweep(one);
    rows.push_back(r.front());
    fmt::print(err, "K={} proposed={:.3f} baseline={:.3f}\n", K, r.front().success_proposed,
               r.front().success_baseline);
  }
  const fs::path csv = fs::path(flags.out) / "success.csv";
  write_atomically(csv, [&](std::ostream& o) { write_success_csv(o, rows); });
  write_manifest(fs::path(flags.out) / "success.manifest.json", "sweep success",
                 config_echo, cfg.seed, started, {csv});
  return kOk;
}

int cmd_sweep_mse(const SweepFlags& flags, const std::string& config_echo,
                  std::ostream& err) {
  const std::string started = utc_now();
  auto cfg = mse_sweep_defaults();
  flags.apply(cfg);
  std::vector<MseRow> rows;
  for (double snr : cfg.snr_db) {
    auto one = cfg;
    one.snr_db = {snr};
    const auto r = run_mse_sweep(one);
    rows.push_back(r.front());
    fmt::print(err, "SNR={}dB proposed={:.3g} baseline={:.3g}\n", snr,
               r.front().mse_proposed, r.front().mse_baseline);
  }
  const fs::path csv = fs::path(flags.out) / "mse.csv";
  write_atomically(csv, [&](std::ostream& o) { write_mse_csv(o, rows); });
  write_manifest(fs::path(flags.out) / "mse.manifest.json", "sweep mse", config_echo,
                 cfg.seed, started, {csv});
  return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-tone frequency estimation from three sub-Nyquist channels", "subnyq"};
  app.set_config("--config", "", "Read options from an INI/TOML file");
  app.set_version_flag("--version", SUBNYQ_VERSION);
  app.require_subcommand(1);

  auto* estimate = app.add_subcommand("estimate", "Synthesize, then estimate the tones");
  SignalFlags est_sig;
  est_sig.attach(estimate, true);
  std::optional<int> est_k, est_window;
  int est_snapshots = 100;
  std::string est_mode = "combined", est_out;
  bool porcelain = false;
  estimate->add_option("--k", est_k, "Model order (defaults to the number of --freqs)");
  estimate->add_option("--snapshots", est_snapshots, "Snapshots T per channel")
      ->capture_default_str();
  estimate->add_option("--window", est_window, "Window length N");
  estimate->add_option("--mode", est_mode, "combined | intersect")->capture_default_str();
  estimate->add_option("--out", est_out, "Directory for scenario.csv and manifest");
  estimate->add_flag("--porcelain", porcelain, "One frequency per line, nothing else");

  auto* audit = app.add_subcommand("audit", "List frequency pairs ambiguous on a channel pair");
  double audit_fh = 0.0, audit_tol = kDefaultTolInt;
  std::vector<int> audit_factors;
  std::vector<double> audit_freqs;
  audit->add_option("--fh", audit_fh, "Band limit fH in Hz")->required();
  audit->add_option("--factors", audit_factors, "a,b,c")->delimiter(',')->required();
  audit->add_option("--freqs", audit_freqs, "Frequencies in Hz")->delimiter(',')->required();
  audit->add_option("--tol", audit_tol, "Integrality tolerance")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Write sub-Nyquist sample streams as CSV");
  SignalFlags synth_sig;
  synth_sig.attach(synth, true);
  int synth_samples = 147;
  std::string synth_out;
  synth->add_option("--samples", synth_samples, "Samples per channel")->capture_default_str();
  synth->add_option("--out", synth_out, "Directory for samples.csv (stdout if omitted)");

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweeps");
  sweep->require_subcommand(1);
  auto* success = sweep->add_subcommand("success", "Success probability versus K");
  SweepFlags success_flags;
  success_flags.attach(success);
  auto* mse = sweep->add_subcommand("mse", "Mean MSE versus SNR");
  SweepFlags mse_flags;
  mse_flags.attach(mse);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << SUBNYQ_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    err << app.help();
    return kConfigError;
  }

  try {
    if (*estimate)
      return cmd_estimate(est_sig, est_k, est_snapshots, est_window, est_mode, est_out,
                          porcelain, estimate->config_to_str(true), out);
    if (*audit) return cmd_audit(audit_fh, audit_factors, audit_freqs, audit_tol, out);
    if (*synth)
      return cmd_synth(synth_sig, synth_samples, synth_out, synth->config_to_str(true), out);
    if (*success)
      return cmd_sweep_success(success_flags, success->config_to_str(true), err);
    if (*mse) return cmd_sweep_mse(mse_flags, mse->config_to_str(true), err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DegenerateEstimate& e) {
    err << "error: degenerate estimate: " << e.what() << '\n';
    return kDegenerate;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

} // namespace subnyq::cli
