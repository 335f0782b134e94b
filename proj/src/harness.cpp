#include "subnyq/harness.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>

namespace subnyq {

namespace {

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
}

std::string fmt9(double v) { return fmt::format("{:.9g}", v); }

} // namespace

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SUBNYQ_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void ExperimentConfig::validate() const {
  if (!(fH > 0.0)) throw std::invalid_argument("fH must be positive");
  require_pairwise_coprime(factors);
  if (K_values.empty()) throw std::invalid_argument("at least one K is required");
  for (int K : K_values)
    if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (num_trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (snapshots < 1) throw std::invalid_argument("snapshots must be >= 1");
  if (snr_db.empty()) throw std::invalid_argument("at least one SNR is required");
  if (freq_gen.fixed.empty()) {
    if (!(freq_gen.min_separation > 0.0))
      throw std::invalid_argument("minimum frequency separation must be positive");
    if (!(freq_gen.amp_lo > 0.0) || freq_gen.amp_hi < freq_gen.amp_lo)
      throw std::invalid_argument("amplitude range must lie in (0, inf)");
    if (!(freq_gen.band_hi > freq_gen.band_lo))
      throw std::invalid_argument("frequency band is empty");
  }
  const auto N = window_len();
  const int kmax = *std::max_element(K_values.begin(), K_values.end());
  if (N <= kmax + 1)
    throw std::invalid_argument("window " + std::to_string(N) +
                                " too small for K=" + std::to_string(kmax));
}

Eigen::Index ExperimentConfig::window_len() const {
  const int a = *std::min_element(factors.begin(), factors.end());
  if (window) return (*window / a) * a;
  return default_screen_window(a);
}

std::size_t ExperimentConfig::samples_per_channel() const {
  return static_cast<std::size_t>(snapshots + window_len() - 1);
}

ExperimentConfig success_sweep_defaults() { return ExperimentConfig{}; }

ExperimentConfig mse_sweep_defaults() {
  ExperimentConfig cfg;
  cfg.K_values = {3};
  cfg.snr_db = {10.0, 15.0, 20.0, 25.0, 30.0};
  return cfg;
}

double mse_metric(std::span<const double> estimated, std::span<const double> truth) {
  if (estimated.size() != truth.size())
    throw std::invalid_argument("estimate and truth lengths differ");
  if (truth.empty()) throw std::invalid_argument("empty frequency lists");
  std::vector<double> e(estimated.begin(), estimated.end());
  std::vector<double> t(truth.begin(), truth.end());
  std::sort(e.begin(), e.end());
  std::sort(t.begin(), t.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) sum += (e[k] - t[k]) * (e[k] - t[k]);
  return std::sqrt(sum) / static_cast<double>(t.size());
}

SignalSpec draw_trial_signal(const ExperimentConfig& cfg, int K, int trial,
                             double snr_db) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed ^ static_cast<std::uint64_t>(trial)),
                    static_cast<std::uint32_t>((cfg.seed ^ static_cast<std::uint64_t>(trial)) >> 32),
                    static_cast<std::uint32_t>(K)};
  std::mt19937_64 rng(seq);
  const auto& gen = cfg.freq_gen;

  SignalSpec spec;
  spec.fH = cfg.fH;
  std::vector<double> freqs;
  if (!gen.fixed.empty()) {
    freqs.assign(gen.fixed.begin(), gen.fixed.end());
    if (static_cast<int>(freqs.size()) != K)
      throw std::invalid_argument("fixed frequency list does not match K");
  } else {
    const double lo = std::max(gen.band_lo, 0.0);
    const double hi = std::min(gen.band_hi, cfg.fH);
    std::uniform_real_distribution<double> uf(lo, hi);
    int attempts = 0;
    while (static_cast<int>(freqs.size()) < K) {
      if (++attempts > 100000)
        throw std::runtime_error("cannot place tones with the requested separation");
      const double f = uf(rng);
      if (!(f > 0.0 && f < cfg.fH)) continue;
      const bool clear = std::all_of(freqs.begin(), freqs.end(), [&](double g) {
        return std::abs(f - g) > gen.min_separation;
      });
      if (clear) freqs.push_back(f);
    }
  }
  std::uniform_real_distribution<double> ua(gen.amp_lo, gen.amp_hi);
  std::uniform_real_distribution<double> up(0.0, 2.0 * std::numbers::pi);
  for (double f : freqs) {
    Sinusoid s;
    s.freq = f;
    s.amplitude = gen.fixed.empty() ? ua(rng) : 1.0;
    s.phase = up(rng);
    spec.components.push_back(s);
  }
  spec.seed = rng();
  spec.noise_variance =
      std::isinf(snr_db) ? 0.0 : noise_variance_for_snr(spec.components, snr_db);
  return spec;
}

std::vector<double> full_rate_baseline(const SignalSpec& spec, Eigen::Index K,
                                       Eigen::Index N, std::size_t num_samples) {
  const auto seq = synthesize(spec, ChannelConfig{1, 1}, num_samples);
  return fold_to_hertz(esprit(seq, K, N), spec.fH, 1);
}

TrialRecord run_trial(const ExperimentConfig& cfg, int K, int trial, double snr_db) {
  const auto start = std::chrono::steady_clock::now();
  const auto spec = draw_trial_signal(cfg, K, trial, snr_db);
  const auto N = cfg.window_len();
  const auto len = cfg.samples_per_channel();

  TrialRecord rec;
  rec.true_freqs = spec.frequencies();
  std::sort(rec.true_freqs.begin(), rec.true_freqs.end());
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<ChannelConfig> configs;
  for (int f : cfg.factors) configs.push_back({f, 1});
  const auto channels = synthesize_multichannel(spec, configs, len);
  try {
    PipelineOptions opts;
    opts.mode = cfg.mode;
    const auto res = run_pipeline(channels, K, N, opts);
    rec.estimated_freqs = res.final_freqs;
    rec.collision_flag = res.collision_flag;
  } catch (const DegenerateEstimate&) {
    rec.collision_flag = true;
  }
  rec.mse = rec.estimated_freqs.size() == rec.true_freqs.size()
                ? mse_metric(rec.estimated_freqs, rec.true_freqs)
                : inf;

  try {
    rec.baseline_freqs = full_rate_baseline(spec, K, N, len);
    std::sort(rec.baseline_freqs.begin(), rec.baseline_freqs.end());
    rec.baseline_mse = mse_metric(rec.baseline_freqs, rec.true_freqs);
  } catch (const DegenerateEstimate&) {
    rec.baseline_mse = inf;
  }

  rec.success = rec.mse < cfg.success_threshold;
  rec.baseline_success = rec.baseline_mse < cfg.success_threshold;
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg, int K, double snr_db) {
  cfg.validate();
  std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.num_trials));
  parallel_for(records.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    records[i] = run_trial(cfg, K, static_cast<int>(i), snr_db);
  });
  return records;
}

std::vector<SuccessRow> run_success_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<SuccessRow> rows;
  for (int K : cfg.K_values) {
    const auto recs = run_trials(cfg, K, cfg.snr_db.front());
    SuccessRow row;
    row.K = K;
    row.trials = cfg.num_trials;
    for (const auto& r : recs) {
      row.success_proposed += r.success ? 1.0 : 0.0;
      row.success_baseline += r.baseline_success ? 1.0 : 0.0;
    }
    row.success_proposed /= cfg.num_trials;
    row.success_baseline /= cfg.num_trials;
    rows.push_back(row);
  }
  return rows;
}

std::vector<MseRow> run_mse_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const int K = cfg.K_values.front();
  std::vector<MseRow> rows;
  for (double snr : cfg.snr_db) {
    const auto recs = run_trials(cfg, K, snr);
    MseRow row;
    row.snr_db = snr;
    for (const auto& r : recs) {
      row.mse_proposed += r.mse;
      row.mse_baseline += r.baseline_mse;
    }
    row.mse_proposed /= cfg.num_trials;
    row.mse_baseline /= cfg.num_trials;
    rows.push_back(row);
  }
  return rows;
}

ScenarioResult run_scenario(const SignalSpec& spec, const std::array<int, 3>& factors,
                            int snapshots, std::optional<Eigen::Index> window,
                            SelectionMode mode) {
  require_pairwise_coprime(factors);
  const int a = *std::min_element(factors.begin(), factors.end());
  const Eigen::Index N = window ? (*window / a) * a : default_screen_window(a);
  ScenarioResult out;
  std::vector<ChannelConfig> configs;
  for (int f : factors) configs.push_back({f, 1});
  out.channels = synthesize_multichannel(
      spec, configs, static_cast<std::size_t>(snapshots + N - 1));
  PipelineOptions opts;
  opts.mode = mode;
  out.pipeline = run_pipeline(out.channels, static_cast<Eigen::Index>(spec.K()), N, opts);
  return out;
}

void write_success_csv(std::ostream& out, std::span<const SuccessRow> rows) {
  out << "K,trials,success_proposed,success_baseline\n";
  for (const auto& r : rows)
    out << r.K << ',' << r.trials << ',' << fmt9(r.success_proposed) << ','
        << fmt9(r.success_baseline) << '\n';
}

void write_mse_csv(std::ostream& out, std::span<const MseRow> rows) {
  out << "snr_db,mse_proposed,mse_baseline\n";
  for (const auto& r : rows)
    out << fmt9(r.snr_db) << ',' << fmt9(r.mse_proposed) << ','
        << fmt9(r.mse_baseline) << '\n';
}

void write_scenario_csv(std::ostream& out, const PipelineResult& result) {
  out << "candidate_hz,stage2_score,stage3_score,combined,selected\n";
  for (std::size_t i = 0; i < result.eligible.candidates.size(); ++i)
    out << fmt9(result.eligible.candidates[i].freq) << ','
        << fmt9(result.stage_spectra[0].scores[i].normalized) << ','
        << fmt9(result.stage_spectra[1].scores[i].normalized) << ','
        << fmt9(result.combined[i]) << ',' << (result.selected[i] ? 1 : 0) << '\n';
}

} // namespace subnyq
