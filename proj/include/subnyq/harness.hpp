#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "subnyq/model.hpp"
#include "subnyq/screen.hpp"

namespace subnyq {

/// How a trial draws its tones: a fixed list, or uniform frequencies in
/// (band_lo, band_hi) with a minimum spacing and uniform amplitudes.
struct FrequencyGenerator {
  std::vector<double> fixed;  // non-empty selects the fixed list
  double band_lo = 0.0;
  double band_hi = 100.0;
  double min_separation = 0.1;
  double amp_lo = 0.1;
  double amp_hi = 1.0;
};

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

struct ExperimentConfig {
  double fH = 100.0;
  std::array<int, 3> factors{7, 8, 9};
  std::vector<int> K_values{1, 2, 3, 4, 5, 6, 7, 8};
  FrequencyGenerator freq_gen;
  int num_trials = 100;
  int snapshots = 100;
  std::optional<Eigen::Index> window;  // defaults to default_screen_window(min factor)
  std::vector<double> snr_db{20.0};    // kNoiseless for sigma^2 = 0
  std::uint64_t seed = 1;
  SelectionMode mode = SelectionMode::CombinedScore;
  double success_threshold = 0.05;
  unsigned threads = 0;  // 0: SUBNYQ_THREADS or hardware concurrency

  void validate() const;
  Eigen::Index window_len() const;
  std::size_t samples_per_channel() const;
};

/// Success-probability sweep over K (frequencies uniform in (0, 100) Hz,
/// fH = 100, factors 7/8/9, 100 snapshots, 20 dB).
ExperimentConfig success_sweep_defaults();
/// MSE sweep: same setup with K = 3 and SNR 10..30 dB in 5 dB steps.
ExperimentConfig mse_sweep_defaults();

struct TrialRecord {
  std::vector<double> true_freqs;
  std::vector<double> estimated_freqs;
  std::vector<double> baseline_freqs;
  double mse = 0.0;
  double baseline_mse = 0.0;
  bool success = false;
  bool baseline_success = false;
  bool collision_flag = false;
  double seconds = 0.0;
};

/// sqrt(sum_k (est_k - truth_k)^2) / K with both lists sorted ascending.
double mse_metric(std::span<const double> estimated, std::span<const double> truth);

/// Draws the signal for one trial; same (cfg.seed, K, trial) gives the same
/// tones and noise seed regardless of SNR.
SignalSpec draw_trial_signal(const ExperimentConfig& cfg, int K, int trial,
                             double snr_db);

TrialRecord run_trial(const ExperimentConfig& cfg, int K, int trial, double snr_db);

/// All trials for one (K, SNR), in trial order.
std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg, int K, double snr_db);

struct SuccessRow {
  int K = 0;
  int trials = 0;
  double success_proposed = 0.0;
  double success_baseline = 0.0;
};

struct MseRow {
  double snr_db = 0.0;
  double mse_proposed = 0.0;
  double mse_baseline = 0.0;
};

/// Uses cfg.snr_db.front() for every K.
std::vector<SuccessRow> run_success_sweep(const ExperimentConfig& cfg);
/// Uses cfg.K_values.front() at every SNR.
std::vector<MseRow> run_mse_sweep(const ExperimentConfig& cfg);

/// Conventional ESPRIT on a full-rate (factor 1) record of the same signal.
std::vector<double> full_rate_baseline(const SignalSpec& spec, Eigen::Index K,
                                       Eigen::Index N, std::size_t num_samples);

struct ScenarioResult {
  std::vector<ChannelSequence> channels;
  PipelineResult pipeline;
};

ScenarioResult run_scenario(const SignalSpec& spec, const std::array<int, 3>& factors,
                            int snapshots, std::optional<Eigen::Index> window,
                            SelectionMode mode);

void write_success_csv(std::ostream& out, std::span<const SuccessRow> rows);
void write_mse_csv(std::ostream& out, std::span<const MseRow> rows);
void write_scenario_csv(std::ostream& out, const PipelineResult& result);

/// Worker count: explicit, else SUBNYQ_THREADS, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

} // namespace subnyq
