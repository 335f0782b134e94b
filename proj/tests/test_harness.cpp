#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "subnyq/harness.hpp"

using namespace subnyq;

TEST_CASE("mse_metric") {
  const std::vector<double> truth{10.0, 20.0};
  CHECK(mse_metric(truth, truth) == 0.0);
  const std::vector<double> est{20.04, 10.03};
  CHECK(mse_metric(est, truth) == doctest::Approx(0.025));
  CHECK(mse_metric(est, truth) < 0.05);
  const std::vector<double> one{5.06}, one_truth{5.0};
  CHECK(mse_metric(one, one_truth) == doctest::Approx(0.06));
  CHECK_FALSE(mse_metric(one, one_truth) < 0.05);
  CHECK_THROWS_AS(mse_metric(one, truth), std::invalid_argument);
}

TEST_CASE("sweep defaults") {
  const auto s = success_sweep_defaults();
  CHECK(s.fH == 100.0);
  CHECK(s.factors == std::array<int, 3>{7, 8, 9});
  CHECK(s.K_values.size() == 8);
  CHECK(s.snapshots == 100);
  CHECK(s.window_len() == 42);
  CHECK(s.samples_per_channel() == 141);
  CHECK(s.num_trials == 100);
  CHECK(s.snr_db == std::vector<double>{20.0});
  const auto m = mse_sweep_defaults();
  CHECK(m.K_values == std::vector<int>{3});
  CHECK(m.snr_db == std::vector<double>{10, 15, 20, 25, 30});
}

TEST_CASE("config validation") {
  auto cfg = success_sweep_defaults();
  cfg.factors = {4, 6, 9};
  CHECK_THROWS_AS(cfg.validate(), NotCoprime);
  cfg = success_sweep_defaults();
  cfg.freq_gen.min_separation = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = success_sweep_defaults();
  cfg.freq_gen.amp_lo = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = success_sweep_defaults();
  cfg.window = 7;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("draw_trial_signal: random tone setup") {
  const auto cfg = success_sweep_defaults();
  for (int trial = 0; trial < 50; ++trial) {
    const auto spec = draw_trial_signal(cfg, 8, trial, 20.0);
    CHECK(spec.K() == 8);
    CHECK_NOTHROW(spec.validate());
    auto f = spec.frequencies();
    std::sort(f.begin(), f.end());
    for (std::size_t i = 1; i < f.size(); ++i) CHECK(f[i] - f[i - 1] > 0.1);
    for (const auto& c : spec.components) {
      CHECK(c.amplitude >= 0.1);
      CHECK(c.amplitude <= 1.0);
    }
    CHECK(10.0 * std::log10(spec.signal_power() / spec.noise_variance) ==
          doctest::Approx(20.0));
    const auto quieter = draw_trial_signal(cfg, 8, trial, 30.0);
    CHECK(quieter.frequencies() == spec.frequencies());
    CHECK(quieter.seed == spec.seed);
  }
  CHECK(draw_trial_signal(cfg, 3, 1, kNoiseless).noise_variance == 0.0);
  CHECK(draw_trial_signal(cfg, 3, 1, 20).frequencies() !=
        draw_trial_signal(cfg, 3, 2, 20).frequencies());
}

TEST_CASE("noiseless K = 1 success probability is one") {
  auto cfg = success_sweep_defaults();
  cfg.K_values = {1};
  cfg.snr_db = {kNoiseless};
  cfg.num_trials = 40;
  const auto rows = run_success_sweep(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].success_proposed == 1.0);
  CHECK(rows[0].success_baseline == 1.0);
}

TEST_CASE("full-rate baseline is exact without noise") {
  auto cfg = success_sweep_defaults();
  cfg.freq_gen.min_separation = 100.0 / 42;
  for (int K = 1; K <= 8; ++K)
    for (int trial = 0; trial < 10; ++trial) {
      const auto spec = draw_trial_signal(cfg, K, trial, kNoiseless);
      auto truth = spec.frequencies();
      std::sort(truth.begin(), truth.end());
      auto est = full_rate_baseline(spec, K, 42, 141);
      std::sort(est.begin(), est.end());
      for (int k = 0; k < K; ++k) CHECK(std::abs(est[k] - truth[k]) <= 1e-6);
    }
}

TEST_CASE("noiseless MSE sweep is at round-off") {
  auto cfg = mse_sweep_defaults();
  cfg.snr_db = {kNoiseless};
  cfg.num_trials = 30;
  cfg.freq_gen.min_separation = 100.0 / 42;
  const auto rows = run_mse_sweep(cfg);
  CHECK(rows[0].mse_proposed <= 1e-6);
  CHECK(rows[0].mse_baseline <= 1e-6);
}

TEST_CASE("MSE decreases with SNR up to Monte Carlo noise") {
  auto cfg = mse_sweep_defaults();
  cfg.num_trials = 40;
  const auto rows = run_mse_sweep(cfg);
  REQUIRE(rows.size() == 5);
  int inversions = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].mse_proposed > rows[i - 1].mse_proposed) {
      ++inversions;
      CHECK(rows[i].mse_proposed <= 1.2 * rows[i - 1].mse_proposed);
    }
  CHECK(inversions <= 1);
}

TEST_CASE("batch success rates show binomial dispersion") {
  auto cfg = success_sweep_defaults();
  cfg.num_trials = 200;
  const auto recs = run_trials(cfg, 8, 20.0);
  const int batches = 10, per = 20;
  std::vector<double> rates;
  for (int b = 0; b < batches; ++b) {
    int s = 0;
    for (int i = 0; i < per; ++i) s += recs[static_cast<std::size_t>(b * per + i)].success;
    rates.push_back(static_cast<double>(s) / per);
  }
  const double p = std::accumulate(rates.begin(), rates.end(), 0.0) / batches;
  double var = 0.0;
  for (double r : rates) var += (r - p) * (r - p);
  var /= batches - 1;
  MESSAGE("p = " << p << ", batch variance = " << var);
  CHECK(p > 0.0);
  CHECK(var <= 3.0 * p * (1.0 - p) / per + 1e-12);
}

TEST_CASE("trial records are consistent") {
  auto cfg = success_sweep_defaults();
  cfg.num_trials = 20;
  for (const auto& r : run_trials(cfg, 4, 20.0)) {
    CHECK(r.mse >= 0.0);
    CHECK(r.success == (r.mse < 0.05));
    CHECK(r.baseline_success == (r.baseline_mse < 0.05));
    CHECK(r.true_freqs.size() == 4);
    CHECK(std::is_sorted(r.true_freqs.begin(), r.true_freqs.end()));
    CHECK(r.seconds >= 0.0);
  }
}

TEST_CASE("sweeps are deterministic regardless of thread count") {
  auto cfg = success_sweep_defaults();
  cfg.num_trials = 12;
  cfg.K_values = {2, 5};
  cfg.threads = 1;
  std::ostringstream a, b;
  write_success_csv(a, run_success_sweep(cfg));
  cfg.threads = 4;
  write_success_csv(b, run_success_sweep(cfg));
  CHECK(a.str() == b.str());

  auto m = mse_sweep_defaults();
  m.num_trials = 6;
  m.threads = 3;
  std::ostringstream c, d;
  write_mse_csv(c, run_mse_sweep(m));
  m.threads = 1;
  write_mse_csv(d, run_mse_sweep(m));
  CHECK(c.str() == d.str());
}

TEST_CASE("CSV schemas") {
  std::ostringstream s;
  const std::vector<SuccessRow> rows{{1, 100, 1.0, 0.99}, {2, 100, 0.123456789012, 2.0 / 3}};
  write_success_csv(s, rows);
  CHECK(s.str() ==
        "K,trials,success_proposed,success_baseline\n1,100,1,0.99\n2,100,0.123456789,0.666666667\n");

  std::ostringstream m;
  const std::vector<MseRow> mrows{{10.0, 0.00202056362123, 0.225}};
  write_mse_csv(m, mrows);
  CHECK(m.str() == "snr_db,mse_proposed,mse_baseline\n10,0.00202056362,0.225\n");
}

TEST_CASE("scenario: {25, 50} dump and a = 1 channel reduces to Nyquist ESPRIT") {
  const auto spec = oracle::tones({25.0, 50.0}, 60.0);
  const auto sc = run_scenario(spec, {3, 4, 5}, 100, std::nullopt, SelectionMode::CombinedScore);
  CHECK(sc.channels.size() == 3);
  CHECK(sc.channels[0].size() == 147);
  std::ostringstream out;
  write_scenario_csv(out, sc.pipeline);
  const std::string csv = out.str();
  CHECK(csv.rfind("candidate_hz,stage2_score,stage3_score,combined,selected\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(csv.find("25,1,1,1,1\n") != std::string::npos);
  CHECK(csv.find("50,1,1,1,1\n") != std::string::npos);
  CHECK(csv.find('\r') == std::string::npos);

  const auto nyq = run_scenario(oracle::tones({11.0, 37.0}, 60.0), {1, 4, 5}, 100, 40,
                                SelectionMode::CombinedScore);
  CHECK(nyq.pipeline.eligible.candidates.size() == 2);
  auto direct = fold_to_hertz(esprit(nyq.channels[0], 2, 40), 60.0, 1);
  std::sort(direct.begin(), direct.end());
  REQUIRE(nyq.pipeline.final_freqs.size() == 2);
  for (std::size_t k = 0; k < 2; ++k)
    CHECK(nyq.pipeline.final_freqs[k] == doctest::Approx(direct[k]));
}

TEST_CASE("resolve_threads honours an explicit request") {
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}
