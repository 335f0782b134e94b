#include "subnyq/screen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace subnyq {

SteeringVector steering(double g, int alpha, int unfold_factor, int screen_factor,
                        Eigen::Index N) {
  if (N < 1) throw std::invalid_argument("steering length must be >= 1");
  if (unfold_factor < 1 || screen_factor < 1)
    throw std::invalid_argument("factors must be >= 1");
  SteeringVector v;
  v.g = g;
  v.alpha = alpha;
  v.entries.resize(N);
  const long a = unfold_factor;
  const long b = screen_factor;
  for (Eigen::Index i = 0; i < N; ++i) {
    const long n = static_cast<long>(i) + 1;
    // Integer part of the phase handled exactly: b n alpha / a mod 1.
    const double coarse = static_cast<double>(((b * n * alpha) % a + a) % a) / a;
    double fine = std::fmod(static_cast<double>(b * n) * g, 1.0);
    double cycles = coarse + fine;
    cycles -= std::floor(cycles);
    v.entries(i) = std::polar(1.0, 2.0 * std::numbers::pi * cycles);
  }
  return v;
}

PseudoSpectrum pseudo_spectrum(const EligibleSet& eligible,
                               const ChannelSequence& screen_seq, Eigen::Index K,
                               Eigen::Index N) {
  const int a = eligible.factor;
  const int b = screen_seq.config.factor;
  if (N % a != 0)
    throw std::invalid_argument("screening window must be a multiple of the "
                                "unfolding factor");
  if (std::gcd(a, b) != 1)
    throw NotCoprime("screening factor must be coprime to the unfolding factor");
  if (K >= N)
    throw std::invalid_argument("noise subspace is empty: K must be < N");
  if (screen_seq.fH != eligible.fH)
    throw std::invalid_argument("screening channel uses a different band limit");

  const auto split = eigen_split(estimate_covariance(build_snapshots(screen_seq, N)), K);
  const CMatrix& Ue = split.noise_basis;
  const double floor = kResidualFloor * static_cast<double>(N);

  PseudoSpectrum ps;
  ps.screening_factor = b;
  ps.scores.reserve(eligible.candidates.size());
  double peak = 0.0;
  for (const auto& cand : eligible.candidates) {
    const double g = eligible.folded[static_cast<std::size_t>(cand.source_k)] / eligible.fH;
    const auto v = steering(g, cand.alpha, a, b, N);
    const double residual = (Ue.adjoint() * v.entries).squaredNorm();
    const double value = 1.0 / std::max(residual, floor);
    peak = std::max(peak, value);
    ps.scores.push_back({cand.freq, value, 0.0});
  }
  for (auto& s : ps.scores) s.normalized = s.value / peak;
  return ps;
}

std::string_view to_string(SelectionMode mode) {
  return mode == SelectionMode::CombinedScore ? "combined" : "intersect";
}

SelectionMode parse_selection_mode(std::string_view text) {
  if (text == "combined") return SelectionMode::CombinedScore;
  if (text == "intersect") return SelectionMode::PerStageIntersection;
  throw std::invalid_argument("unknown selection mode '" + std::string(text) +
                              "' (expected combined or intersect)");
}

Eigen::Index default_screen_window(int factor, Eigen::Index cap) {
  if (factor < 1) throw std::invalid_argument("factor must be >= 1");
  return std::max<Eigen::Index>(factor, (cap / factor) * factor);
}

std::vector<std::size_t> top_k(std::span<const double> scores,
                               std::span<const double> freqs, std::size_t K) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    if (scores[i] != scores[j]) return scores[i] > scores[j];
    return freqs[i] < freqs[j];
  });
  idx.resize(std::min(K, idx.size()));
  return idx;
}

StageResult screen_pair(const ChannelSequence& unfold_seq,
                        const ChannelSequence& screen_seq, Eigen::Index K,
                        Eigen::Index N) {
  StageResult stage;
  stage.folded = esprit(unfold_seq, K, N);
  const auto folded_hz =
      fold_to_hertz(stage.folded, unfold_seq.fH, unfold_seq.config.factor);
  stage.eligible =
      merge_duplicates(unfold(folded_hz, unfold_seq.config.factor, unfold_seq.fH));
  stage.spectrum = pseudo_spectrum(stage.eligible, screen_seq, K, N);
  return stage;
}

PipelineResult run_pipeline(std::span<const ChannelSequence> sequences,
                            Eigen::Index K, Eigen::Index N,
                            const PipelineOptions& options) {
  if (sequences.size() != 3)
    throw std::invalid_argument("pipeline needs exactly three channels");
  std::array<int, 3> factors{};
  for (std::size_t i = 0; i < 3; ++i) {
    factors[i] = sequences[i].config.factor;
    if (sequences[i].fH != sequences[0].fH)
      throw std::invalid_argument("all channels must share one band limit");
  }
  require_pairwise_coprime(factors);
  if (K < 1) throw std::invalid_argument("K must be >= 1");

  PipelineResult res;
  res.mode = options.mode;
  std::size_t u = options.unfold_channel.value_or(static_cast<std::size_t>(
      std::min_element(factors.begin(), factors.end()) - factors.begin()));
  if (u >= 3) throw std::invalid_argument("unfold channel index out of range");
  res.unfold_channel = u;
  std::size_t slot = 0;
  for (std::size_t i = 0; i < 3; ++i)
    if (i != u) res.screen_channels[slot++] = i;

  const int a = factors[u];
  const Eigen::Index window = (N / a) * a;
  if (window <= K + 1)
    throw std::invalid_argument("window rounded to a multiple of " +
                                std::to_string(a) + " is too small for K=" +
                                std::to_string(K));
  res.window_len = window;

  const auto& unfold_seq = sequences[u];
  const auto folded = esprit(unfold_seq, K, window);
  res.collision_flag = folded.collision;
  res.eligible = merge_duplicates(
      unfold(fold_to_hertz(folded, unfold_seq.fH, a), a, unfold_seq.fH),
      options.tol_dup);

  for (std::size_t s = 0; s < 2; ++s)
    res.stage_spectra[s] =
        pseudo_spectrum(res.eligible, sequences[res.screen_channels[s]], K, window);

  const std::size_t n = res.eligible.candidates.size();
  std::vector<double> freqs(n), first(n), second(n);
  res.combined.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    freqs[i] = res.eligible.candidates[i].freq;
    first[i] = res.stage_spectra[0].scores[i].normalized;
    second[i] = res.stage_spectra[1].scores[i].normalized;
    res.combined[i] = first[i] * second[i];
  }

  const auto k = static_cast<std::size_t>(K);
  std::vector<std::size_t> chosen;
  if (options.mode == SelectionMode::CombinedScore) {
    chosen = top_k(res.combined, freqs, k);
  } else {
    auto t1 = top_k(first, freqs, k);
    auto t2 = top_k(second, freqs, k);
    std::sort(t1.begin(), t1.end());
    std::sort(t2.begin(), t2.end());
    std::set_intersection(t1.begin(), t1.end(), t2.begin(), t2.end(),
                          std::back_inserter(chosen));
    res.intersection_size = chosen.size();
    for (std::size_t idx : top_k(res.combined, freqs, n)) {
      if (chosen.size() >= k) break;
      if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end()) {
        chosen.push_back(idx);
        ++res.filled_by_combined;
      }
    }
  }
  if (chosen.size() < k) res.collision_flag = true;

  res.selected.assign(n, false);
  for (std::size_t idx : chosen) {
    res.selected[idx] = true;
    res.final_freqs.push_back(freqs[idx]);
  }
  std::sort(res.final_freqs.begin(), res.final_freqs.end());
  return res;
}

} // namespace subnyq
