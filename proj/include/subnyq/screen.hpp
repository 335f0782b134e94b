#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subnyq/model.hpp"
#include "subnyq/subspace.hpp"
#include "subnyq/unfold.hpp"

namespace subnyq {

/// Expected signature of eligible frequency (g + alpha/a) * fH over N
/// consecutive samples of a channel with factor screen_factor:
/// entries[n-1] = exp(j 2pi b n (g + alpha/a)), n = 1..N.
struct SteeringVector {
  CVector entries;
  double g = 0.0;
  int alpha = 0;
};

SteeringVector steering(double g, int alpha, int unfold_factor, int screen_factor,
                        Eigen::Index N);

struct SpectrumPoint {
  double freq = 0.0;
  double value = 0.0;       // 1 / (v^H Ue Ue^H v)
  double normalized = 0.0;  // value / max value
};

/// One MUSIC-like pass over a discrete eligible set. scores[i] corresponds to
/// eligible.candidates[i].
struct PseudoSpectrum {
  std::vector<SpectrumPoint> scores;
  int screening_factor = 1;
};

/// Projection residuals below this fraction of |v|^2 are treated as exact
/// membership of the signal subspace, keeping P_MU finite.
inline constexpr double kResidualFloor = 1e-16;

PseudoSpectrum pseudo_spectrum(const EligibleSet& eligible,
                               const ChannelSequence& screen_seq, Eigen::Index K,
                               Eigen::Index N);

enum class SelectionMode { CombinedScore, PerStageIntersection };

std::string_view to_string(SelectionMode mode);
/// Accepts "combined" or "intersect".
SelectionMode parse_selection_mode(std::string_view text);

/// Largest multiple of factor not exceeding cap (at least factor itself).
Eigen::Index default_screen_window(int factor, Eigen::Index cap = 48);

/// ESPRIT on one channel, its eligible set, and the screen of that set
/// against another channel.
struct StageResult {
  FoldedEstimate folded;
  EligibleSet eligible;
  PseudoSpectrum spectrum;
};

StageResult screen_pair(const ChannelSequence& unfold_seq,
                        const ChannelSequence& screen_seq, Eigen::Index K,
                        Eigen::Index N);

struct PipelineOptions {
  SelectionMode mode = SelectionMode::CombinedScore;
  /// Channel to run ESPRIT on; defaults to the smallest factor.
  std::optional<std::size_t> unfold_channel;
  double tol_dup = 1e-6;
};

struct PipelineResult {
  std::vector<double> final_freqs;  // ascending
  std::array<PseudoSpectrum, 2> stage_spectra;
  bool collision_flag = false;
  SelectionMode mode = SelectionMode::CombinedScore;

  // Diagnostics.
  std::size_t unfold_channel = 0;
  std::array<std::size_t, 2> screen_channels{};
  Eigen::Index window_len = 0;
  EligibleSet eligible;
  std::vector<double> combined;       // per candidate
  std::vector<bool> selected;         // per candidate
  std::size_t intersection_size = 0;  // per-stage-intersection mode only
  std::size_t filled_by_combined = 0;
};

/// Unfold one channel and screen its eligible set twice with the other two.
/// N is rounded down to a multiple of the unfolding factor.
PipelineResult run_pipeline(std::span<const ChannelSequence> sequences,
                            Eigen::Index K, Eigen::Index N,
                            const PipelineOptions& options = {});

/// Indices of the K largest scores, ties broken by lower frequency.
std::vector<std::size_t> top_k(std::span<const double> scores,
                               std::span<const double> freqs, std::size_t K);

} // namespace subnyq
