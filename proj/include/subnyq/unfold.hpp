#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace subnyq {

/// Factors that must be coprime are not.
class NotCoprime : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// The audit found a pair conflicting on all three channel pairs, which
/// pairwise-coprime factors make impossible for distinct in-band tones.
class InconsistentAudit : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

inline constexpr double kDefaultTolInt = 0.02;

bool pairwise_coprime(std::span<const int> factors);
void require_pairwise_coprime(std::span<const int> factors);

struct Provenance {
  int source_k = 0;
  int alpha = 0;
};

/// freq = folded[source_k] + alpha * fH / factor. merged lists further
/// (k, alpha) origins folded into this candidate by de-duplication.
struct EligibleCandidate {
  double freq = 0.0;
  int source_k = 0;
  int alpha = 0;
  std::vector<Provenance> merged;
};

struct EligibleSet {
  std::vector<double> folded;
  std::vector<EligibleCandidate> candidates;
  int factor = 1;
  double fH = 0.0;
};

/// All candidates folded[k] + alpha * fH / factor, alpha = 0 .. factor-1,
/// ordered by k then alpha. No de-duplication.
EligibleSet unfold(std::span<const double> folded, int factor, double fH);

/// Merges candidates closer than rel_eps * fH, keeping the first as the
/// representative and recording the rest in merged. Output sorted by freq.
EligibleSet merge_duplicates(EligibleSet set, double rel_eps = 1e-6);

struct BezoutSolution {
  int alpha = 0;
  int beta = 0;
};

/// Solves b*alpha - a*beta = rhs with 0 <= alpha < a, 0 <= beta < b via the
/// extended Euclidean algorithm. Empty when the bounded grid has no solution.
std::optional<BezoutSolution> solve_bezout(int a, int b, long rhs);

struct Match {
  int m = 0;  // index into setA.folded
  int l = 0;  // index into setB.folded
  int alpha = 0;
  int beta = 0;
  double freq = 0.0;
  double residual = 0.0;
};

struct MatchReport {
  std::vector<Match> pairs;
  /// |RHS - round(RHS)| for every (m, l), row-major in m.
  std::vector<double> residuals;
};

MatchReport bezout_match(const EligibleSet& setA, const EligibleSet& setB,
                         double tol_int = kDefaultTolInt);

struct ChannelPair {
  int first = 0;
  int second = 0;
  bool operator==(const ChannelPair&) const = default;
};

struct Conflict {
  int l = 0;
  int m = 0;
  ChannelPair channels;
  long multiple = 0;  // round((f_m - f_l) * xy / fH)
};

struct AmbiguityReport {
  std::vector<Conflict> conflicts;
};

/// Every pair l < m of freqs whose spacing is an integer multiple of
/// fH / (xy) for a channel pair (x, y) drawn from factors.
AmbiguityReport audit_ambiguity(std::span<const double> freqs,
                                const std::array<int, 3>& factors, double fH,
                                double tol_int = kDefaultTolInt);

} // namespace subnyq
