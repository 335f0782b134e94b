#include "subnyq/unfold.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

namespace subnyq {

namespace {

// Returns (g, x, y) with p*x + q*y = g = gcd(p, q).
std::tuple<long long, long long, long long> extended_gcd(long long p, long long q) {
  long long old_r = p, r = q;
  long long old_x = 1, x = 0;
  long long old_y = 0, y = 1;
  while (r != 0) {
    const long long quot = old_r / r;
    std::tie(old_r, r) = std::make_tuple(r, old_r - quot * r);
    std::tie(old_x, x) = std::make_tuple(x, old_x - quot * x);
    std::tie(old_y, y) = std::make_tuple(y, old_y - quot * y);
  }
  return {old_r, old_x, old_y};
}

long long floor_mod(long long v, long long m) {
  const long long r = v % m;
  return r < 0 ? r + m : r;
}

} // namespace

bool pairwise_coprime(std::span<const int> factors) {
  for (std::size_t i = 0; i < factors.size(); ++i)
    for (std::size_t j = i + 1; j < factors.size(); ++j)
      if (std::gcd(factors[i], factors[j]) != 1) return false;
  return true;
}

void require_pairwise_coprime(std::span<const int> factors) {
  for (int f : factors)
    if (f < 1) throw std::invalid_argument("undersampling factors must be >= 1");
  for (std::size_t i = 0; i < factors.size(); ++i)
    for (std::size_t j = i + 1; j < factors.size(); ++j)
      if (std::gcd(factors[i], factors[j]) != 1)
        throw NotCoprime("factors " + std::to_string(factors[i]) + " and " +
                         std::to_string(factors[j]) + " are not coprime (gcd " +
                         std::to_string(std::gcd(factors[i], factors[j])) + ")");
}

EligibleSet unfold(std::span<const double> folded, int factor, double fH) {
  if (factor < 1) throw std::invalid_argument("factor must be >= 1");
  if (!(fH > 0.0)) throw std::invalid_argument("fH must be positive");
  const double rate = fH / factor;

  EligibleSet set;
  set.factor = factor;
  set.fH = fH;
  set.folded.assign(folded.begin(), folded.end());
  set.candidates.reserve(folded.size() * static_cast<std::size_t>(factor));
  for (std::size_t k = 0; k < folded.size(); ++k) {
    const double f = folded[k];
    if (!(f >= 0.0 && f < rate))
      throw std::out_of_range("folded frequency " + std::to_string(f) +
                              " Hz outside [0, fH/factor)");
    for (int alpha = 0; alpha < factor; ++alpha)
      set.candidates.push_back({f + alpha * rate, static_cast<int>(k), alpha, {}});
  }
  return set;
}

EligibleSet merge_duplicates(EligibleSet set, double rel_eps) {
  const double eps = rel_eps * set.fH;
  auto& c = set.candidates;
  std::stable_sort(c.begin(), c.end(),
                   [](const auto& x, const auto& y) { return x.freq < y.freq; });
  std::vector<EligibleCandidate> out;
  out.reserve(c.size());
  for (auto& cand : c) {
    if (!out.empty() && cand.freq - out.back().freq < eps) {
      out.back().merged.push_back({cand.source_k, cand.alpha});
      for (const auto& p : cand.merged) out.back().merged.push_back(p);
      continue;
    }
    out.push_back(std::move(cand));
  }
  c = std::move(out);
  return set;
}

std::optional<BezoutSolution> solve_bezout(int a, int b, long rhs) {
  if (a < 1 || b < 1) throw std::invalid_argument("factors must be >= 1");
  const auto [g, s, t] = extended_gcd(b, a);  // b*s + a*t = 1
  if (g != 1) throw NotCoprime("Bezout matching requires coprime factors");
  const long long alpha0 = s * rhs;
  const long long beta0 = -t * rhs;
  const long long alpha = floor_mod(alpha0, a);
  const long long shift = (alpha - alpha0) / a;
  const long long beta = beta0 + static_cast<long long>(b) * shift;
  if (beta < 0 || beta >= b) return std::nullopt;
  return BezoutSolution{static_cast<int>(alpha), static_cast<int>(beta)};
}

MatchReport bezout_match(const EligibleSet& setA, const EligibleSet& setB,
                         double tol_int) {
  const int a = setA.factor;
  const int b = setB.factor;
  if (std::gcd(a, b) != 1)
    throw NotCoprime("Bezout matching requires coprime factors, got " +
                     std::to_string(a) + " and " + std::to_string(b));
  if (setA.fH != setB.fH)
    throw std::invalid_argument("eligible sets use different band limits");
  const double fH = setA.fH;

  MatchReport report;
  report.residuals.reserve(setA.folded.size() * setB.folded.size());
  for (std::size_t m = 0; m < setA.folded.size(); ++m) {
    for (std::size_t l = 0; l < setB.folded.size(); ++l) {
      const double rhs = static_cast<double>(a) * b *
                         (setB.folded[l] - setA.folded[m]) / fH;
      const double nearest = std::round(rhs);
      const double residual = std::abs(rhs - nearest);
      report.residuals.push_back(residual);
      if (residual > tol_int) continue;
      const auto sol = solve_bezout(a, b, static_cast<long>(nearest));
      if (!sol) continue;
      report.pairs.push_back({static_cast<int>(m), static_cast<int>(l), sol->alpha,
                              sol->beta, setA.folded[m] + sol->alpha * fH / a,
                              residual});
    }
  }
  return report;
}

AmbiguityReport audit_ambiguity(std::span<const double> freqs,
                                const std::array<int, 3>& factors, double fH,
                                double tol_int) {
  require_pairwise_coprime(factors);
  const std::array<ChannelPair, 3> pairs{{{factors[0], factors[1]},
                                          {factors[0], factors[2]},
                                          {factors[1], factors[2]}}};
  AmbiguityReport report;
  for (std::size_t l = 0; l < freqs.size(); ++l) {
    for (std::size_t m = l + 1; m < freqs.size(); ++m) {
      const double df = freqs[m] - freqs[l];
      int hits = 0;
      for (const auto& cp : pairs) {
        const double scaled = df * cp.first * cp.second / fH;
        const double nearest = std::round(scaled);
        if (std::abs(scaled - nearest) <= tol_int) {
          report.conflicts.push_back({static_cast<int>(l), static_cast<int>(m), cp,
                                      static_cast<long>(nearest)});
          ++hits;
        }
      }
      if (hits == 3)
        throw InconsistentAudit(
            "frequencies " + std::to_string(freqs[l]) + " and " +
            std::to_string(freqs[m]) +
            " Hz conflict on all three channel pairs; inputs must be distinct "
            "and within [0, fH)");
    }
  }
  return report;
}

} // namespace subnyq
