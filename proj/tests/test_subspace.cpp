#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "subnyq/subspace.hpp"

using namespace subnyq;

namespace {

ChannelSequence raw_sequence(std::vector<cdouble> samples) {
  ChannelSequence s;
  s.config = {1, 1};
  s.fH = 1.0;
  s.samples = std::move(samples);
  return s;
}

std::vector<double> sorted_hz(const FoldedEstimate& est, double fH, int factor) {
  auto f = fold_to_hertz(est, fH, factor);
  std::sort(f.begin(), f.end());
  return f;
}

} // namespace

TEST_CASE("build_snapshots: windowing arithmetic") {
  const auto seq = synthesize(oracle::tones({5.0}, 60.0), {1, 1}, 100);
  CHECK(build_snapshots(seq, 50).num_snapshots() == 51);

  const auto short_seq = synthesize(oracle::tones({5.0}, 60.0), {1, 1}, 8);
  const auto single = build_snapshots(short_seq, 8);
  REQUIRE(single.num_snapshots() == 1);
  for (int i = 0; i < 8; ++i) CHECK(single.entries(i, 0) == short_seq.samples[i]);

  const auto seq101 = synthesize(oracle::tones({5.0}, 60.0), {1, 1}, 101);
  const auto two = build_snapshots(seq101, 100);
  REQUIRE(two.num_snapshots() == 2);
  for (int i = 0; i < 99; ++i) CHECK(two.entries(i + 1, 0) == two.entries(i, 1));

  CHECK_THROWS_AS(build_snapshots(short_seq, 9), std::invalid_argument);
  CHECK_THROWS_AS(build_snapshots(short_seq, 1), std::invalid_argument);
}

TEST_CASE("estimate_covariance: outer product of all-ones") {
  SnapshotMatrix snap;
  snap.entries = CMatrix::Ones(2, 1);
  const auto cov = estimate_covariance(snap);
  CHECK(cov.matrix.isApprox(CMatrix::Ones(2, 2)));
  CHECK(cov.num_snapshots == 1);
}

TEST_CASE("estimate_covariance: noiseless single tone is rank one") {
  const auto seq = synthesize(oracle::tones({17.0}, 60.0), {3, 1}, 60);
  const auto cov = estimate_covariance(build_snapshots(seq, 12));
  const auto split = eigen_split(cov, 1);
  CHECK(split.eigenvalues(1) <= 1e-10 * split.eigenvalues(0));
}

TEST_CASE("estimate_covariance: white noise approaches identity") {
  std::vector<cdouble> x;
  for (long n = 1; n <= 10003; ++n) x.push_back(keyed_complex_normal(11, 1, n));
  const auto cov = estimate_covariance(build_snapshots(raw_sequence(x), 4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(std::abs(cov.matrix(i, j) - (i == j ? 1.0 : 0.0)) < 0.1);
}

TEST_CASE("estimate_covariance: Hermitian and PSD for random inputs") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<cdouble> x(40);
    for (auto& v : x) v = {g(rng), g(rng)};
    const auto cov = estimate_covariance(build_snapshots(raw_sequence(x), 2 + trial % 10));
    const double norm = cov.matrix.norm();
    CHECK((cov.matrix - cov.matrix.adjoint()).norm() <= 1e-15 * norm);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(cov.matrix);
    CHECK(es.eigenvalues().minCoeff() >= -1e-14 * norm);
  }
}

TEST_CASE("eigen_split: trivial matrices") {
  CovarianceEstimate id{CMatrix::Identity(2, 2), 1};
  const auto s = eigen_split(id, 1);
  CHECK(s.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(s.eigenvalues(1) == doctest::Approx(1.0));
  CHECK(std::abs(s.signal_basis.col(0).dot(s.noise_basis.col(0))) < 1e-12);

  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 1.0;
  const auto s2 = eigen_split({d, 1}, 1);
  CHECK(s2.eigenvalues(0) == doctest::Approx(4.0));
  CHECK(s2.eigenvalues(1) == doctest::Approx(1.0));
  CHECK(std::abs(s2.signal_basis(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(s2.signal_basis(1, 0)) < 1e-12);

  CHECK_THROWS_AS(eigen_split(id, 2), std::invalid_argument);
  CHECK_THROWS_AS(eigen_split(id, 0), std::invalid_argument);
}

TEST_CASE("eigen_split: two noiseless tones leave the rest at round-off") {
  const auto seq = synthesize(oracle::tones({25.0, 50.0}, 60.0), {3, 1}, 100);
  const auto split = eigen_split(estimate_covariance(build_snapshots(seq, 20)), 2);
  for (Eigen::Index i = 2; i < split.eigenvalues.size(); ++i)
    CHECK(split.eigenvalues(i) <= 1e-10 * split.eigenvalues(0));
  for (Eigen::Index i = 1; i < split.eigenvalues.size(); ++i)
    CHECK(split.eigenvalues(i) <= split.eigenvalues(i - 1));
}

TEST_CASE("eigen_split: orthonormal bases reconstruct the covariance") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto spec = oracle::tones(oracle::random_freqs(rng, 3, 1.0, 59.0, 1.0), 60.0, 0.1,
                              static_cast<std::uint64_t>(trial));
    const auto seq = synthesize(spec, {5, 1}, 80);
    const auto cov = estimate_covariance(build_snapshots(seq, 16));
    const auto s = eigen_split(cov, 3);
    const auto N = s.eigenvalues.size();
    CHECK((s.signal_basis.adjoint() * s.signal_basis - CMatrix::Identity(3, 3)).norm() < 1e-10);
    CHECK((s.noise_basis.adjoint() * s.noise_basis - CMatrix::Identity(N - 3, N - 3)).norm() <
          1e-10);
    CHECK((s.signal_basis.adjoint() * s.noise_basis).norm() < 1e-10);
    const CMatrix rec =
        s.signal_basis * s.eigenvalues.head(3).asDiagonal() * s.signal_basis.adjoint() +
        s.noise_basis * s.eigenvalues.tail(N - 3).asDiagonal() * s.noise_basis.adjoint();
    CHECK((rec - cov.matrix).norm() <= 1e-10 * cov.matrix.norm());
  }
}

TEST_CASE("esprit: {25, 50} Hz at factor 3 folds to {5, 10} Hz") {
  const auto seq = synthesize(oracle::tones({25.0, 50.0}, 60.0), {3, 1}, 147);
  const auto est = esprit(seq, 2, 48);
  auto g = est.fractions;
  std::sort(g.begin(), g.end());
  CHECK(g[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(g[1] == doctest::Approx(0.50).epsilon(1e-9));
  const auto hz = sorted_hz(est, 60.0, 3);
  CHECK(hz[0] == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(hz[1] == doctest::Approx(10.0).epsilon(1e-9));
  CHECK_FALSE(est.collision);
  for (const auto& eta : est.eigenvalues) CHECK(std::abs(eta) == doctest::Approx(1.0));
}

TEST_CASE("esprit: Nyquist-rate single tone gives f / fH") {
  for (double f : {0.7, 13.0, 29.5, 44.25, 59.9}) {
    const auto est = esprit(synthesize(oracle::tones({f}, 60.0), {1, 1}, 60), 1, 20);
    CHECK(std::abs(est.fractions[0] - f / 60.0) < 1e-9);
  }
}

TEST_CASE("esprit: {25, 33, 50} Hz at factor 3 matches the DFT oracle") {
  const auto seq = synthesize(oracle::tones({25.0, 33.0, 50.0}, 60.0), {3, 1}, 147);
  const auto hz = sorted_hz(esprit(seq, 3, 48), 60.0, 3);
  // Frozen from the oracle: f mod 20 Hz.
  const std::vector<double> expected{5.0, 10.0, 13.0};
  const auto long_seq = synthesize(oracle::tones({25.0, 33.0, 50.0}, 60.0), {3, 1}, 512);
  const auto peaks = oracle::dft_peaks(long_seq.samples, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(peaks[k] * 20.0 - expected[k]) < 1e-3);
    CHECK(std::abs(hz[k] - expected[k]) < 1e-9);
  }
}

TEST_CASE("esprit: noiseless fold-down exactness on random instances") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> kdist(1, 5), adist(1, 9);
  const double fH = 60.0;
  int checked = 0;
  while (checked < 200) {
    const int K = kdist(rng), a = adist(rng);
    const Eigen::Index N = 24;
    const double rate = fH / a;
    auto freqs = oracle::random_freqs(rng, static_cast<std::size_t>(K), 0.01, fH - 0.01, 0.01);
    std::vector<double> folds;
    for (double f : freqs) folds.push_back(oracle::fold(f, fH, a));
    // Require separated fold-downs (circularly) of at least rate / N.
    bool ok = true;
    for (std::size_t i = 0; i < folds.size(); ++i)
      for (std::size_t j = i + 1; j < folds.size(); ++j) {
        const double d = std::abs(folds[i] - folds[j]);
        if (std::min(d, rate - d) < rate / N) ok = false;
      }
    if (!ok) continue;
    ++checked;
    const auto seq = synthesize(oracle::tones(freqs, fH), {a, 1}, 80);
    const auto hz = sorted_hz(esprit(seq, K, N), fH, a);
    std::sort(folds.begin(), folds.end());
    for (std::size_t k = 0; k < folds.size(); ++k) {
      double d = std::abs(hz[k] - folds[k]);
      d = std::min(d, rate - d);
      CHECK(d <= 1e-6);
    }
  }
}

TEST_CASE("esprit: shared fold-down raises the collision flag") {
  // 25 and 45 Hz both fold to 5 Hz at factor 3.
  const auto seq = synthesize(oracle::tones({25.0, 45.0}, 60.0), {3, 1}, 147);
  CHECK(esprit(seq, 2, 48).collision);
}

TEST_CASE("esprit: preconditions") {
  const auto seq = synthesize(oracle::tones({25.0}, 60.0), {3, 1}, 20);
  CHECK_THROWS_AS(esprit(seq, 2, 3), std::invalid_argument);
  CHECK_THROWS_AS(esprit(seq, 1, 20), std::invalid_argument);
  CHECK_THROWS_AS(esprit(raw_sequence(std::vector<cdouble>(20)), 1, 8), DegenerateEstimate);
}

TEST_CASE("fold_to_hertz") {
  FoldedEstimate e;
  e.fractions = {0.25};
  CHECK(fold_to_hertz(e, 60.0, 3)[0] == doctest::Approx(5.0));
  e.fractions = {0.0};
  CHECK(fold_to_hertz(e, 60.0, 7)[0] == 0.0);
  e.fractions = {0.5};
  CHECK(fold_to_hertz(e, 60.0, 4)[0] == doctest::Approx(7.5));
  CHECK_THROWS_AS(fold_to_hertz(e, 60.0, 0), std::invalid_argument);
}

TEST_CASE("default window length") {
  CHECK(default_window_len(40) == 20);
  CHECK(default_window_len(1000) == 50);
}
