#include "subnyq/subspace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace subnyq {

namespace {

// Signal eigenvalues below this fraction of the largest are treated as zero.
constexpr double kRankTol = 1e-10;
// Fold-downs closer than this (in cycles/sample) are considered coincident.
constexpr double kCoincidentFraction = 1e-6;

double arg_to_fraction(cdouble eta) {
  double a = std::arg(eta);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  double g = a / (2.0 * std::numbers::pi);
  if (g >= 1.0) g -= 1.0;
  return g;
}

double circular_distance(double x, double y) {
  const double d = std::abs(x - y);
  return std::min(d, 1.0 - d);
}

} // namespace

Eigen::Index default_window_len(std::size_t sequence_len) {
  return std::min<Eigen::Index>(static_cast<Eigen::Index>(sequence_len / 2), 50);
}

SnapshotMatrix build_snapshots(const ChannelSequence& seq, Eigen::Index window_len) {
  const auto len = static_cast<Eigen::Index>(seq.size());
  if (window_len < 2)
    throw std::invalid_argument("window length must be >= 2");
  if (len < window_len)
    throw std::invalid_argument("sequence of length " + std::to_string(len) +
                                " is shorter than window " +
                                std::to_string(window_len));
  const Eigen::Index T = len - window_len + 1;
  SnapshotMatrix snap;
  snap.entries.resize(window_len, T);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index i = 0; i < window_len; ++i)
      snap.entries(i, t) = seq.samples[static_cast<std::size_t>(t + i)];
  return snap;
}

CovarianceEstimate estimate_covariance(const SnapshotMatrix& snap) {
  const auto T = snap.num_snapshots();
  if (T < 1) throw std::invalid_argument("covariance needs at least one snapshot");
  CovarianceEstimate cov;
  cov.num_snapshots = T;
  CMatrix r = snap.entries * snap.entries.adjoint() / static_cast<double>(T);
  cov.matrix = 0.5 * (r + r.adjoint());
  return cov;
}

SubspaceSplit eigen_split(const CovarianceEstimate& cov, Eigen::Index K) {
  const auto N = cov.matrix.rows();
  if (K < 1 || K >= N)
    throw std::invalid_argument("model order K=" + std::to_string(K) +
                                " must satisfy 1 <= K < N=" + std::to_string(N));
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(cov.matrix);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("Hermitian eigendecomposition failed");

  // Eigen returns ascending order.
  SubspaceSplit split;
  split.eigenvalues = solver.eigenvalues().reverse();
  CMatrix vecs = solver.eigenvectors().rowwise().reverse();
  split.signal_basis = vecs.leftCols(K);
  split.noise_basis = vecs.rightCols(N - K);
  return split;
}

FoldedEstimate esprit(const ChannelSequence& seq, Eigen::Index K,
                      Eigen::Index window_len) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (window_len <= K + 1)
    throw std::invalid_argument("ESPRIT window must exceed K + 1");
  if (static_cast<Eigen::Index>(seq.size()) < window_len + 1)
    throw std::invalid_argument("sequence too short for ESPRIT window");

  const auto cov = estimate_covariance(build_snapshots(seq, window_len));
  const auto split = eigen_split(cov, K);

  FoldedEstimate est;
  const double lead = split.eigenvalues(0);
  if (!(lead > 0.0))
    throw DegenerateEstimate("covariance is zero; no signal present");
  if (split.eigenvalues(K - 1) <= kRankTol * lead) est.collision = true;

  const auto& Us = split.signal_basis;
  const auto rows = window_len - 1;
  const CMatrix upper = Us.topRows(rows);
  const CMatrix lower = Us.bottomRows(rows);

  Eigen::JacobiSVD<CMatrix> svd(upper, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-8 * sv(0))
    throw DegenerateEstimate("shifted signal subspace is rank deficient");
  const CMatrix phi = svd.solve(lower);

  // Eigenvalues of phi from its Schur form; no eigenvectors are needed, so
  // defective phi in noise is harmless.
  Eigen::ComplexSchur<CMatrix> schur(phi, false);
  if (schur.info() != Eigen::Success)
    throw DegenerateEstimate("Schur decomposition of rotation operator failed");
  const CMatrix& tri = schur.matrixT();

  for (Eigen::Index k = 0; k < K; ++k) {
    est.eigenvalues.push_back(tri(k, k));
    est.fractions.push_back(arg_to_fraction(tri(k, k)));
  }
  for (std::size_t i = 0; i < est.fractions.size(); ++i)
    for (std::size_t j = i + 1; j < est.fractions.size(); ++j)
      if (circular_distance(est.fractions[i], est.fractions[j]) < kCoincidentFraction)
        est.collision = true;
  return est;
}

std::vector<double> fold_to_hertz(const FoldedEstimate& est, double fH, int factor) {
  if (factor < 1) throw std::invalid_argument("factor must be >= 1");
  const double rate = fH / factor;
  std::vector<double> out;
  out.reserve(est.fractions.size());
  for (double g : est.fractions) {
    double f = g * rate;
    if (f >= rate) f = 0.0;
    out.push_back(f);
  }
  return out;
}

} // namespace subnyq
