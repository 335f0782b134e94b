#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "subnyq/model.hpp"

namespace subnyq {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// ESPRIT could not form a well-posed rotational-invariance problem.
class DegenerateEstimate : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Hankel snapshot matrix: column t holds x(t) ... x(t+N-1).
struct SnapshotMatrix {
  CMatrix entries;

  Eigen::Index window_len() const { return entries.rows(); }
  Eigen::Index num_snapshots() const { return entries.cols(); }
};

struct CovarianceEstimate {
  CMatrix matrix;
  Eigen::Index num_snapshots = 0;
};

/// Eigenvalues descending; signal_basis holds the K dominant eigenvectors.
struct SubspaceSplit {
  CMatrix signal_basis;
  CMatrix noise_basis;
  Eigen::VectorXd eigenvalues;
};

/// ESPRIT output for one channel. fractions[k] = Arg(eta_k) / 2pi in [0, 1),
/// i.e. the folded frequency in units of the channel sampling rate.
struct FoldedEstimate {
  std::vector<double> fractions;
  std::vector<cdouble> eigenvalues;
  /// Signal subspace numerically rank deficient or two fold-downs coincide:
  /// two true tones likely share one fold-down.
  bool collision = false;
};

SnapshotMatrix build_snapshots(const ChannelSequence& seq, Eigen::Index window_len);

CovarianceEstimate estimate_covariance(const SnapshotMatrix& snap);

SubspaceSplit eigen_split(const CovarianceEstimate& cov, Eigen::Index K);

/// Least-squares ESPRIT on the maximal-overlap shifted subarrays.
FoldedEstimate esprit(const ChannelSequence& seq, Eigen::Index K,
                      Eigen::Index window_len);

/// Folded frequencies in Hz, each in [0, fH / factor).
std::vector<double> fold_to_hertz(const FoldedEstimate& est, double fH, int factor);

/// min(len / 2, 50).
Eigen::Index default_window_len(std::size_t sequence_len);

} // namespace subnyq
