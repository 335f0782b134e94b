#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace subnyq {

using cdouble = std::complex<double>;

/// Thrown when a signal or channel description violates its invariants.
class InvalidSpec : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// One complex exponential component s = amplitude * exp(j*phase) at freq Hz.
struct Sinusoid {
  double freq = 0.0;
  double amplitude = 1.0;
  double phase = 0.0;

  cdouble complex_amplitude() const;
};

/// Ground truth for a multi-tone signal band-limited to [0, fH).
///
/// noise_variance is the per-sample variance of circular complex Gaussian
/// noise (each of the real and imaginary parts carries half of it).
struct SignalSpec {
  std::vector<Sinusoid> components;
  double fH = 0.0;
  double noise_variance = 0.0;
  std::uint64_t seed = 0;

  std::size_t K() const { return components.size(); }
  std::vector<double> frequencies() const;
  double signal_power() const;

  /// Throws InvalidSpec if any invariant is broken.
  void validate() const;
};

/// Noise variance that yields snr_db = 10 log10(sum |s_k|^2 / sigma^2).
double noise_variance_for_snr(const std::vector<Sinusoid>& components,
                              double snr_db);

/// A channel sampled at fH / factor, first sample index start_index.
struct ChannelConfig {
  int factor = 1;
  long start_index = 1;
};

struct ChannelSequence {
  ChannelConfig config;
  std::vector<cdouble> samples;
  double fH = 0.0;

  std::size_t size() const { return samples.size(); }
  /// Sampling rate of this channel in Hz.
  double rate() const { return fH / config.factor; }
};

ChannelSequence synthesize(const SignalSpec& spec, const ChannelConfig& config,
                           std::size_t num_samples);

std::vector<ChannelSequence>
synthesize_multichannel(const SignalSpec& spec,
                        const std::vector<ChannelConfig>& configs,
                        std::size_t num_samples);

/// Standard circular complex Gaussian sample (variance 1) keyed by
/// (seed, factor, n). Same key, same value, on every platform.
cdouble keyed_complex_normal(std::uint64_t seed, int factor, long n);

} // namespace subnyq
