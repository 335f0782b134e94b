#include "subnyq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace subnyq {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 53-bit uniform in (0, 1].
double to_unit_open_closed(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Fractional part of f * factor * n / fH, computed so that the n-dependence
// does not lose precision for long records.
double folded_cycles(double freq, int factor, double fH, long n) {
  double per_sample = freq * factor / fH;
  per_sample -= std::floor(per_sample);
  double cycles = std::fmod(per_sample * static_cast<double>(n), 1.0);
  if (cycles < 0.0) cycles += 1.0;
  return cycles;
}

} // namespace

cdouble Sinusoid::complex_amplitude() const {
  return std::polar(amplitude, phase);
}

std::vector<double> SignalSpec::frequencies() const {
  std::vector<double> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(c.freq);
  return out;
}

double SignalSpec::signal_power() const {
  double p = 0.0;
  for (const auto& c : components) p += c.amplitude * c.amplitude;
  return p;
}

void SignalSpec::validate() const {
  if (components.empty())
    throw InvalidSpec("signal must contain at least one sinusoid");
  if (!(fH > 0.0) || !std::isfinite(fH))
    throw InvalidSpec("band limit fH must be positive and finite");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw InvalidSpec("noise variance must be nonnegative and finite");
  for (const auto& c : components) {
    if (!(c.freq > 0.0 && c.freq < fH))
      throw InvalidSpec("frequency " + std::to_string(c.freq) +
                        " Hz outside (0, fH)");
    if (!(c.amplitude > 0.0) || !std::isfinite(c.amplitude))
      throw InvalidSpec("amplitudes must be positive");
  }
  auto f = frequencies();
  std::sort(f.begin(), f.end());
  if (std::adjacent_find(f.begin(), f.end()) != f.end())
    throw InvalidSpec("frequencies must be pairwise distinct");
}

double noise_variance_for_snr(const std::vector<Sinusoid>& components,
                              double snr_db) {
  double p = 0.0;
  for (const auto& c : components) p += c.amplitude * c.amplitude;
  return p / std::pow(10.0, snr_db / 10.0);
}

cdouble keyed_complex_normal(std::uint64_t seed, int factor, long n) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ static_cast<std::uint64_t>(factor));
  key = splitmix64(key ^ static_cast<std::uint64_t>(n));
  const double u1 = to_unit_open_closed(splitmix64(key));
  const double u2 = to_unit_open_closed(splitmix64(key + 1));
  // Box-Muller with unit total variance: each part N(0, 1/2).
  const double r = std::sqrt(-std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

ChannelSequence synthesize(const SignalSpec& spec, const ChannelConfig& config,
                           std::size_t num_samples) {
  spec.validate();
  if (config.factor < 1) throw InvalidSpec("channel factor must be >= 1");
  if (config.start_index < 1) throw InvalidSpec("start index must be >= 1");
  if (num_samples < 1) throw InvalidSpec("num_samples must be >= 1");

  ChannelSequence seq;
  seq.config = config;
  seq.fH = spec.fH;
  seq.samples.assign(num_samples, cdouble{0.0, 0.0});

  const double sigma = std::sqrt(spec.noise_variance);
  for (std::size_t i = 0; i < num_samples; ++i) {
    const long n = config.start_index + static_cast<long>(i);
    cdouble x{0.0, 0.0};
    for (const auto& c : spec.components) {
      const double cyc = folded_cycles(c.freq, config.factor, spec.fH, n);
      x += c.complex_amplitude() *
           std::polar(1.0, 2.0 * std::numbers::pi * cyc);
    }
    if (sigma > 0.0) x += sigma * keyed_complex_normal(spec.seed, config.factor, n);
    seq.samples[i] = x;
  }
  return seq;
}

std::vector<ChannelSequence>
synthesize_multichannel(const SignalSpec& spec,
                        const std::vector<ChannelConfig>& configs,
                        std::size_t num_samples) {
  if (configs.empty()) throw InvalidSpec("at least one channel is required");
  std::vector<ChannelSequence> out;
  out.reserve(configs.size());
  for (const auto& cfg : configs) out.push_back(synthesize(spec, cfg, num_samples));
  return out;
}

} // namespace subnyq
