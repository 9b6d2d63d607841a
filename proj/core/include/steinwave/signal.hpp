#pragma once

#include <cmath>

namespace steinwave::wave {

/// Time waveform driving a Dirichlet boundary. The solver needs the value and
/// its first two time derivatives at arbitrary stage times, so each kind
/// carries analytic derivatives.
struct SourceSignal {
  enum class Kind { GaussianPulse, Cosine, Zero };

  Kind kind = Kind::Zero;
  double amplitude = 0.0;
  double center = 0.0;     // pulse center time t0 [s]
  double width = 1.0;      // pulse width tau [s]
  double frequency = 0.0;  // angular frequency omega [rad/s], Cosine only
  double phase = 0.0;      // phase offset [rad], Cosine only

  static SourceSignal gaussian_pulse(double amplitude, double center, double width);
  static SourceSignal cosine(double amplitude, double angular_frequency, double phase = 0.0);
  static SourceSignal zero() { return {}; }

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
};

/// Traveling cosine wave A*cos(k x + sign * omega t) with analytic spatial
/// derivatives; `sign` is +1 or -1.
struct CosineWave {
  double amplitude = 1.0;
  double wavenumber = 1.0;
  double omega = 1.0;
  double sign = -1.0;

  double value(double x, double t) const {
    return amplitude * std::cos(wavenumber * x + sign * omega * t);
  }
  double dx(double x, double t) const {
    return -amplitude * wavenumber * std::sin(wavenumber * x + sign * omega * t);
  }
  double dxx(double x, double t) const {
    return -amplitude * wavenumber * wavenumber * std::cos(wavenumber * x + sign * omega * t);
  }
};

/// Normalized traveling Gaussian exp(-(x + sign c t)^2 / (2 sigma^2)) / (sqrt(2 pi) sigma).
struct GaussianWave {
  double sigma = 1.0;
  double speed = 1.0;
  double sign = -1.0;
  double center = 0.0;  // pulse center at t = 0

  double value(double x, double t) const {
    const double z = x + sign * speed * t - center;
    return std::exp(-z * z / (2.0 * sigma * sigma)) / (std::sqrt(2.0 * M_PI) * sigma);
  }
  double dx(double x, double t) const {
    const double z = x + sign * speed * t - center;
    return -z / (sigma * sigma) * value(x, t);
  }
  double dxx(double x, double t) const {
    const double z = x + sign * speed * t - center;
    return (z * z / (sigma * sigma) - 1.0) / (sigma * sigma) * value(x, t);
  }
};

}  // namespace steinwave::wave
