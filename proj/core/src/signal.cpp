#include "steinwave/signal.hpp"

namespace steinwave::wave {

SourceSignal SourceSignal::gaussian_pulse(double amplitude, double center, double width) {
  SourceSignal s;
  s.kind = Kind::GaussianPulse;
  s.amplitude = amplitude;
  s.center = center;
  s.width = width;
  return s;
}

SourceSignal SourceSignal::cosine(double amplitude, double angular_frequency, double phase) {
  SourceSignal s;
  s.kind = Kind::Cosine;
  s.amplitude = amplitude;
  s.frequency = angular_frequency;
  s.phase = phase;
  return s;
}

double SourceSignal::value(double t) const {
  switch (kind) {
    case Kind::GaussianPulse: {
      const double z = (t - center) / width;
      return amplitude * std::exp(-0.5 * z * z);
    }
    case Kind::Cosine:
      return amplitude * std::cos(frequency * t + phase);
    case Kind::Zero:
      return 0.0;
  }
  return 0.0;
}

double SourceSignal::d1(double t) const {
  switch (kind) {
    case Kind::GaussianPulse: {
      const double z = (t - center) / width;
      return -amplitude * z / width * std::exp(-0.5 * z * z);
    }
    case Kind::Cosine:
      return -amplitude * frequency * std::sin(frequency * t + phase);
    case Kind::Zero:
      return 0.0;
  }
  return 0.0;
}

double SourceSignal::d2(double t) const {
  switch (kind) {
    case Kind::GaussianPulse: {
      const double z = (t - center) / width;
      return amplitude * (z * z - 1.0) / (width * width) * std::exp(-0.5 * z * z);
    }
    case Kind::Cosine:
      return -amplitude * frequency * frequency * std::cos(frequency * t + phase);
    case Kind::Zero:
      return 0.0;
  }
  return 0.0;
}

}  // namespace steinwave::wave
