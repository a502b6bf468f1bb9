#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace distbell {

/// Kahan-Babuska (Neumaier) compensated accumulator. Cumulative probability
/// breakpoints and quantile integrals are sensitive to summation drift, so
/// everything that walks a merged breakpoint set goes through this.
class NeumaierSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Compensated cumulative sums of a normalized probability vector. The final
/// entry is pinned to exactly 1 so that two breakpoint sets always share
/// their right endpoint.
inline std::vector<double> cumulative_probabilities(std::span<const double> probs) {
  std::vector<double> cum(probs.size());
  NeumaierSum acc;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc.add(probs[i]);
    cum[i] = acc.value();
  }
  if (!cum.empty()) cum.back() = 1.0;
  return cum;
}

inline bool almost_equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace distbell
