#include "pomcpshield/stats.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace pomcpshield {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double sample_stddev(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double critical_t_value(int df) {
  static const double kByDf[] = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df < 1) throw std::invalid_argument("critical_t_value: df must be positive");
  if (df >= 99) return 1.96;
  if (df <= 30) return kByDf[df - 1];
  if (df >= 80) return 1.990;
  if (df >= 60) return 2.000;
  if (df >= 50) return 2.009;
  if (df >= 40) return 2.021;
  return kByDf[29];  // 31..39: the df=30 value (conservative)
}

PairedTResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("paired_t_test: sample sizes differ");
  }
  const int n = static_cast<int>(a.size());
  if (n < 2) throw std::invalid_argument("paired_t_test: need at least two pairs");

  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
  const double md = mean(d);
  const double sd = sample_stddev(d);

  PairedTResult result;
  result.n = n;
  if (sd == 0.0) {
    if (md == 0.0) return result;  // identical samples
    result.t = md > 0.0 ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
    result.significant = true;
    return result;
  }
  result.t = md / (sd / std::sqrt(static_cast<double>(n)));
  result.significant = std::fabs(result.t) > critical_t_value(n - 1);
  return result;
}

std::optional<double> relative_increase_percent(double original, double shielded) {
  if (original == 0.0) return std::nullopt;
  return (shielded - original) / std::fabs(original) * 100.0;
}

}  // namespace pomcpshield
