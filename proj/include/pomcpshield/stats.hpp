#pragma once

#include <optional>
#include <vector>

namespace pomcpshield {

double mean(const std::vector<double>& xs);

// Sample standard deviation (n - 1 denominator); 0 when fewer than two values.
double sample_stddev(const std::vector<double>& xs);

// Two-sided critical value at the 5% level for Student's t with `df` degrees
// of freedom; the normal approximation 1.96 from df = 99 upward.
double critical_t_value(int df);

struct PairedTResult {
  double t = 0.0;
  bool significant = false;
  int n = 0;
};

// Two-sided paired t-test at the 5% level on differences d[i] = b[i] - a[i],
// so a positive t means b ran higher. Zero-variance differences degenerate:
// t = +/-infinity (significant) when the mean difference is nonzero, t = 0
// (not significant) when every difference is zero.
PairedTResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// (shielded - original) / |original| * 100; nullopt when original is 0.
std::optional<double> relative_increase_percent(double original, double shielded);

}  // namespace pomcpshield
