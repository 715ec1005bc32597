#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace rca {

// 100 * (treatment - baseline) / baseline. Throws unless baseline > 0.
double percent_gain(double baseline, double treatment);

double round2(double value);

// "+93.67", "-5.10", "0.00"
std::string format_gain(double gain);

struct WilcoxonResult {
    double p_value = 1.0;
    double w_plus = 0.0;     // sum of ranks of positive differences
    std::size_t n = 0;       // pairs left after dropping zero differences
    bool exact = false;
};

inline constexpr std::size_t kWilcoxonExactMax = 25;

/// Two-sided signed-rank test on xs - ys. Zero differences are dropped and
/// tied magnitudes share their average rank. n <= 25 uses the exact null
/// distribution, larger n the normal approximation with tie and continuity
/// corrections. If every difference is zero the p-value is 1.
/// Throws on length mismatch or fewer than 5 pairs (before or after the
/// zero drop, unless all differences are zero).
WilcoxonResult wilcoxon_signed_rank(std::span<const double> xs, std::span<const double> ys);

// Two-sided paired bootstrap on the mean difference, add-one smoothed.
double paired_bootstrap_p(std::span<const double> xs, std::span<const double> ys,
                          std::size_t resamples, std::uint64_t seed);

double mean_of(std::span<const double> values);
// Population standard deviation (divides by n).
double population_stddev(std::span<const double> values);

}  // namespace rca
