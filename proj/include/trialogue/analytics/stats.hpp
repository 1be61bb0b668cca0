#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace trialogue::analytics {

struct SummaryStat {
    double mean = 0.0;
    // Sample standard deviation (n - 1 denominator) over sqrt(n).
    double standard_error = 0.0;
    std::size_t n = 0;
};

// Throws InsufficientData for fewer than two values.
SummaryStat summarize(std::span<const double> values);

// "1.71 ± 0.45"
std::string format_mean_se(const SummaryStat& s, int decimals = 2);

struct CorrelationResult {
    double r = 0.0;
    double p = 1.0;  // two-sided
    std::size_t n = 0;
};

// Product-moment correlation with a two-sided p-value from Student's t on
// n - 2 degrees of freedom. Throws LengthMismatch, InsufficientData (n < 3)
// and ConstantInput.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

// I_x(a, b) by Lentz's continued fraction, relative accuracy 1e-10 or better.
double regularized_incomplete_beta(double a, double b, double x);

// P(T <= t) for Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

struct GainRecord {
    double pre = 0.0;
    double post = 0.0;
    double max_score = 0.0;
    double absolute = 0.0;
    // Absent when pre == max_score.
    std::optional<double> normalized;
};

// absolute = post - pre, normalized = (post - pre) / (max_score - pre).
// Throws ScoreOutOfRange unless 0 <= pre, post <= max_score.
GainRecord compute_gains(double pre, double post, double max_score);

}  // namespace trialogue::analytics
