#include "trialogue/analytics/stats.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "trialogue/errors.hpp"

namespace trialogue::analytics {

namespace {

constexpr double kEps = 1e-15;
constexpr double kTiny = 1e-300;
constexpr int kMaxIterations = 100000;

// Continued fraction for I_x(a, b), modified Lentz evaluation.
double beta_fraction(double a, double b, double x) {
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) return h;
    }
    throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace

SummaryStat summarize(std::span<const double> values) {
    if (values.size() < 2) throw InsufficientData("a summary needs at least two values");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n), values.size()};
}

std::string format_mean_se(const SummaryStat& s, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, s.mean, decimals, s.standard_error);
    return buf;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw PreconditionError("incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw PreconditionError("incomplete beta needs 0 <= x <= 1");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
    return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw PreconditionError("t distribution needs df > 0");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return t > 0 ? 1.0 - tail : tail;
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw LengthMismatch("pearson: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + " values");
    const std::size_t n = x.size();
    if (n < 3) throw InsufficientData("pearson needs at least three pairs");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ConstantInput("pearson: an input is constant");

    // sqrt(s * s) == s exactly, so identical inputs give r == 1.
    double r = sxy / std::sqrt(sxx * syy);
    r = std::fmax(-1.0, std::fmin(1.0, r));
    CorrelationResult out{r, 0.0, n};
    if (std::fabs(r) == 1.0) return out;
    const double df = static_cast<double>(n - 2);
    // Two-sided p = I_{df/(df+t^2)}(df/2, 1/2); with t^2 = df r^2 / (1 - r^2)
    // the argument simplifies to 1 - r^2.
    out.p = regularized_incomplete_beta(df / 2.0, 0.5, 1.0 - r * r);
    return out;
}

GainRecord compute_gains(double pre, double post, double max_score) {
    if (!(max_score > 0.0)) throw ScoreOutOfRange("max_score must be positive");
    for (double s : {pre, post})
        if (!(s >= 0.0 && s <= max_score))
            throw ScoreOutOfRange("score " + std::to_string(s) + " is outside [0, " + std::to_string(max_score) + "]");
    GainRecord g{pre, post, max_score, post - pre, std::nullopt};
    if (pre < max_score) g.normalized = (post - pre) / (max_score - pre);
    return g;
}

}  // namespace trialogue::analytics
