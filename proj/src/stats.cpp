#include "rca/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "rca/util.hpp"

namespace rca {

double percent_gain(double baseline, double treatment) {
    if (!std::isfinite(baseline) || !std::isfinite(treatment))
        fail(ErrorKind::InvalidArgument, "percent gain needs finite scores");
    if (baseline <= 0.0) fail(ErrorKind::InvalidArgument, "percent gain needs a positive baseline");
    return 100.0 * (treatment - baseline) / baseline;
}

double round2(double value) {
    const double r = std::round(value * 100.0) / 100.0;
    return r == 0.0 ? 0.0 : r;  // no "-0.00"
}

std::string format_gain(double gain) {
    const double r = round2(gain);
    char buf[64];
    std::snprintf(buf, sizeof buf, r > 0.0 ? "+%.2f" : "%.2f", r);
    return buf;
}

namespace {

struct SignedRanks {
    std::vector<double> diffs;   // non-zero differences
    std::vector<double> ranks;   // average ranks of |diff|
    double tie_term = 0.0;       // sum of t^3 - t over tie groups
};

SignedRanks rank_differences(std::span<const double> xs, std::span<const double> ys) {
    SignedRanks out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - ys[i];
        if (!std::isfinite(d)) fail(ErrorKind::InvalidArgument, "non-finite score in paired sample");
        if (d != 0.0) out.diffs.push_back(d);
    }
    const std::size_t n = out.diffs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(out.diffs[a]) < std::fabs(out.diffs[b]);
    });
    out.ranks.assign(n, 0.0);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::fabs(out.diffs[order[j + 1]]) == std::fabs(out.diffs[order[i]])) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) out.ranks[order[k]] = avg;
        const double t = static_cast<double>(j - i + 1);
        out.tie_term += t * t * t - t;
        i = j + 1;
    }
    return out;
}

// Exact two-sided p from the null distribution of doubled rank sums; doubling
// keeps average ranks integral.
double exact_p(const SignedRanks& sr, double w_plus) {
    std::vector<long> doubled;
    long total = 0;
    for (double r : sr.ranks) {
        doubled.push_back(std::lround(2.0 * r));
        total += doubled.back();
    }
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (long r : doubled) {
        for (long s = reach; s >= 0; --s)
            counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
        reach += r;
    }
    const double all = std::ldexp(1.0, static_cast<int>(doubled.size()));
    const long w = std::lround(2.0 * w_plus);
    double lower = 0.0, upper = 0.0;
    for (long s = 0; s <= total; ++s) {
        if (s <= w) lower += counts[static_cast<std::size_t>(s)];
        if (s >= w) upper += counts[static_cast<std::size_t>(s)];
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / all);
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) fail(ErrorKind::InvalidArgument, "paired samples differ in length");
    if (xs.size() < 5) fail(ErrorKind::InvalidArgument, "signed-rank test needs at least 5 pairs");
    const auto sr = rank_differences(xs, ys);
    WilcoxonResult res;
    res.n = sr.diffs.size();
    if (res.n == 0) return res;
    if (res.n < 5)
        fail(ErrorKind::InvalidArgument, "fewer than 5 non-zero differences for the signed-rank test");
    for (std::size_t i = 0; i < res.n; ++i)
        if (sr.diffs[i] > 0.0) res.w_plus += sr.ranks[i];

    if (res.n <= kWilcoxonExactMax) {
        res.exact = true;
        res.p_value = exact_p(sr, res.w_plus);
        return res;
    }
    const double n = static_cast<double>(res.n);
    const double mean = n * (n + 1.0) / 4.0;
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - sr.tie_term / 48.0;
    double d = res.w_plus - mean;
    if (d > 0.0) d -= 0.5;
    else if (d < 0.0) d += 0.5;
    const double z = d / std::sqrt(var);
    res.p_value = std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)));
    return res;
}

double paired_bootstrap_p(std::span<const double> xs, std::span<const double> ys,
                          std::size_t resamples, std::uint64_t seed) {
    if (xs.size() != ys.size()) fail(ErrorKind::InvalidArgument, "paired samples differ in length");
    if (xs.empty()) fail(ErrorKind::InvalidArgument, "bootstrap needs at least one pair");
    if (resamples == 0) fail(ErrorKind::InvalidArgument, "bootstrap needs at least one resample");
    std::vector<double> d(xs.size());
    bool all_zero = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        d[i] = xs[i] - ys[i];
        all_zero = all_zero && d[i] == 0.0;
    }
    if (all_zero) return 1.0;
    Rng rng(seed);
    std::size_t le = 0, ge = 0;
    for (std::size_t b = 0; b < resamples; ++b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) sum += d[static_cast<std::size_t>(rng.below(d.size()))];
        if (sum <= 0.0) ++le;
        if (sum >= 0.0) ++ge;
    }
    const double r = static_cast<double>(resamples);
    const double tail = (static_cast<double>(std::min(le, ge)) + 1.0) / (r + 1.0);
    return std::min(1.0, 2.0 * tail);
}

double mean_of(std::span<const double> values) {
    if (values.empty()) fail(ErrorKind::InvalidArgument, "mean of an empty sample");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double population_stddev(std::span<const double> values) {
    const double m = mean_of(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

}  // namespace rca
