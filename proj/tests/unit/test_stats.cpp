#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rca/stats.hpp"

using namespace rca;
using testing::error_kind;

TEST_CASE("percent_gain and formatting") {
    CHECK(format_gain(percent_gain(10.27, 19.89)) == "+93.67");
    CHECK(format_gain(percent_gain(14.39, 19.89)) == "+38.22");
    CHECK(format_gain(percent_gain(7.5, 7.5)) == "0.00");
    CHECK(format_gain(percent_gain(20.0, 18.98)) == "-5.10");
    CHECK(round2(-0.001) == 0.0);
    CHECK_FALSE(std::signbit(round2(-0.001)));
    CHECK(error_kind([] { percent_gain(0.0, 1.0); }) == ErrorKind::InvalidArgument);
    CHECK(error_kind([] { percent_gain(-1.0, 1.0); }) == ErrorKind::InvalidArgument);
    CHECK(error_kind([] { percent_gain(NAN, 1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("wilcoxon: exact small cases") {
    const std::vector<double> xs{1, 2, 3, 4, 5, 6};
    CHECK(wilcoxon_signed_rank(xs, xs).p_value == 1.0);
    const std::vector<double> a{5, 6, 7, 8, 9}, b{4, 4, 4, 4, 4};
    const auto r = wilcoxon_signed_rank(a, b);
    CHECK(r.exact);
    CHECK(r.n == 5);
    CHECK(r.w_plus == 15.0);
    CHECK(r.p_value == doctest::Approx(0.0625));
    CHECK(wilcoxon_signed_rank(b, a).p_value == doctest::Approx(0.0625));
    // n=6, one negative of rank 1: P(W- <= 1) = 2/64, two-sided 4/64.
    const std::vector<double> c{1, 2, 3, 4, 5, -0.5}, z(6, 0.0);
    CHECK(wilcoxon_signed_rank(c, z).p_value == doctest::Approx(4.0 / 64.0));
}

TEST_CASE("wilcoxon: input errors") {
    const std::vector<double> four{1, 2, 3, 4}, five{1, 2, 3, 4, 5};
    CHECK(error_kind([&] { wilcoxon_signed_rank(four, four); }) == ErrorKind::InvalidArgument);
    CHECK(error_kind([&] { wilcoxon_signed_rank(five, four); }) == ErrorKind::InvalidArgument);
    const std::vector<double> mostly_zero{1, 0, 0, 0, 0, 0};
    CHECK(error_kind([&] { wilcoxon_signed_rank(mostly_zero, std::vector<double>(6, 0.0)); }) ==
          ErrorKind::InvalidArgument);
}

TEST_CASE("wilcoxon: normal branch, separation and monotonicity") {
    Rng rng(9);
    std::vector<double> base(100), noise(100);
    for (auto& v : base) v = 50 + 10 * (rng.uniform() - 0.5);
    for (auto& v : noise) v = 4 * (rng.uniform() - 0.5);
    double last = 1.1;
    for (double shift : {0.0, 0.2, 0.4, 0.8, 1.6}) {
        std::vector<double> y(100);
        for (std::size_t i = 0; i < 100; ++i) y[i] = base[i] + noise[i] - shift;
        const auto r = wilcoxon_signed_rank(base, y);
        CHECK_FALSE(r.exact);
        CHECK(r.p_value > 0.0);
        CHECK(r.p_value <= 1.0);
        CHECK(r.p_value < last);
        last = r.p_value;
    }
    std::vector<double> far(100);
    for (std::size_t i = 0; i < 100; ++i) far[i] = base[i] - 20 - noise[i];
    CHECK(wilcoxon_signed_rank(base, far).p_value < 1e-6);
}

TEST_CASE("paired bootstrap") {
    Rng rng(4);
    std::vector<double> x(60), y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        x[i] = 10 + rng.uniform();
        y[i] = x[i] + 0.001 * (rng.uniform() - 0.5);
    }
    const double p_null = paired_bootstrap_p(x, y, 2000, 1);
    CHECK(p_null > 0.05);
    CHECK(p_null <= 1.0);
    for (auto& v : y) v -= 1.0;
    const double p_sep = paired_bootstrap_p(x, y, 2000, 1);
    CHECK(p_sep == doctest::Approx(2.0 / 2001.0));  // both tails, add-one smoothed
    CHECK(paired_bootstrap_p(x, y, 2000, 1) == p_sep);
    CHECK(error_kind([&] { paired_bootstrap_p(x, y, 0, 1); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("mean and population stddev") {
    const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(mean_of(v) == 5.0);
    CHECK(population_stddev(v) == 2.0);
}
