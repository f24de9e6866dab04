#include "gstuda/loss.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace gstuda;

namespace {

ImageGrid px(double v, double lo = -1e3, double hi = 1e3) { return ImageGrid(1, 1, {v}, lo, hi); }

ReliabilityMask cmask(const ImageGrid& w) { return {w, MaskKind::continuous, {}, {}}; }

} // namespace

TEST_CASE("source loss examples") {
    const ImageGrid a = test::random_grid(4, 4, 1);
    CHECK(source_loss(a, a) == 0.0);
    CHECK(source_loss(px(2.0), px(0.0)) == 4.0);
    const ImageGrid b = test::random_grid(4, 4, 2);
    ImageGrid b2 = a;
    for (std::size_t n = 0; n < a.size(); ++n) b2[n] = a[n] + 2.0 * (b[n] - a[n]);
    CHECK(source_loss(b2, a) == doctest::Approx(4.0 * source_loss(b, a)));
    CHECK_THROWS_AS(source_loss(ImageGrid(2, 2), ImageGrid(2, 3)), DimensionMismatch);
}

TEST_CASE("target loss examples") {
    const auto ones = ReliabilityMask::ones(1, 1);
    const TargetLoss t = target_loss(px(1.0), px(0.0, -10, 10), px(0.0), ones, 1.0);
    CHECK(t.value == 1.0);
    CHECK(t.data_term == 1.0);
    CHECK(t.logvar_term == 0.0);

    // unit variance and unit mask reduce to MSE for any beta
    const ImageGrid p = test::random_grid(4, 4, 3), q = test::random_grid(4, 4, 4);
    const ImageGrid zero(4, 4, -10.0, 10.0);
    CHECK(target_loss(p, zero, q, ReliabilityMask::ones(4, 4), 3.7).value == doctest::Approx(source_loss(p, q)));

    // zero mask leaves only the regularizer
    const ImageGrid lv = test::random_grid(4, 4, 5, -2.0, 2.0);
    const ReliabilityMask none = cmask(ImageGrid(4, 4, 0.0, 1.0));
    const TargetLoss z = target_loss(p, lv, q, none, 1.5);
    CHECK(z.data_term == 0.0);
    CHECK(z.value == doctest::Approx(1.5 * lv.mean()));
}

TEST_CASE("combined objective examples") {
    const ImageGrid y = px(2.0), label = px(0.0);
    const ImageGrid pred = px(1.0), lv = px(0.0, -10, 10), pseudo = px(0.0);
    const auto ones = ReliabilityMask::ones(1, 1);
    const SourceItem s{&y, &label};
    const TargetItem t{&pred, &lv, &pseudo, &ones};
    const LossBreakdown b = gst_total(std::span(&s, 1), std::span(&t, 1), {});
    CHECK(b.source_mse == 4.0);
    CHECK(b.target_data_term == 1.0);
    CHECK(b.total == 5.0);
    CHECK(b.beta == kDefaultBeta);
    CHECK(kDefaultBeta == 1.0);

    const LossBreakdown pre = gst_total(std::span(&s, 1), {}, {});
    CHECK(pre.total == 4.0);
    CHECK_THROWS_AS(gst_total({}, {}, {}), InvalidArgument);
    CHECK_THROWS_AS(gst_total({}, std::span(&t, 1), {}), InvalidArgument);
    LossOptions ablation;
    ablation.allow_empty_source = true;
    CHECK(gst_total({}, std::span(&t, 1), ablation).total == 1.0);
}

TEST_CASE("target term gradients match finite differences") {
    const std::size_t N = 16;
    const ImageGrid pred = test::random_grid(4, 4, 10, -1.0, 1.0);
    const ImageGrid lv = test::random_grid(4, 4, 11, -2.0, 2.0);
    const ImageGrid pseudo = test::random_grid(4, 4, 12, -1.0, 1.0);
    const ImageGrid mask = test::random_grid(4, 4, 13, 0.1, 1.0);
    for (bool outside : {false, true}) {
        LossOptions opt;
        opt.beta = 1.3;
        opt.mask_outside_norm = outside;
        std::vector<double> dp(N), dl(N), dm(N);
        auto value = [&](const std::vector<double>& p, const std::vector<double>& l, const std::vector<double>& m) {
            const auto v = target_term<double, double, double, double, double>(p, l, pseudo.values(), m, opt, 0.25);
            return v.data + opt.beta * v.logvar;
        };
        target_term<double, double, double, double, double>(pred.values(), lv.values(), pseudo.values(), mask.values(), opt,
                                                    0.25, dp, dl, dm);
        const double h = 1e-6;
        for (std::size_t n = 0; n < N; ++n) {
            for (int which = 0; which < 3; ++which) {
                std::vector<double> p = test::vec(pred), l = test::vec(lv), m = test::vec(mask);
                auto& v = which == 0 ? p : which == 1 ? l : m;
                v[n] += h;
                const double up = value(p, l, m);
                v[n] -= 2 * h;
                const double down = value(p, l, m);
                const double fd = (up - down) / (2 * h);
                const double an = which == 0 ? dp[n] : which == 1 ? dl[n] : dm[n];
                CHECK(std::abs(fd - an) <= 1e-4 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST_CASE("per-pixel loss is minimized at sigma squared equal to r squared") {
    LossOptions opt;
    for (double r : {0.05, 0.3, 1.0, 2.5, 7.0}) {
        const double step = 1e-3;
        double best_lv = 0.0, best = std::numeric_limits<double>::infinity();
        for (double lv = -9.0; lv <= 9.0; lv += step) {
            const double pred = 0.0, pseudo = r, m = 1.0;
            const auto v = target_term<double, double, double, double, double>(std::span(&pred, 1), std::span(&lv, 1),
                                                                       std::span(&pseudo, 1), std::span(&m, 1), opt, 1.0);
            const double value = v.data + v.logvar;
            if (value < best) {
                best = value;
                best_lv = lv;
            }
        }
        CHECK(std::abs(best_lv - std::log(r * r)) <= step);
    }
}

TEST_CASE("mask scaling enters squared") {
    const ImageGrid p = test::random_grid(4, 4, 20), q = test::random_grid(4, 4, 21);
    const ImageGrid lv = test::random_grid(4, 4, 22, -1.0, 1.0);
    const ImageGrid m = test::random_grid(4, 4, 23, 0.0, 0.5);
    ImageGrid m2 = m;
    for (auto& v : m2.values()) v *= 2.0;
    const double base = target_loss(p, lv, q, cmask(m), 1.0).data_term;
    CHECK(target_loss(p, lv, q, cmask(m2), 1.0).data_term == doctest::Approx(4.0 * base));
    CHECK(target_loss(p, lv, q, cmask(m2), 1.0, true).data_term ==
          doctest::Approx(2.0 * target_loss(p, lv, q, cmask(m), 1.0, true).data_term));
}

TEST_CASE("constrained form is bounded by the regularized loss") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(0.0, 3.0);
    for (std::uint64_t i = 0; i < 50; ++i) {
        const ImageGrid p = test::random_grid(4, 4, 100 + i), q = test::random_grid(4, 4, 200 + i);
        const ImageGrid lv = test::random_grid(4, 4, 300 + i, -4.0, 4.0);
        const ImageGrid m = test::random_grid(4, 4, 400 + i, 0.0, 1.0);
        const double beta = d(rng), tau = d(rng);
        const TargetLoss t = target_loss(p, lv, q, cmask(m), beta);
        const double lagrangian = t.data_term + beta * (t.logvar_term - tau);
        CHECK(lagrangian <= t.value + 1e-12);
    }
}

TEST_CASE("non-finite values name the pixel") {
    std::vector<double> p{0.0, 0.0, std::numeric_limits<double>::quiet_NaN(), 0.0};
    const std::vector<double> zeros(4, 0.0), ones(4, 1.0);
    try {
        target_term<double, double, double, double, double>(p, zeros, zeros, ones, {}, 1.0);
        FAIL("expected NonFiniteLoss");
    } catch (const NonFiniteLoss& e) {
        CHECK(e.pixel() == 2);
        CHECK(e.term() == "target_data");
    }
    CHECK_THROWS_AS((source_term<double, double>(p, zeros, 1.0)), NonFiniteLoss);
}

TEST_CASE("log-variance gradient vanishes outside the clamp band") {
    const double pred = 0.0, pseudo = 1.0, m = 1.0;
    for (double lv : {-12.0, 12.0}) {
        double dl = 1.0;
        target_term<double, double, double, double, double>(std::span(&pred, 1), std::span(&lv, 1), std::span(&pseudo, 1),
                                                    std::span(&m, 1), {}, 1.0, {}, std::span(&dl, 1), {});
        CHECK(dl == 0.0);
    }
}
