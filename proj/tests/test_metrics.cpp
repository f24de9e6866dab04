#include "gstuda/core/errors.hpp"
#include "gstuda/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace gstuda;

TEST_CASE("l1 examples") {
    const ImageGrid a = test::random_grid(4, 4, 1, 0.0, 255.0);
    CHECK(l1(a, a) == 0.0);
    ImageGrid b = a;
    for (auto& v : b.values()) v += 3.0;
    CHECK(l1(b, a) == doctest::Approx(3.0));
    CHECK(l1(ImageGrid(1, 2, {1.0, 3.0}), ImageGrid(1, 2, {0.0, 0.0})) == 2.0);
    CHECK_THROWS_AS(l1(ImageGrid(2, 2), ImageGrid(2, 3)), DimensionMismatch);
}

TEST_CASE("psnr examples") {
    const ImageGrid a = test::random_grid(4, 4, 1, 0.0, 255.0);
    CHECK(psnr(a, a) == kPsnrCap);
    ImageGrid b = a;
    for (std::size_t n = 0; n < b.size(); ++n) b[n] += n % 2 == 0 ? 1.0 : -1.0; // MSE = 1
    CHECK(psnr(b, a) == doctest::Approx(48.1308).epsilon(1e-5));
    CHECK(std::abs(psnr(b, a) - 48.13) < 0.01);
    const ImageGrid zeros(2, 2, std::vector<double>(4, 0.0)), full(2, 2, std::vector<double>(4, 255.0));
    CHECK(psnr(full, zeros) == doctest::Approx(0.0));
}

TEST_CASE("ssim matches the windowed reference") {
    for (std::uint64_t s = 0; s < 4; ++s) {
        const ImageGrid a = test::random_grid(24, 19, 10 + s, 0.0, 255.0);
        ImageGrid b = a;
        const ImageGrid noise = test::random_grid(24, 19, 20 + s, -40.0, 40.0);
        for (std::size_t n = 0; n < b.size(); ++n) b[n] = std::clamp(b[n] + noise[n], 0.0, 255.0);
        CHECK(std::abs(ssim(b, a) - test::ssim_reference(b, a)) < 1e-9);
        CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    }
    const ImageGrid a = test::random_grid(16, 16, 3, 0.0, 255.0);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    ImageGrid reflected = a;
    for (auto& v : reflected.values()) v = 255.0 - v;
    CHECK(ssim(reflected, a) < 1.0);
    CHECK_THROWS_AS(ssim(ImageGrid(8, 8), ImageGrid(8, 8)), InvalidArgument);
}

TEST_CASE("ssim and psnr are invariant under joint affine rescaling") {
    const ImageGrid a = test::random_grid(16, 16, 5, 0.0, 255.0);
    const ImageGrid b = test::random_grid(16, 16, 6, 0.0, 255.0);
    const ImageGrid a2 = a.rescaled(-3.0, 7.0), b2 = b.rescaled(-3.0, 7.0);
    CHECK(ssim(a2, b2) == doctest::Approx(ssim(a, b)).epsilon(1e-10));
    CHECK(psnr(a2, b2) == doctest::Approx(psnr(a, b)).epsilon(1e-10));
    CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)).epsilon(1e-12));
}

TEST_CASE("paired t-test against the hand formula") {
    const double a[3] = {2, 3, 4}, b[3] = {1, 1, 2};
    const TTestResult r = paired_ttest_one_tailed({2, 3, 4}, {1, 1, 2});
    CHECK(std::abs(r.t - test::hand_t3(a, b)) < 1e-9);
    CHECK(std::abs(r.t - 5.0) < 1e-9);
    CHECK(r.df == 2);
    // one-tailed p for t = 5, df = 2: 0.5 * (1 - 5 / sqrt(27))
    CHECK(r.p == doctest::Approx(0.5 * (1.0 - 5.0 / std::sqrt(27.0))).epsilon(1e-10));
    CHECK_FALSE(r.degenerate);

    const TTestResult flip = paired_ttest_one_tailed({1, 1, 2}, {2, 3, 4});
    CHECK(flip.t == doctest::Approx(-5.0));
    CHECK(flip.p == doctest::Approx(1.0 - r.p));

    const TTestResult same = paired_ttest_one_tailed({1, 2, 3}, {1, 2, 3});
    CHECK(same.t == 0.0);
    CHECK(same.p == 0.5);
    CHECK(same.degenerate);

    const TTestResult pos = paired_ttest_one_tailed({2, 3, 4, 5}, {1, 2, 3, 4});
    CHECK(pos.degenerate);
    CHECK(pos.p == 0.0);
    CHECK(paired_ttest_one_tailed({1, 2}, {2, 3}).p == 1.0);
    CHECK_THROWS_AS(paired_ttest_one_tailed({1}, {1}), InvalidArgument);
    CHECK_THROWS_AS(paired_ttest_one_tailed({1, 2}, {1}), DimensionMismatch);
}

namespace {

Dataset target_with_truth(std::size_t n, bool hidden) {
    std::vector<UnpairedSample> s;
    for (std::size_t i = 0; i < n; ++i) {
        ImageGrid truth = test::random_grid(16, 16, 50 + i, 0.0, 255.0);
        if (hidden) s.emplace_back(test::random_grid(16, 16, 70 + i, 0.0, 255.0), "t0", truth);
        else s.emplace_back(test::random_grid(16, 16, 70 + i, 0.0, 255.0), "t0");
    }
    return Dataset(std::move(s), 1);
}

std::vector<ImageGrid> truths(std::size_t n) {
    std::vector<ImageGrid> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(test::random_grid(16, 16, 50 + i, 0.0, 255.0));
    return v;
}

} // namespace

TEST_CASE("evaluation against hidden targets") {
    const Dataset target = target_with_truth(3, true);
    const auto perfect = truths(3);
    std::vector<ImageGrid> noisy = perfect;
    for (auto& g : noisy)
        for (auto& v : g.values()) v = std::min(255.0, v + 2.0);
    const MetricsReport rep = evaluate({{"truth", perfect}, {"noisy", noisy}}, target, "fp");
    CHECK(rep.order == std::vector<std::string>{"truth", "noisy"});
    const auto& t = rep.per_method.at("truth");
    CHECK(t.mean.l1 == 0.0);
    CHECK(t.mean.ssim == doctest::Approx(1.0));
    CHECK(t.mean.psnr == kPsnrCap);
    CHECK(rep.per_method.at("noisy").per_sample.size() == 3);

    CHECK_THROWS_AS(score(perfect, target_with_truth(3, false)), Error);
    CHECK_THROWS_AS(score({perfect[0]}, target), DimensionMismatch);
    CHECK_THROWS_AS(evaluate({{"a", perfect}, {"a", perfect}}, target), InvalidArgument);
}

TEST_CASE("aggregation, significance and report files") {
    const Dataset target = target_with_truth(3, true);
    const auto perfect = truths(3);
    std::vector<MetricsReport> reports;
    for (double off : {1.0, 3.0}) {
        std::vector<ImageGrid> ref = perfect, other = perfect;
        for (std::size_t i = 0; i < 3; ++i) {
            for (auto& v : ref[i].values()) v = std::min(255.0, v + off * 0.5 + 0.1 * static_cast<double>(i));
            for (auto& v : other[i].values()) v = std::min(255.0, v + off * 2.0 + 0.3 * static_cast<double>(i));
        }
        reports.push_back(evaluate({{"ref", ref}, {"other", other}}, target));
    }
    const auto rows = aggregate(reports, {"other", "ref"});
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].method == "other");
    CHECK(rows[0].metric == Metric::l1);
    CHECK(rows[0].runs == 2);
    const double l1a = reports[0].per_method.at("other").mean.l1, l1b = reports[1].per_method.at("other").mean.l1;
    CHECK(rows[0].mean == doctest::Approx((l1a + l1b) / 2));
    CHECK(rows[0].sd == doctest::Approx(std::abs(l1a - l1b) / std::sqrt(2.0)));

    const auto sig = significance(reports, "ref", {"ref", "other"});
    REQUIRE(sig.size() == 3);
    for (const auto& s : sig) {
        CHECK(s.n == 6);
        CHECK(s.test.t > 0.0); // reference is better on every metric
    }

    const auto dir = test::scratch_dir("metrics");
    write_report_csv(dir / "report.csv", rows);
    write_report_md(dir / "report.md", rows, {"ref", "other"});
    write_significance_csv(dir / "significance.csv", sig);
    std::ifstream in(dir / "report.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "method,metric,mean,sd,runs");
    std::stringstream md;
    md << std::ifstream(dir / "report.md").rdbuf();
    CHECK(md.str().find("| ref |") < md.str().find("| other |"));
}
