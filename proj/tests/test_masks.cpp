#include "gstuda/core/errors.hpp"
#include "gstuda/masks.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace gstuda;

namespace {

double count(const ReliabilityMask& m) {
    double s = 0.0;
    for (double v : m.weights.values()) s += v;
    return s;
}

} // namespace

TEST_CASE("rho schedule endpoints and midpoint") {
    const RhoSchedule s{0.30, 0.80, 100};
    CHECK(rho_at(s, 0) == doctest::Approx(0.30));
    CHECK(rho_at(s, 100) == doctest::Approx(0.80));
    CHECK(rho_at(s, 50) == doctest::Approx(0.55));
    CHECK(rho_at(s, 500) == 0.80);
    CHECK_THROWS_AS(rho_at(RhoSchedule{0.9, 0.2, 10}, 0), InvalidArgument);
}

TEST_CASE("binary mask hand example") {
    const ImageGrid u(2, 2, {0.1, 0.2, 0.5, 0.9}, 0.0, 1.0);
    const ReliabilityMask m = binary_mask(u, 0.5);
    CHECK(test::vec(m.weights) == std::vector<double>{1, 1, 0, 0});
    CHECK(*m.epsilon_used == 0.5);
    CHECK(*m.rho_used == 0.5);
    CHECK(count(binary_mask(u, 0.0)) == 0.0);
    const ReliabilityMask all = binary_mask(u, 1.0);
    CHECK(count(all) == 4.0);
    CHECK(std::isinf(*all.epsilon_used));
    CHECK_THROWS_AS(binary_mask(u, 1.1), InvalidArgument);
    CHECK_THROWS_AS(binary_mask(u, -0.1), InvalidArgument);
}

TEST_CASE("binary mask count is exact on random maps and under ties") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> rho_d(0.0, 1.0);
    for (std::uint64_t i = 0; i < 200; ++i) {
        ImageGrid u = test::random_grid(9, 11, i, 0.0, 3.0);
        if (i % 2 == 0)
            for (auto& v : u.values()) v = std::round(v); // heavy ties
        const double rho = rho_d(rng);
        const ReliabilityMask m = binary_mask(u, rho);
        CHECK(count(m) == std::floor(rho * 99.0));
        // selected pixels never have larger u than excluded ones
        for (std::size_t a = 0; a < u.size(); ++a)
            if (m.weights[a] == 1.0) CHECK(u[a] <= *m.epsilon_used);
    }
    // Ties resolved by ascending index.
    const ImageGrid flat(1, 5, std::vector<double>(5, 0.3), 0.0, 1.0);
    CHECK(test::vec(binary_mask(flat, 0.6).weights) == std::vector<double>{1, 1, 1, 0, 0});
}

TEST_CASE("binary mask depends only on the ranking") {
    for (std::uint64_t i = 0; i < 50; ++i) {
        const ImageGrid u = test::random_grid(8, 8, 1000 + i, 0.0, 2.0);
        ImageGrid sq = u, ex = u;
        for (auto& v : sq.values()) v = v * v;
        for (auto& v : ex.values()) v = std::exp(v);
        const auto base = test::vec(binary_mask(u, 0.4).weights);
        CHECK(test::vec(binary_mask(sq, 0.4).weights) == base);
        CHECK(test::vec(binary_mask(ex, 0.4).weights) == base);
    }
}

TEST_CASE("continuous mask values") {
    const ImageGrid u(1, 3, {0.0, std::log(2.0), 50.0}, 0.0, 100.0);
    const ReliabilityMask m = continuous_mask(u);
    CHECK(m.weights[0] == 1.0);
    CHECK(std::abs(m.weights[1] - 0.5) < 1e-12);
    CHECK(m.weights[2] > 0.0);
    CHECK(m.weights[2] < 1e-20);
    CHECK(m.kind == MaskKind::continuous);
    CHECK_THROWS_AS(continuous_mask(ImageGrid(1, 1, {-1.0}, -2.0, 2.0)), InvalidArgument);

    const ImageGrid u1 = test::random_grid(6, 6, 3, 0.0, 1.0);
    ImageGrid u2 = u1;
    for (auto& v : u2.values()) v += 0.1;
    const auto m1 = continuous_mask(u1), m2 = continuous_mask(u2);
    for (std::size_t n = 0; n < u1.size(); ++n) CHECK(m1.weights[n] >= m2.weights[n]);
}

TEST_CASE("attentive mask is the elementwise product") {
    const ImageGrid a = test::random_grid(8, 8, 1, 0.0, 1.0);
    const ReliabilityMask c = continuous_mask(test::random_grid(8, 8, 2, 0.0, 3.0));
    const ReliabilityMask m = attentive_mask(a, c);
    CHECK(m.kind == MaskKind::attentive);
    for (std::size_t n = 0; n < a.size(); ++n) {
        CHECK(m.weights[n] <= std::min(a[n], c.weights[n]));
        CHECK(m.weights[n] == a[n] * c.weights[n]);
    }
    const ImageGrid half(1, 1, {0.5}, 0.0, 1.0);
    const ReliabilityMask point{ImageGrid(1, 1, {0.8}, 0.0, 1.0), MaskKind::continuous, {}, {}};
    CHECK(attentive_mask(half, point).weights[0] == doctest::Approx(0.4));

    const ImageGrid ones(8, 8, std::vector<double>(64, 1.0), 0.0, 1.0);
    CHECK(test::vec(attentive_mask(ones, c).weights) == test::vec(c.weights));
    CHECK_THROWS_AS(attentive_mask(ImageGrid(4, 4, 0.0, 1.0), c), DimensionMismatch);
    CHECK_THROWS_AS(attentive_mask(a, m), InvalidArgument);
}

TEST_CASE("mask validation") {
    ReliabilityMask m{ImageGrid(1, 2, {0.5, 1.0}, 0.0, 1.0), MaskKind::binary, 0.5, 1.0};
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    m.weights[0] = 0.0;
    CHECK_NOTHROW(m.validate());
    m.rho_used.reset();
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    CHECK(count(ReliabilityMask::ones(3, 4)) == 12.0);
}
