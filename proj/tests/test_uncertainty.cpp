#include "gstuda/core/errors.hpp"
#include "gstuda/uncertainty.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace gstuda;

namespace {

TranslatorOutput member(std::vector<double> mean, std::vector<double> logvar) {
    const std::size_t n = mean.size();
    return {ImageGrid(1, n, std::move(mean), 0.0, 255.0), ImageGrid(1, n, std::move(logvar), kLogVarMin, kLogVarMax)};
}

} // namespace

TEST_CASE("epistemic hand example uses the biased variance") {
    DropoutEnsemble ens{{member({0.0, 3.0}, {0.0, 0.0}), member({2.0, 3.0}, {0.0, 0.0})}, "x"};
    const ImageGrid ue = epistemic(ens);
    CHECK(ue[0] == 1.0);
    CHECK(ue[1] == 0.0);
    CHECK(ensemble_mean(ens)[0] == 1.0);
}

TEST_CASE("aleatoric hand example") {
    DropoutEnsemble ens{{member({0.0}, {std::log(0.5)}), member({0.0}, {std::log(1.5)})}, "x"};
    CHECK(aleatoric(ens)[0] == doctest::Approx(1.0).epsilon(1e-15));
    DropoutEnsemble zero{{member({0.0, 1.0}, {0.0, 0.0}), member({5.0, 1.0}, {0.0, 0.0})}, "x"};
    for (double v : test::vec(aleatoric(zero))) CHECK(v == 1.0);
}

TEST_CASE("decomposition matches a brute-force computation") {
    const std::size_t K = 7, n = 40;
    DropoutEnsemble ens;
    for (std::size_t k = 0; k < K; ++k) {
        const ImageGrid m = test::random_grid(1, n, 100 + k, 0.0, 255.0);
        const ImageGrid lv = test::random_grid(1, n, 200 + k, -3.0, 3.0);
        ens.members.push_back({m, ImageGrid(1, n, test::vec(lv), kLogVarMin, kLogVarMax)});
    }
    const UncertaintyMaps maps = decompose(ens);
    for (std::size_t p = 0; p < n; ++p) {
        // E[y^2] - E[y]^2 + E[sigma^2], all in one pass
        double s = 0.0, s2 = 0.0, var = 0.0;
        for (const auto& m : ens.members) {
            s += m.mean[p];
            s2 += m.mean[p] * m.mean[p];
            var += std::exp(m.logvar[p]);
        }
        const double mu = s / K;
        const double brute = s2 / K - mu * mu + var / K;
        CHECK(maps.total[p] == doctest::Approx(brute).epsilon(1e-10));
        CHECK(maps.total[p] >= std::max(maps.epistemic[p], maps.aleatoric[p]));
        CHECK(maps.mean_prediction[p] == doctest::Approx(mu).epsilon(1e-14));
    }

    // Translation and permutation invariance.
    DropoutEnsemble shifted = ens, permuted = ens;
    for (auto& m : shifted.members)
        for (auto& v : m.mean.values()) v += 10.0;
    std::swap(permuted.members[0], permuted.members[5]);
    const ImageGrid ue = epistemic(ens), ue_shift = epistemic(shifted);
    const ImageGrid ua = aleatoric(ens), ua_perm = aleatoric(permuted);
    for (std::size_t p = 0; p < n; ++p) {
        CHECK(ue_shift[p] == doctest::Approx(ue[p]).epsilon(1e-9));
        CHECK(ua_perm[p] == doctest::Approx(ua[p]).epsilon(1e-14));
    }
}

TEST_CASE("total is an elementwise sum") {
    const ImageGrid mu(1, 2, {0.0, 0.0});
    const UncertaintyMaps m = total(ImageGrid(1, 2, {0.0, 1.0}), ImageGrid(1, 2, {1.0, 1.0}), mu);
    CHECK(m.total[0] == 1.0);
    CHECK(m.total[1] == 2.0);
    CHECK_THROWS_AS(total(ImageGrid(1, 2), ImageGrid(2, 1), mu), DimensionMismatch);
}

TEST_CASE("ensembles need two members") {
    TranslatorModel t({}, 1);
    const ImageGrid x = test::random_grid(8, 8, 1);
    CHECK_THROWS_AS(mc_ensemble(t, x, 1, 0), InvalidArgument);
    DropoutEnsemble one{{member({0.0}, {0.0})}, "x"};
    CHECK_THROWS_AS(epistemic(one), InvalidArgument);
}

TEST_CASE("dropout-free ensembles carry no epistemic uncertainty") {
    TranslatorArchitecture arch;
    arch.dropout_rate = 0.0;
    TranslatorModel t(arch, 3);
    const ImageGrid x = test::random_grid(16, 16, 2);
    const DropoutEnsemble ens = mc_ensemble(t, x, 5, 9);
    for (std::size_t k = 1; k < ens.K(); ++k) CHECK(test::vec(ens.members[k].mean) == test::vec(ens.members[0].mean));
    for (double v : test::vec(epistemic(ens))) CHECK(v == 0.0);

    TranslatorModel d({}, 3);
    const DropoutEnsemble a = mc_ensemble(d, x, kDefaultMcSamples, 9);
    const DropoutEnsemble b = mc_ensemble(d, x, kDefaultMcSamples, 9);
    CHECK(a.K() == 20);
    for (std::size_t k = 0; k < a.K(); ++k) CHECK(test::vec(a.members[k].mean) == test::vec(b.members[k].mean));
    CHECK(epistemic(a).max() > 0.0);
    CHECK(member_seed(9, 0) != member_seed(9, 1));
}
