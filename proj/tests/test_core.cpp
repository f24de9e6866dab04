#include "gstuda/core/dataset.hpp"
#include "gstuda/core/dataset_io.hpp"
#include "gstuda/core/errors.hpp"
#include "gstuda/core/oracle_access.hpp"
#include "gstuda/core/rng.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

using namespace gstuda;

TEST_CASE("image grid construction checks") {
    CHECK_THROWS_AS(ImageGrid(0, 4), InvalidArgument);
    CHECK_THROWS_AS(ImageGrid(4, 4, 1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(ImageGrid(2, 2, std::vector<double>(3, 0.0)), DimensionMismatch);
    std::vector<double> bad(4, 0.0);
    bad[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ImageGrid(2, 2, bad), InvalidArgument);

    const ImageGrid g(2, 3, {0, 1, 2, 3, 4, 5}, 0.0, 10.0);
    CHECK(g(1, 0) == 3.0);
    CHECK(g[5] == 5.0);
    CHECK(g.mean() == doctest::Approx(2.5));
}

TEST_CASE("rescaling maps values with the declared range") {
    const ImageGrid g(1, 3, {0.0, 127.5, 255.0});
    const ImageGrid n = g.normalized();
    CHECK(n.range_lo() == 0.0);
    CHECK(n.range_hi() == 1.0);
    CHECK(n[1] == doctest::Approx(0.5));
    const ImageGrid back = n.rescaled(0.0, 255.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(g[i]));
}

TEST_CASE("shape mismatch is reported") {
    CHECK_THROWS_AS(require_same_shape(ImageGrid(2, 2), ImageGrid(2, 3), "x"), DimensionMismatch);
    CHECK_THROWS_AS(PairedSample(ImageGrid(2, 2), ImageGrid(3, 2), "s"), DimensionMismatch);
}

namespace {

Dataset make_paired(std::size_t n, std::uint64_t seed) {
    std::vector<PairedSample> s;
    for (std::size_t i = 0; i < n; ++i)
        s.emplace_back(test::random_grid(4, 4, i, 0, 255), test::random_grid(4, 4, 100 + i, 0, 255), "s" + std::to_string(i % 3));
    return Dataset(std::move(s), seed);
}

} // namespace

TEST_CASE("batch_iter partitions indices deterministically") {
    const Dataset ds = make_paired(23, 5);
    const auto a = batch_iter(ds, 4, 1);
    const auto b = batch_iter(ds, 4, 1);
    CHECK(a == b);
    CHECK(a.size() == 6);
    CHECK(a.back().size() == 3);
    std::multiset<std::size_t> seen;
    for (const auto& batch : a) seen.insert(batch.begin(), batch.end());
    CHECK(seen.size() == 23);
    for (std::size_t i = 0; i < 23; ++i) CHECK(seen.count(i) == 1);
    CHECK(batch_iter(ds, 4, 2) != a);

    CHECK_THROWS_AS(batch_iter(ds, 0, 1), InvalidArgument);
    CHECK_THROWS_AS(batch_iter(Dataset(std::vector<PairedSample>{}, 0), 4, 1), InvalidArgument);
}

TEST_CASE("batch stream crosses epochs") {
    const Dataset ds = make_paired(5, 1);
    BatchStream s(ds, 2, 0);
    std::multiset<std::size_t> first_epoch;
    for (int i = 0; i < 3; ++i) {
        auto b = s.next();
        first_epoch.insert(b.begin(), b.end());
    }
    CHECK(first_epoch.size() == 5);
    s.next();
    CHECK(s.epoch() == 1);
}

TEST_CASE("hidden targets are reachable only through oracle access") {
    const UnpairedSample with(test::random_grid(2, 2, 1), "t0", test::random_grid(2, 2, 2));
    const UnpairedSample without(test::random_grid(2, 2, 1), "t0");
    CHECK(with.has_hidden_target());
    CHECK(OracleAccess::hidden_target(with) == test::random_grid(2, 2, 2));
    CHECK_THROWS_AS(OracleAccess::hidden_target(without), InvalidArgument);
}

TEST_CASE("dataset accessors enforce the domain") {
    const Dataset src = make_paired(3, 0);
    CHECK(src.domain_tag() == DomainTag::source);
    CHECK_THROWS_AS(src.unpaired(), Error);
    const Dataset tgt(std::vector<UnpairedSample>{UnpairedSample(test::random_grid(4, 4, 1), "t")}, 0);
    CHECK(tgt.domain_tag() == DomainTag::target);
    CHECK_THROWS_AS(tgt.paired(), Error);
    CHECK(domain_tag_from_string("target") == DomainTag::target);
    CHECK_THROWS_AS(domain_tag_from_string("x"), InvalidArgument);
}

TEST_CASE("dataset persistence round trips bit-exactly") {
    const auto dir = test::scratch_dir("dataset_io");
    std::vector<PairedSample> ps;
    for (std::size_t i = 0; i < 3; ++i)
        ps.emplace_back(quantize_f32(test::random_grid(8, 6, i, 0, 255)), quantize_f32(test::random_grid(8, 6, 9 + i, 0, 255)), "subj");
    Dataset src(std::move(ps), 42);
    src.notes.emplace_back("shift", "gamma=1.3");
    save_dataset(src, dir / "src");
    const Dataset back = load_dataset(dir / "src");
    REQUIRE(back.size() == 3);
    CHECK(back.seed() == 42);
    CHECK(back.notes == src.notes);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.paired()[i].input == src.paired()[i].input);
        CHECK(back.paired()[i].target == src.paired()[i].target);
        CHECK(back.subject_id(i) == "subj");
    }

    std::vector<UnpairedSample> us;
    us.emplace_back(quantize_f32(test::random_grid(8, 6, 1, 0, 255)), "t", quantize_f32(test::random_grid(8, 6, 2, 0, 255)));
    const Dataset tgt(std::move(us), 7);
    save_dataset(tgt, dir / "tgt");
    const Dataset tback = load_dataset(dir / "tgt");
    CHECK(tback.domain_tag() == DomainTag::target);
    CHECK(OracleAccess::hidden_target(tback.unpaired()[0]) == OracleAccess::hidden_target(tgt.unpaired()[0]));
}

TEST_CASE("raw float files are size checked") {
    const auto dir = test::scratch_dir("raw");
    const std::vector<double> v{1.0, -2.5, 3.25};
    write_f32_le(dir / "a.bin", v);
    CHECK(read_f32_le(dir / "a.bin", 3) == v);
    CHECK_THROWS_AS(read_f32_le(dir / "a.bin", 4), IoError);
    CHECK_THROWS_AS(load_dataset(dir / "missing"), IoError);
}

TEST_CASE("seed derivation separates streams") {
    CHECK(derive_seed({1, 2}) != derive_seed({2, 1}));
    CHECK(derive_seed({1, 2}) == derive_seed({1, 2}));
    std::vector<std::size_t> a(10), b;
    std::iota(a.begin(), a.end(), 0);
    b = a;
    shuffle_indices(a, 3);
    shuffle_indices(b, 3);
    CHECK(a == b);
}
