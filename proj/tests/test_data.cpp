#include "helpers.hpp"

#include "simmer/data.hpp"
#include "simmer/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

using namespace simmer;
using namespace simmer::data;

namespace {

std::filesystem::path write_file(const std::string& name, const std::string& text) {
    const auto dir = testing::scratch_dir("data");
    const auto p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::filesystem::path data_dir() { return std::filesystem::path(SIMMER_SOURCE_DIR) / "data"; }

}  // namespace

TEST_CASE("noisy sine") {
    const auto clean = gen_noisy_sine(101, 0.0, 3);
    CHECK(clean.size() == 101);
    CHECK(clean.features(0, 0) == -1.0);
    CHECK(clean.features(100, 0) == 1.0);
    CHECK(clean.features(1, 0) - clean.features(0, 0) == doctest::Approx(0.02).epsilon(1e-12));
    for (Eigen::Index i = 0; i < 101; ++i) {
        CHECK(clean.targets(i, 0) == std::sin(2 * std::numbers::pi * clean.features(i, 0)));
    }
    const auto a = gen_noisy_sine(101, 0.1, 5), b = gen_noisy_sine(101, 0.1, 5), c = gen_noisy_sine(101, 0.1, 6);
    CHECK(a.targets == b.targets);
    CHECK(a.targets != c.targets);
    CHECK(a.features == c.features);

    const auto big = gen_noisy_sine(100000, 0.1, 9);
    double var = 0.0;
    for (Eigen::Index i = 0; i < 100000; ++i) {
        const double r = big.targets(i, 0) - std::sin(2 * std::numbers::pi * big.features(i, 0));
        var += r * r;
    }
    var /= 100000;
    CHECK(std::abs(var - 0.01) / 0.01 < 0.05);
}

TEST_CASE("iris loads with three one-hot classes") {
    const auto ds = load_csv(data_dir() / "iris.csv", Schema::load(data_dir() / "iris.schema"));
    CHECK(ds.size() == 150);
    CHECK(ds.task == TaskKind::classification);
    CHECK(ds.features.cols() == 2);
    CHECK(ds.target_names == std::vector<std::string>{"Iris-setosa", "Iris-versicolor", "Iris-virginica"});
    for (Eigen::Index r = 0; r < ds.targets.rows(); ++r) {
        CHECK(ds.targets.row(r).sum() == 1.0);
        CHECK(ds.targets.row(r).maxCoeff() == 1.0);
    }
    const auto sp = split(ds, 112, 1);
    CHECK(sp.test.size() == 38);
}

TEST_CASE("auto-mpg drops incomplete rows") {
    const auto ds = load_csv(data_dir() / "auto_mpg.csv", Schema::load(data_dir() / "auto_mpg_horsepower.schema"));
    CHECK(ds.size() == 392);
    const auto multi = load_csv(data_dir() / "auto_mpg.csv", Schema::load(data_dir() / "auto_mpg_multi.schema"));
    CHECK(multi.size() == 392);
    CHECK(multi.features.cols() == 6);
}

TEST_CASE("csv row policies") {
    const std::string text = "a,b,y\n1,2,3\n4,oops,6\n7,8,9\n";
    const auto path = write_file("policy.csv", text);
    Schema s = Schema::parse("task regression\nfeature a\nfeature b\ntarget y\ninvalid_rows drop\n");
    CHECK(load_csv(path, s).size() == 2);
    s.invalid_rows = InvalidRowPolicy::error;
    try {
        load_csv(path, s);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("policy.csv:3:") != std::string::npos);
    }
    Schema missing = Schema::parse("task regression\nfeature nope\ntarget y\n");
    CHECK_THROWS_AS(load_csv(path, missing), DataError);
    CHECK_THROWS_AS(Schema::parse("feature a\ntarget y\n"), DataError);
    CHECK_THROWS_AS(Schema::parse("task regression\nfeature a\ntarget y\ncolour blue\n"), DataError);
}

TEST_CASE("schema text round-trips and a single column reloads unchanged") {
    const Schema s = Schema::parse("task regression\nfeature x\ntarget y\ninvalid_rows drop\n");
    const Schema back = Schema::parse(s.to_text());
    CHECK(back.features == s.features);
    CHECK(back.targets == s.targets);
    CHECK(back.invalid_rows == s.invalid_rows);

    const auto path = write_file("one.csv", "x,y\n0.1,1\n-2.5e-3,2\n3.25,3\n");
    const auto ds = load_csv(path, s);
    CHECK(ds.features(0, 0) == 0.1);
    CHECK(ds.features(1, 0) == -2.5e-3);
    CHECK(ds.features(2, 0) == 3.25);
}

TEST_CASE("splits are disjoint, covering and reproducible") {
    const auto ds = gen_noisy_sine(57, 0.1, 1);
    for (std::size_t n : {1u, 20u, 56u}) {
        for (std::uint64_t seed : {0u, 1u, 99u}) {
            const auto sp = split(ds, n, seed);
            CHECK(sp.train.size() == n);
            CHECK(sp.test.size() == 57 - n);
            std::set<std::size_t> all(sp.train.begin(), sp.train.end());
            all.insert(sp.test.begin(), sp.test.end());
            CHECK(all.size() == 57);
            CHECK(*all.rbegin() == 56);
            CHECK(split(ds, n, seed).train == sp.train);
        }
    }
    CHECK(split(ds, 20, 1).train != split(ds, 20, 2).train);
    CHECK_THROWS_AS(split(ds, 57, 1), InvalidArgument);
    CHECK_THROWS_AS(split(ds, 0, 1), InvalidArgument);
}

TEST_CASE("min-max scaling") {
    Matrix m(3, 2);
    m << 0, 1, 10, 1, 5, 2;
    const std::vector<std::size_t> rows{0, 1};
    CHECK_THROWS_AS(minmax_fit(m, rows, {"a", "b"}), DataError);
    try {
        minmax_fit(m, rows, {"a", "bee"});
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("bee") != std::string::npos);
    }
    const auto sc = minmax_fit(m.col(0).eval(), rows);
    Matrix probe(4, 1);
    probe << 0, 10, 5, 15;
    const Matrix s = minmax_apply(sc, probe);
    CHECK(s(0, 0) == -1.0);
    CHECK(s(1, 0) == 1.0);
    CHECK(s(2, 0) == 0.0);
    CHECK(s(3, 0) == 2.0);

    Rng rng(4, StreamPurpose::test);
    const Matrix x = testing::random_matrix(rng, 50, 1, 100.0);
    const Matrix back = minmax_invert(sc, minmax_apply(sc, x));
    CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-12 * (1 + x.cwiseAbs().maxCoeff()));
}
