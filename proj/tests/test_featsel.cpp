#include "orbf/error.hpp"
#include "orbf/featsel.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numeric>
#include <sstream>

using namespace orbf;

namespace {

// Independent re-implementation of greedy stepwise with VIF admission.
std::vector<std::size_t> brute_force_greedy(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                            const SelectionConfig& cfg) {
    std::vector<std::size_t> chosen;
    double current = 0.0;
    while (chosen.size() < cfg.max_features) {
        double best = -1.0;
        std::ptrdiff_t pick = -1;
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            if (std::find(chosen.begin(), chosen.end(), static_cast<std::size_t>(c)) != chosen.end()) continue;
            Eigen::MatrixXd sub(X.rows(), static_cast<Eigen::Index>(chosen.size() + 1));
            for (std::size_t j = 0; j < chosen.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(chosen[j]));
            sub.col(sub.cols() - 1) = X.col(c);
            if (sub.cols() > 1) {
                auto v = testing::vif_oracle(sub);
                if (std::any_of(v.begin(), v.end(), [&](double x) { return x > cfg.vif_threshold; })) continue;
            }
            const double r2 = testing::r2_oracle(sub, y);
            if (r2 > best) {
                best = r2;
                pick = c;
            }
        }
        if (pick < 0 || best - current < cfg.min_r2_gain) break;
        chosen.push_back(static_cast<std::size_t>(pick));
        current = best;
    }
    return chosen;
}

// y depends on a few columns; columns share a common factor so VIFs matter.
void correlated_instance(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, Eigen::MatrixXd& X,
                         Eigen::VectorXd& y) {
    X = testing::gaussian_matrix(rng, n, d);
    const Eigen::VectorXd f = testing::gaussian_vector(rng, n);
    std::uniform_real_distribution<double> load(0.0, 2.0);
    for (Eigen::Index j = 0; j < d; ++j) X.col(j) += load(rng) * f;
    const Eigen::VectorXd beta = testing::gaussian_vector(rng, d);
    y = X * beta + testing::gaussian_vector(rng, n) * 2.0;
}

} // namespace

TEST_CASE("ols_r2 agrees with the normal-equations oracle") {
    std::mt19937_64 rng(1);
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    correlated_instance(rng, 80, 4, X, y);
    std::vector<std::size_t> cols = {0, 2, 3};
    Eigen::MatrixXd sub(80, 3);
    sub << X.col(0), X.col(2), X.col(3);
    auto r2 = ols_r2(X, cols, y);
    REQUIRE(r2);
    CHECK(testing::rel_err(*r2, testing::r2_oracle(sub, y)) < 1e-10);
    CHECK_THROWS_AS(ols_r2(X, cols, Eigen::VectorXd::Constant(80, 2.0)), SelectionError);
}

TEST_CASE("vif: orthogonal, duplicated, single") {
    Eigen::MatrixXd H(4, 3);
    H << 1, 1, 1,
         1, -1, -1,
         -1, 1, -1,
         -1, -1, 1;
    Eigen::MatrixXd X(8, 3);
    X << H, -H;
    for (double v : vif(X)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    std::mt19937_64 rng(2);
    Eigen::MatrixXd D = testing::gaussian_matrix(rng, 30, 3);
    D.col(2) = D.col(0);
    auto v = vif(D);
    CHECK(v[0] == kInfiniteVif);
    CHECK(v[2] == kInfiniteVif);
    CHECK(std::isfinite(v[1]));

    auto one = vif(testing::gaussian_matrix(rng, 10, 1));
    REQUIRE(one.size() == 1);
    CHECK(one[0] == 1.0);
    CHECK_THROWS_AS(vif(testing::gaussian_matrix(rng, 3, 3)), SizingError);
}

TEST_CASE("vif matches the direct oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        Eigen::MatrixXd X;
        Eigen::VectorXd y;
        correlated_instance(rng, 60, 3 + static_cast<Eigen::Index>(seed % 4), X, y);
        auto got = vif(X);
        auto want = testing::vif_oracle(X);
        for (std::size_t j = 0; j < got.size(); ++j) CHECK(testing::rel_err(got[j], want[j]) < 1e-8);
    }
}

TEST_CASE("stepwise: perfect predictor stops after one pick") {
    std::mt19937_64 rng(3);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 50, 6);
    Eigen::VectorXd y = X.col(3);
    auto sel = forward_stepwise(X, y, 5, 0.005);
    REQUIRE(sel.size() == 1);
    CHECK(sel.features[0] == 3);
    CHECK(sel.r2_path[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stepwise: informative column wins; huge threshold selects nothing") {
    std::mt19937_64 rng(4);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 200, 2);
    Eigen::VectorXd y = X.col(0) + 0.3 * testing::gaussian_vector(rng, 200);
    auto sel = forward_stepwise(X, y, 2, 0.0);
    REQUIRE(!sel.empty());
    CHECK(sel.features[0] == 0);
    CHECK(forward_stepwise(X, y, 2, 1.1).empty());
    CHECK_THROWS_AS(forward_stepwise(X.topRows(3), y.head(3), 2, 0.0), SizingError);
}

TEST_CASE("stepwise: first pick is the exhaustive single-feature maximiser") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(100 + seed);
        Eigen::MatrixXd X;
        Eigen::VectorXd y;
        correlated_instance(rng, 100, 6, X, y);
        double best = -1.0;
        std::size_t arg = 0;
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            const double r2 = testing::r2_oracle(X.col(c), y);
            if (r2 > best) {
                best = r2;
                arg = static_cast<std::size_t>(c);
            }
        }
        auto sel = select_features(X, y, {5, 0.0, 1e9});
        REQUIRE(!sel.empty());
        CHECK(sel.features[0] == arg);
    }
}

TEST_CASE("select_features: collinear copies keep one") {
    std::mt19937_64 rng(5);
    Eigen::MatrixXd X(120, 3);
    X.col(0) = testing::gaussian_vector(rng, 120);
    X.col(1) = X.col(0);
    X.col(2) = testing::gaussian_vector(rng, 120);
    Eigen::VectorXd y = X.col(0) + 0.5 * testing::gaussian_vector(rng, 120);
    auto sel = select_features(X, y, {5, 0.0, 5.0});
    const auto copies = std::count_if(sel.features.begin(), sel.features.end(), [](auto f) { return f <= 1; });
    CHECK(copies == 1);
}

TEST_CASE("select_features: orthogonal inputs match plain stepwise") {
    std::mt19937_64 rng(6);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 400, 5);
    // Orthogonalise the centred columns so all VIFs are 1.
    X = X.rowwise() - X.colwise().mean();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    X = qr.householderQ() * Eigen::MatrixXd::Identity(400, 5);
    Eigen::VectorXd y = X * Eigen::VectorXd::LinSpaced(5, 1.0, 5.0) + 0.1 * testing::gaussian_vector(rng, 400);
    auto a = forward_stepwise(X, y, 4, 0.001);
    auto b = select_features(X, y, {4, 0.001, 5.0});
    CHECK(a.features == b.features);
    for (double v : b.vifs) CHECK(v == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("select_features: equals the brute-force greedy oracle") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        std::mt19937_64 rng(200 + seed);
        Eigen::MatrixXd X;
        Eigen::VectorXd y;
        correlated_instance(rng, 150, 8, X, y);
        const SelectionConfig cfg{5, 0.002, 3.0};
        auto sel = select_features(X, y, cfg);
        CHECK(sel.features == brute_force_greedy(X, y, cfg));
        // Invariants.
        for (std::size_t i = 1; i < sel.r2_path.size(); ++i) CHECK(sel.r2_path[i] >= sel.r2_path[i - 1]);
        for (double v : sel.vifs) CHECK(v <= cfg.vif_threshold);
        auto sorted = sel.features;
        std::sort(sorted.begin(), sorted.end());
        CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    }
}

TEST_CASE("select_features: permutation invariant after relabelling") {
    std::mt19937_64 rng(7);
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    correlated_instance(rng, 150, 7, X, y);
    auto base = select_features(X, y);
    std::vector<Eigen::Index> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    for (int rep = 0; rep < 5; ++rep) {
        std::shuffle(perm.begin(), perm.end(), rng);
        Eigen::MatrixXd P(X.rows(), 7);
        for (Eigen::Index j = 0; j < 7; ++j) P.col(j) = X.col(perm[static_cast<std::size_t>(j)]);
        auto sel = select_features(P, y);
        REQUIRE(sel.size() == base.size());
        for (std::size_t i = 0; i < sel.size(); ++i)
            CHECK(perm[sel.features[i]] == static_cast<Eigen::Index>(base.features[i]));
    }
}

TEST_CASE("select_features: errors and empty selections") {
    std::mt19937_64 rng(8);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 50, 3);
    CHECK_THROWS_AS(select_features(X, Eigen::VectorXd::Zero(50)), SelectionError);
    CHECK_THROWS_AS(select_features(X, testing::gaussian_vector(rng, 50), {5, 0.0, 0.5}), ConfigError);
    // Pure noise with a demanding gain threshold admits nothing.
    auto sel = select_features(X, testing::gaussian_vector(rng, 50), {5, 0.5, 5.0});
    CHECK(sel.empty());
}

TEST_CASE("selection table") {
    FeatureSelection s;
    s.target_id = "s00";
    s.features = {2, 0};
    s.feature_names = {"s02", "s00"};
    s.r2_path = {0.25, 0.3};
    s.vifs = {1.1, 1.1};
    std::ostringstream out;
    write_selection_table(out, std::vector<FeatureSelection>{s});
    const auto text = out.str();
    CHECK(text.find("s00\ts02;s00\t0.25;0.3\t1.1;1.1") != std::string::npos);
}
