#include "orbf/error.hpp"
#include "orbf/prototypes.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace orbf;

namespace {

Eigen::MatrixXd two_blobs(std::mt19937_64& rng, Eigen::Index n, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                          double sigma) {
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, n, 2) * sigma;
    for (Eigen::Index i = 0; i < n; ++i) X.row(i) += (i % 2 == 0 ? a : b).transpose();
    return X;
}

void check_valid(const Prototype& p, double floor) {
    CHECK((p.covariance - p.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.covariance);
    CHECK(es.eigenvalues().minCoeff() >= floor * (1.0 - 1e-9));
    const auto d = p.covariance.rows();
    CHECK((p.precision * p.covariance - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-8);
}

} // namespace

TEST_CASE("kmeans: k=1 gives the column means") {
    std::mt19937_64 rng(1);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 40, 3);
    auto r = kmeans_fit(X, 1, 0);
    CHECK(testing::rel_err(r.centers.row(0).transpose(), X.colwise().mean().transpose()) < 1e-12);
}

TEST_CASE("kmeans: identical rows") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Constant(10, 2, 3.5);
    auto r = kmeans_fit(X, 1, 0);
    CHECK(r.centers(0, 0) == 3.5);
    CHECK(r.centers(0, 1) == 3.5);
    CHECK(r.inertia_history.back() == 0.0);
    CHECK_THROWS_AS(kmeans_fit(X, 2, 0), SizingError);
}

TEST_CASE("kmeans: sizing and data errors") {
    std::mt19937_64 rng(2);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 3, 2);
    CHECK_THROWS_AS(kmeans_fit(X, 4, 0), SizingError);
    X(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(kmeans_fit(X, 1, 0), DataError);
}

TEST_CASE("kmeans: inertia never increases") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        Eigen::MatrixXd X = testing::gaussian_matrix(rng, 300, 3);
        auto r = kmeans_fit(X, 6, seed);
        REQUIRE(!r.inertia_history.empty());
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
            CHECK(r.inertia_history[i] <= r.inertia_history[i - 1] * (1.0 + 1e-12));
    }
}

TEST_CASE("kmeans: recovers two well separated blobs") {
    // sigma is not pinned by the requirement; with 250 points a blob's sample
    // mean sits about 0.09 sigma from its true centre, so sigma must be well
    // below 1 for a 0.1 tolerance to be attainable.
    const double sigma = 0.4;
    const Eigen::Vector2d a(0.0, 0.0), b(10.0 * sigma, 0.0);
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        auto X = two_blobs(rng, 500, a, b, sigma);
        auto r = kmeans_fit(X, 2, seed);
        Eigen::Vector2d c0 = r.centers.row(0), c1 = r.centers.row(1);
        if (c0(0) > c1(0)) std::swap(c0, c1);
        if ((c0 - a).norm() < 0.1 && (c1 - b).norm() < 0.1) ++ok;

        // Separation this wide means the labelled sample means are found exactly.
        Eigen::Vector2d ma = Eigen::Vector2d::Zero(), mb = Eigen::Vector2d::Zero();
        for (Eigen::Index i = 0; i < X.rows(); ++i) (i % 2 == 0 ? ma : mb) += X.row(i).transpose();
        ma /= 250.0;
        mb /= 250.0;
        CHECK((c0 - ma).norm() < 1e-12);
        CHECK((c1 - mb).norm() < 1e-12);
    }
    CHECK(ok >= 19);
}

TEST_CASE("covariance: single-point cluster falls back to global diagonal") {
    std::mt19937_64 rng(3);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 50, 2);
    X.row(0) << 40.0, 40.0;
    std::vector<std::size_t> assign(50, 0);
    assign[0] = 1;
    Eigen::MatrixXd centers(2, 2);
    centers.row(0) = X.bottomRows(49).colwise().mean();
    centers.row(1) = X.row(0);
    ShrinkageConfig shrink;
    auto set = estimate_covariances(centers, X, assign, shrink);
    const Eigen::VectorXd gvar = ((X.rowwise() - X.colwise().mean()).array().square().colwise().sum() / 49.0).transpose();
    const auto& cov = set.prototypes[1].covariance;
    CHECK(cov(0, 1) == 0.0);
    CHECK(cov(0, 0) == doctest::Approx(gvar(0) + shrink.floor).epsilon(1e-12));
    CHECK(cov(1, 1) == doctest::Approx(gvar(1) + shrink.floor).epsilon(1e-12));
    check_valid(set.prototypes[0], shrink.floor);
    check_valid(set.prototypes[1], shrink.floor);
}

TEST_CASE("covariance: isotropic cluster close to sigma^2 I") {
    std::mt19937_64 rng(4);
    const double sigma = 1.5;
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 2000, 3) * sigma;
    std::vector<std::size_t> assign(2000, 0);
    Eigen::MatrixXd centers = X.colwise().mean();
    auto set = estimate_covariances(centers, X, assign);
    const auto& cov = set.prototypes[0].covariance;
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) {
            const double want = i == j ? sigma * sigma : 0.0;
            CHECK(std::abs(cov(i, j) - want) < 0.1 * sigma * sigma);
        }
}

TEST_CASE("covariance: lambda = 1 is exactly diagonal") {
    std::mt19937_64 rng(5);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 100, 3);
    X.col(1) += X.col(0);
    std::vector<std::size_t> assign(100, 0);
    ShrinkageConfig shrink{1.0, 1e-6};
    auto set = estimate_covariances(X.colwise().mean(), X, assign, shrink);
    const auto& cov = set.prototypes[0].covariance;
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j)
            if (i != j) CHECK(cov(i, j) == 0.0);
}

TEST_CASE("online: zero innovation leaves the mean and bumps the weight") {
    std::mt19937_64 rng(6);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 60, 2);
    auto km = kmeans_fit(X, 2, 1);
    auto set = estimate_covariances(km.centers, X, km.assignments, {}, 1.0);
    const auto before = set.prototypes;
    const Eigen::VectorXd x = before[1].mean;
    const auto j = online_update(set, x);
    CHECK(j == 1);
    CHECK(set.prototypes[1].mean == before[1].mean);
    CHECK(set.prototypes[1].weight == before[1].weight + 1.0);
    CHECK(set.prototypes[0].mean == before[0].mean);
}

TEST_CASE("online: decay 1 sequential means equal batch means") {
    std::mt19937_64 rng(7);
    const Eigen::Vector2d a(0.0, 0.0), b(8.0, 8.0);
    auto X = two_blobs(rng, 400, a, b, 1.0);
    auto km = kmeans_fit(X, 2, 3);
    std::vector<Prototype> seq(2);
    for (auto& p : seq) {
        p.mean = Eigen::VectorXd::Zero(2);
        p.scatter = Eigen::MatrixXd::Zero(2, 2);
        p.weight = 0.0;
    }
    ShrinkageConfig shrink;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        update_prototype(seq[km.assignments[static_cast<std::size_t>(i)]], X.row(i).transpose(), 1.0, shrink);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK((seq[c].mean - km.centers.row(static_cast<Eigen::Index>(c)).transpose()).norm() < 1e-6);
        check_valid(seq[c], shrink.floor);
    }
}

TEST_CASE("online: single prototype absorbs everything; bad input rejected") {
    std::mt19937_64 rng(8);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 30, 2);
    auto km = kmeans_fit(X, 1, 0);
    auto set = estimate_covariances(km.centers, X, km.assignments);
    for (int i = 0; i < 20; ++i) CHECK(online_update(set, testing::gaussian_vector(rng, 2) * 5.0) == 0);

    const auto snapshot = set.prototypes[0];
    Eigen::VectorXd bad(2);
    bad << 1.0, std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(online_update(set, bad), DataError);
    CHECK(set.prototypes[0].mean == snapshot.mean);
    CHECK(set.prototypes[0].weight == snapshot.weight);
    CHECK_THROWS_AS(online_update(set, Eigen::VectorXd::Zero(3)), ShapeError);
}

TEST_CASE("online: stays SPD and bounded over a long stream") {
    std::mt19937_64 rng(9);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 200, 3);
    auto km = kmeans_fit(X, 4, 2);
    auto set = estimate_covariances(km.centers, X, km.assignments, {}, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd x(3);
    for (int i = 0; i < 100000; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) x(j) = n(rng);
        online_update(set, x);
    }
    for (const auto& p : set.prototypes) {
        CHECK(p.mean.cwiseAbs().maxCoeff() < 10.0);
        check_valid(p, set.shrinkage.floor);
        Eigen::LLT<Eigen::MatrixXd> llt(p.covariance);
        CHECK(llt.info() == Eigen::Success);
    }

    // Decayed version as used in the model.
    set.decay = 0.99;
    for (int i = 0; i < 20000; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) x(j) = n(rng);
        online_update(set, x);
    }
    for (const auto& p : set.prototypes) check_valid(p, set.shrinkage.floor);
}

TEST_CASE("nearest prototype uses Mahalanobis distance") {
    PrototypeSet set;
    for (int j = 0; j < 2; ++j) {
        Prototype p;
        p.mean = Eigen::Vector2d(j == 0 ? 0.0 : 3.0, 0.0);
        p.scatter = j == 0 ? Eigen::Matrix2d(Eigen::Vector2d(100.0, 100.0).asDiagonal())
                           : Eigen::Matrix2d(Eigen::Matrix2d::Identity());
        p.weight = 10;
        p.refresh({0.0, 1e-6});
        set.prototypes.push_back(p);
    }
    // Euclidean-closer to unit 1, but unit 0 is far wider.
    CHECK(nearest_prototype(set, Eigen::Vector2d(2.0, 2.5)) == 0);
    CHECK(nearest_prototype(set, Eigen::Vector2d(3.0, 0.1)) == 1);
}

TEST_CASE("default hidden units") {
    CHECK(default_hidden_units(648) == 18);
    CHECK(default_hidden_units(2) == 2);
    CHECK(default_hidden_units(0) == 2);
}
