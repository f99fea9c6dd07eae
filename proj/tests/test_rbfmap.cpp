#include "orbf/error.hpp"
#include "orbf/rbfmap.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace orbf;

namespace {

Prototype make_unit(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
    Prototype p;
    p.mean = mu;
    p.scatter = sigma;
    p.covariance = sigma;
    p.weight = 1.0;
    p.refactor(0.0);
    return p;
}

} // namespace

TEST_CASE("activation at the centre is exactly one") {
    std::mt19937_64 rng(1);
    const Eigen::VectorXd mu = testing::gaussian_vector(rng, 4);
    auto p = make_unit(mu, testing::random_spd(rng, 4));
    CHECK(rbf_activation(mu, p) == 1.0);
}

TEST_CASE("identity covariance closed form") {
    auto p = make_unit(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
    CHECK(rbf_activation(Eigen::Vector2d(1.0, 1.0), p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(rbf_activation(Eigen::Vector2d(1.0, 1.0), p) == doctest::Approx(0.367879).epsilon(1e-6));
}

TEST_CASE("activation matches the dense-inverse oracle") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> dim(1, 6);
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = dim(rng);
        const Eigen::VectorXd mu = testing::gaussian_vector(rng, d);
        const Eigen::MatrixXd sigma = testing::random_spd(rng, d);
        const Eigen::VectorXd x = mu + testing::gaussian_vector(rng, d);
        auto p = make_unit(mu, sigma);
        const double got = rbf_activation(x, p);
        const double want = testing::rbf_oracle(x, mu, sigma);
        CHECK(std::abs(got - want) <= 1e-10 * want);
        CHECK(got > 0.0);
        CHECK(got <= 1.0);
    }
}

TEST_CASE("symmetry and monotone locality") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::VectorXd mu = testing::gaussian_vector(rng, 3);
        auto p = make_unit(mu, testing::random_spd(rng, 3));
        const Eigen::VectorXd delta = testing::gaussian_vector(rng, 3);
        CHECK(rbf_activation(mu + delta, p) == doctest::Approx(rbf_activation(mu - delta, p)).epsilon(1e-14));
        double prev = 1.0;
        for (double s = 0.1; s < 3.0; s += 0.1) {
            const double v = rbf_activation(mu + s * delta, p);
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("far inputs underflow to zero and leave the bias") {
    PrototypeSet set;
    set.prototypes.push_back(make_unit(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)));
    set.prototypes.push_back(make_unit(Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Identity(1, 1)));
    // q >= 1400 for both units.
    auto phi = feature_vector(Eigen::VectorXd::Constant(1, 60.0), set);
    REQUIRE(phi.size() == 3);
    CHECK(phi(0) == 1.0);
    CHECK(phi(1) == 0.0);
    CHECK(phi(2) == 0.0);
}

TEST_CASE("feature vector layout and oracle agreement") {
    PrototypeSet one;
    one.prototypes.push_back(make_unit(Eigen::Vector2d(0.5, -1.0), Eigen::Matrix2d::Identity() * 2.0));
    auto phi1 = feature_vector(Eigen::Vector2d(0.5, -1.0), one);
    CHECK(phi1(0) == 1.0);
    CHECK(phi1(1) == 1.0);

    std::mt19937_64 rng(4);
    PrototypeSet three;
    std::vector<std::pair<Eigen::VectorXd, Eigen::MatrixXd>> params;
    for (int j = 0; j < 3; ++j) {
        params.emplace_back(testing::gaussian_vector(rng, 3), testing::random_spd(rng, 3));
        three.prototypes.push_back(make_unit(params.back().first, params.back().second));
    }
    const Eigen::VectorXd x = testing::gaussian_vector(rng, 3);
    auto phi = feature_vector(x, three);
    REQUIRE(phi.size() == 4);
    CHECK(phi(0) == 1.0);
    for (int j = 0; j < 3; ++j) {
        const double want = testing::rbf_oracle(x, params[static_cast<std::size_t>(j)].first,
                                                params[static_cast<std::size_t>(j)].second);
        CHECK(std::abs(phi(j + 1) - want) <= 1e-10 * want);
    }
    CHECK(feature_vector(x, three) == phi);
}

TEST_CASE("shape and data errors") {
    auto p = make_unit(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
    CHECK_THROWS_AS(rbf_activation(Eigen::Vector3d::Zero(), p), ShapeError);
    CHECK_THROWS_AS(rbf_activation(Eigen::Vector2d(std::nan(""), 0.0), p), DataError);
}
