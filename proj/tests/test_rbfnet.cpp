#include "orbf/error.hpp"
#include "orbf/rbfnet.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace orbf;

namespace {

FeatureSelection pick(std::initializer_list<std::size_t> cols) {
    FeatureSelection s;
    s.features = cols;
    return s;
}

RbfNetConfig small_config() {
    RbfNetConfig c;
    c.hidden_units = 4;
    c.seed = 42;
    return c;
}

// y_{t+1} depends nonlinearly on x_t.
void nonlinear_stream(std::mt19937_64& rng, Eigen::Index n, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
    X = testing::gaussian_matrix(rng, n, 3);
    y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = std::sin(X(i, 0)) + 0.3 * X(i, 1) * X(i, 1);
    y += 0.05 * testing::gaussian_vector(rng, n);
}

} // namespace

TEST_CASE("constant response is reproduced") {
    std::mt19937_64 rng(1);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 2000, 3);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(2000, 0.05);
    auto m = RbfNetModel::fit_initial(small_config(), pick({0, 1}), X, y, 1);
    CHECK(m.head().dim() == m.prototypes().k() + 1);
    for (int i = 0; i < 20; ++i) CHECK(std::abs(m.peek(testing::gaussian_vector(rng, 3)) - 0.05) < 1e-6);
    CHECK(std::abs(m.head().theta()(0) - 0.05) < 0.05);
}

TEST_CASE("planted head weights are recovered") {
    std::mt19937_64 rng(2);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 400, 2);
    auto cfg = small_config();
    cfg.tau = 1.0;
    cfg.delta = 1e-8;
    // Prototypes depend on X and the seed only, so a first fit exposes the map.
    auto probe = RbfNetModel::fit_initial(cfg, pick({0, 1}), X, Eigen::VectorXd::Zero(400), 1);
    Eigen::VectorXd theta_star(5);
    theta_star << 0.3, -1.0, 2.0, 0.5, -0.7;
    Eigen::VectorXd y(400);
    for (Eigen::Index i = 0; i < 400; ++i) y(i) = theta_star.dot(probe.features(X.row(i).transpose()));
    auto m = RbfNetModel::fit_initial(cfg, pick({0, 1}), X, y, 1);
    CHECK((m.head().theta() - theta_star).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("too many hidden units for the training rows") {
    std::mt19937_64 rng(3);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 10, 2);
    auto cfg = small_config();
    cfg.hidden_units = 20;
    CHECK_THROWS_AS(RbfNetModel::fit_initial(cfg, pick({0}), X, testing::gaussian_vector(rng, 10), 1), SizingError);
}

TEST_CASE("replaying the training stream reproduces fit-time priors") {
    std::mt19937_64 rng(4);
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    nonlinear_stream(rng, 300, X, y);
    auto fitted = RbfNetModel::fit_initial(small_config(), pick({0, 1}), X, y, 1, "a");

    RbfNetModel::Parts parts;
    parts.config = fitted.config();
    parts.config.update_prototypes = false;
    parts.target_id = "a";
    parts.horizon = 1;
    parts.selection = fitted.selection();
    parts.standardizer = fitted.standardizer();
    parts.prototypes = fitted.prototypes();
    parts.head = EwrlsState(fitted.prototypes().k() + 1, parts.config.delta, parts.config.tau);
    auto replay = RbfNetModel::from_parts(parts);

    const auto& priors = fitted.fit_prior_predictions();
    REQUIRE(priors.size() == 300);
    for (Eigen::Index t = 0; t < 300; ++t) {
        auto rec = replay.predict(t, X.row(t).transpose());
        CHECK(rec.y_hat == priors[static_cast<std::size_t>(t)]);
        replay.resolve(t, y(t));
    }
    CHECK(replay.head().theta() == fitted.head().theta());
}

TEST_CASE("no look-ahead: changing the future leaves past predictions alone") {
    std::mt19937_64 rng(5);
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    nonlinear_stream(rng, 600, X, y);
    const std::size_t h = 3;
    // Training pairs (x_t, y_{t+h}).
    auto base = RbfNetModel::fit_initial(small_config(), pick({0, 1}), X.topRows(300 - h), y.segment(h, 300 - h), h);

    auto run = [&](const Eigen::MatrixXd& feats, const Eigen::VectorXd& resp) {
        auto m = base;
        std::vector<double> preds;
        for (Eigen::Index t = 300; t < 600; ++t) {
            if (t - 300 >= static_cast<Eigen::Index>(h)) m.resolve(t - static_cast<Eigen::Index>(h), resp(t));
            preds.push_back(m.predict(t, feats.row(t).transpose()).y_hat);
            CHECK(m.pending().size() <= h);
        }
        return preds;
    };
    const auto a = run(X, y);
    const Eigen::Index cut = 450;
    Eigen::MatrixXd X2 = X;
    Eigen::VectorXd y2 = y;
    X2.bottomRows(600 - cut - 1) = testing::gaussian_matrix(rng, 600 - cut - 1, 3) * 3.0;
    y2.tail(600 - cut - 1).setConstant(9.0);
    const auto b = run(X2, y2);
    for (Eigen::Index t = 300; t <= cut; ++t) CHECK(a[static_cast<std::size_t>(t - 300)] == b[static_cast<std::size_t>(t - 300)]);
    CHECK(a.back() != b.back());
}

TEST_CASE("pending queue protocol") {
    std::mt19937_64 rng(6);
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    nonlinear_stream(rng, 200, X, y);
    auto m = RbfNetModel::fit_initial(small_config(), pick({0, 1}), X, y, 2);
    m.predict(10, X.row(10).transpose());
    m.predict(11, X.row(11).transpose());
    CHECK_THROWS_AS(m.predict(12, X.row(12).transpose()), ProtocolError);
    CHECK_THROWS_AS(m.resolve(11, 0.1), ProtocolError);
    CHECK_THROWS_AS(m.resolve(99, 0.1), ProtocolError);
    auto rec = m.resolve(10, 0.25);
    CHECK(rec.t == 10);
    CHECK(rec.y_realized == 0.25);
    CHECK(rec.horizon == 2);
    CHECK_THROWS_AS(m.predict(11, X.row(11).transpose()), ProtocolError);  // time must increase
    m.discard(11);
    CHECK(m.pending().empty());

    // End of stream: predictions drain without touching the head.
    m.predict(20, X.row(20).transpose());
    const auto theta = m.head().theta();
    auto left = m.drain();
    CHECK(left.size() == 1);
    CHECK(left[0].t == 20);
    CHECK(m.head().theta() == theta);
}

TEST_CASE("h = 1 resolves with the following value and updates online") {
    std::mt19937_64 rng(7);
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    nonlinear_stream(rng, 300, X, y);
    auto m = RbfNetModel::fit_initial(small_config(), pick({0, 1}), X.topRows(200), y.head(200), 1);
    const auto n0 = m.head().n_updates();
    const auto means0 = m.prototypes().prototypes[0].mean;
    bool moved = false;
    for (Eigen::Index t = 200; t < 299; ++t) {
        m.predict(t, X.row(t).transpose());
        m.resolve(t, y(t));
        moved = moved || m.prototypes().prototypes[0].mean != means0;
    }
    CHECK(m.head().n_updates() == n0 + 99);
    CHECK(moved);
}

TEST_CASE("frozen model: bulk equals one-at-a-time") {
    std::mt19937_64 rng(8);
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    nonlinear_stream(rng, 400, X, y);
    auto m = RbfNetModel::fit_initial(small_config(), pick({0, 1, 2}), X.topRows(200), y.head(200), 1);
    m.set_online(false);
    const Eigen::VectorXd bulk = m.peek_rows(X.bottomRows(200));
    const auto theta = m.head().theta();
    for (Eigen::Index t = 200; t < 400; ++t) {
        CHECK(m.predict(t, X.row(t).transpose()).y_hat == bulk(t - 200));
        m.resolve(t, y(t));
    }
    CHECK(m.head().theta() == theta);
}

TEST_CASE("prototype updates can be switched off") {
    std::mt19937_64 rng(9);
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    nonlinear_stream(rng, 300, X, y);
    auto m = RbfNetModel::fit_initial(small_config(), pick({0, 1}), X.topRows(200), y.head(200), 1);
    m.set_update_prototypes(false);
    const auto before = m.prototypes().prototypes;
    for (Eigen::Index t = 200; t < 300; ++t) {
        m.predict(t, X.row(t).transpose());
        m.resolve(t, y(t));
    }
    for (std::size_t j = 0; j < before.size(); ++j) CHECK(m.prototypes().prototypes[j].mean == before[j].mean);
}

TEST_CASE("empty selection gives a bias-only model") {
    std::mt19937_64 rng(10);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 100, 3);
    Eigen::VectorXd y = testing::gaussian_vector(rng, 100);
    auto m = RbfNetModel::fit_initial(small_config(), FeatureSelection{}, X, y, 1);
    CHECK(m.prototypes().k() == 0);
    CHECK(m.head().dim() == 1);
    const double p0 = m.peek(X.row(0).transpose());
    for (Eigen::Index i = 1; i < 10; ++i) CHECK(m.peek(X.row(i).transpose()) == p0);
}

TEST_CASE("missing training rows are skipped; missing inputs are rejected at predict") {
    std::mt19937_64 rng(11);
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    nonlinear_stream(rng, 200, X, y);
    X(5, 0) = std::nan("");
    y(7) = std::nan("");
    X(9, 2) = std::nan("");  // not selected, so row 9 stays
    auto m = RbfNetModel::fit_initial(small_config(), pick({0, 1}), X, y, 1);
    CHECK(m.fit_prior_predictions().size() == 198);
    CHECK_THROWS_AS(m.predict(300, X.row(5).transpose()), DataError);
    CHECK(m.pending().empty());
}

TEST_CASE("fit_initial can select its own features") {
    std::mt19937_64 rng(12);
    Eigen::MatrixXd X = testing::gaussian_matrix(rng, 300, 5);
    Eigen::VectorXd y = X.col(2) + 0.1 * testing::gaussian_vector(rng, 300);
    auto m = RbfNetModel::fit_initial(small_config(), X, y, 1, "tgt");
    REQUIRE(!m.selection().empty());
    CHECK(m.selection().features[0] == 2);
    CHECK(m.selection().target_id == "tgt");
}
