#include "mesc/mdft.hpp"

#include <doctest.h>

#include <cmath>

using namespace mesc;

namespace {

// Taste and health ratings of three options.
Eigen::MatrixXd taste_health() {
    Eigen::MatrixXd m(3, 2);
    m << 1, 5, 5, 1, 2, 3;
    return m;
}

double tv(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return 0.5 * (a - b).cwiseAbs().sum(); }

}  // namespace

TEST_CASE("contrast matrix") {
    const Eigen::MatrixXd c3 = build_contrast(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(c3(i, j) == (i == j ? 1.0 : -0.5));
    Eigen::Matrix2d c2;
    c2 << 1, -1, -1, 1;
    CHECK(build_contrast(2) == c2);
    for (int k = 2; k <= 9; ++k) CHECK(build_contrast(k).rowwise().sum().cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(build_contrast(1), std::domain_error);
}

TEST_CASE("valence of the taste and health example") {
    const Eigen::VectorXd v = valence(build_contrast(3), taste_health(), 0);
    CHECK(v[0] == -2.5);
    CHECK(v[1] == 3.5);
    CHECK(v[2] == -1.0);

    Eigen::MatrixXd flat(3, 2);
    flat << 4, 1, 4, 2, 4, 3;
    CHECK(valence(build_contrast(3), flat, 0).isZero());
    Eigen::MatrixXd two(2, 1);
    two << 1, 0;
    CHECK(valence(build_contrast(2), two, 0) == Eigen::Vector2d(1, -1));
    CHECK_THROWS_AS(valence(build_contrast(3), taste_health(), 2), std::out_of_range);
}

TEST_CASE("feedback matrix") {
    const FeedbackParams p;
    Eigen::MatrixXd same(2, 2);
    same << 1, 2, 1, 2;
    const Eigen::MatrixXd s_same = build_feedback(same, p);
    CHECK(s_same(0, 1) == doctest::Approx(-p.phi2));
    CHECK(s_same(0, 0) == doctest::Approx(1.0 - p.phi2));

    Eigen::MatrixXd far(2, 2);
    far << 0, 0, 1000, -1000;
    const Eigen::MatrixXd s_far = build_feedback(far, p);
    CHECK(std::abs(s_far(0, 1)) < 1e-300);
    CHECK(s_far(1, 1) == doctest::Approx(1.0 - p.phi2));

    const Eigen::MatrixXd s = build_feedback(taste_health(), p);
    for (int i = 0; i < 3; ++i) {
        double off = 0.0;
        for (int j = 0; j < 3; ++j)
            if (j != i) off += std::abs(s(i, j));
        CHECK(std::abs(s(i, i)) > off);
        CHECK(s(i, i) < 1.0);
    }
    CHECK(spectral_radius(s) < 1.0);

    // options 0 and 2 are closer than options 0 and 1, so they inhibit each other more
    Eigen::MatrixXd m(3, 2);
    m << 0, 0, 3, 0, 1, 0;
    const Eigen::MatrixXd sm = build_feedback(m, p);
    CHECK(sm(0, 2) < sm(0, 1));

    CHECK_THROWS_AS(build_feedback(taste_health(), FeedbackParams{0.0, 0.05, 10.0}), std::domain_error);
    CHECK_THROWS_AS(build_feedback(taste_health(), FeedbackParams{0.02, 1.0, 10.0}), std::domain_error);
}

TEST_CASE("spectral radius of constructed feedback stays below one") {
    Rng rng = make_rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + static_cast<int>(uniform_index(rng, 7));
        const int j = 1 + static_cast<int>(uniform_index(rng, 4));
        Eigen::MatrixXd m(k, j);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < j; ++c) m(r, c) = 10.0 * uniform01(rng);
        CHECK(spectral_radius(build_feedback(m)) < 1.0);
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(MdftModel(taste_health(), Eigen::Vector2d(0.7, 0.7), FixedSteps{3}), std::domain_error);
    CHECK_THROWS_AS(MdftModel(taste_health(), Eigen::Vector2d(1.2, -0.2), FixedSteps{3}), std::domain_error);
    CHECK_THROWS_AS(MdftModel(taste_health(), Eigen::Vector3d(0.2, 0.3, 0.5), FixedSteps{3}), std::domain_error);
    CHECK_THROWS_AS(MdftModel(taste_health(), Eigen::Vector2d(0.5, 0.5), FixedSteps{0}), std::domain_error);
    CHECK_THROWS_AS(MdftModel(Eigen::MatrixXd::Ones(1, 2), Eigen::Vector2d(0.5, 0.5), FixedSteps{1}), std::domain_error);
    const MdftModel ok(taste_health(), Eigen::Vector2d(0.5, 0.5), FixedSteps{3});
    CHECK(ok.contrast() == build_contrast(3));
    CHECK(ok.valences().isApprox(build_contrast(3) * taste_health()));
}

TEST_CASE("deliberation basics") {
    const MdftModel zero(Eigen::MatrixXd::Zero(4, 2), Eigen::Vector2d(0.5, 0.5), FixedSteps{10});
    for (std::uint64_t seed = 0; seed < 50; ++seed) CHECK(deliberate(zero, seed) == 0);
    Rng rng = make_rng(1);
    const DeliberationState st = accumulate(zero, rng);
    CHECK(st.preferences.isZero());
    CHECK(st.t == 10);

    Eigen::MatrixXd dom = Eigen::MatrixXd::Zero(3, 2);
    dom.row(2) << 5, 5;
    const MdftModel dominant(dom, Eigen::Vector2d(0.3, 0.7), FixedSteps{25});
    CHECK(choice_distribution(dominant, 500, 3)[2] == 1.0);

    const MdftModel th(taste_health(), Eigen::Vector2d(0.5, 0.5), FixedSteps{25});
    for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(deliberate(th, seed) == deliberate(th, seed));
    const Eigen::VectorXd d = choice_distribution(th, 2000, 8);
    CHECK(d.sum() == doctest::Approx(1.0));
    CHECK((d.array() >= 0.0).all());
}

TEST_CASE("threshold stopping") {
    const MdftModel fast(taste_health(), Eigen::Vector2d(1.0, 0.0), ThresholdStop{3.0, 100});
    Rng rng = make_rng(4);
    const DeliberationState st = accumulate(fast, rng);
    CHECK(st.t == 1);  // 3.5 clears the threshold at once
    CHECK(st.preferences.maxCoeff() >= 3.0);

    const MdftModel never(Eigen::MatrixXd::Zero(3, 2), Eigen::Vector2d(0.5, 0.5), ThresholdStop{1.0, 40});
    Rng rng2 = make_rng(4);
    CHECK(accumulate(never, rng2).t == 40);
    CHECK(deliberate(never, 4) == 0);
}

TEST_CASE("one-step choice is invariant to rescaling M") {
    Rng rng = make_rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd m(4, 3);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 3; ++c) m(r, c) = uniform01(rng);
        const Eigen::Vector3d w(0.2, 0.5, 0.3);
        const MdftModel a(m, w, FixedSteps{1});
        const MdftModel b(7.5 * m, w, FixedSteps{1});
        for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(deliberate(a, seed) == deliberate(b, seed));
    }
}

TEST_CASE("distribution embedding") {
    const MdftModel p1 = mdft_from_distribution(Eigen::Vector3d(1, 0, 0));
    CHECK(choice_distribution(p1, 300, 1)[0] == 1.0);
    CHECK(p1.evaluation() == Eigen::Matrix3d::Identity());
    CHECK(std::get<FixedSteps>(p1.stop_rule()).steps == 1);

    const Eigen::Vector3d p(0.2, 0.3, 0.5);
    CHECK(tv(choice_distribution(mdft_from_distribution(p), 10000, 5), p) <= 0.03);
    const Eigen::Vector4d u = Eigen::Vector4d::Constant(0.25);
    CHECK(tv(choice_distribution(mdft_from_distribution(u), 10000, 6), u) <= 3.0 / std::sqrt(10000.0));

    CHECK_THROWS_AS(mdft_from_distribution(Eigen::Vector3d(0.5, 0.6, 0.1)), std::domain_error);
    CHECK_THROWS_AS(mdft_from_distribution(Eigen::VectorXd::Ones(1)), std::domain_error);
}

TEST_CASE("greedy embedding") {
    for (int k = 2; k <= 5; ++k)
        for (int chosen = 0; chosen < k; ++chosen) {
            const MdftModel m = mdft_from_greedy(chosen, k, static_cast<std::uint64_t>(k * 10 + chosen));
            CHECK(choice_distribution(m, 200, 2)[chosen] == 1.0);
        }
    CHECK_THROWS_AS(mdft_from_greedy(3, 3), std::out_of_range);
    CHECK_THROWS_AS(mdft_from_greedy(0, 1), std::domain_error);
}

TEST_CASE("model JSON round trip") {
    const MdftModel m(taste_health(), Eigen::Vector2d(0.25, 0.75), ThresholdStop{2.5, 77}, FeedbackParams{0.03, 0.04, 5.0});
    const nlohmann::json j = m;
    const MdftModel back = mdft_from_json(j);
    CHECK(back.evaluation() == m.evaluation());
    CHECK(back.attention() == m.attention());
    CHECK(std::get<ThresholdStop>(back.stop_rule()).max_steps == 77);
    CHECK(back.feedback().isApprox(m.feedback()));
    const MdftModel fixed = mdft_from_json(nlohmann::json(MdftModel(taste_health(), Eigen::Vector2d(0.5, 0.5), FixedSteps{9})));
    CHECK(std::get<FixedSteps>(fixed.stop_rule()).steps == 9);
}
