#include "mesc/constraint_prob.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mesc;

namespace {
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

TEST_CASE("pooled standard deviation") {
    CHECK(pooled_std(2.0, 2.0) == doctest::Approx(2.0));
    CHECK(pooled_std(3.0, 4.0) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-14));
    CHECK_THROWS_AS(pooled_std(0.0, 0.0), DegenerateDistribution);
}

TEST_CASE("reward deviation is the population deviation over feasible non-goal transitions") {
    const TabularMDP mdp = build_grid(oracle::small_spec(3, 2, {1, 0}, {0, 2}, 0.1, 5));
    std::vector<double> rs;
    for (int s = 0; s < mdp.num_states(); ++s) {
        if (s == mdp.goal()) continue;
        for (int a : mdp.actions(s))
            for (const auto& [to, p] : oracle::successors(mdp, s, a)) rs.push_back(mdp.weights().dot(oracle::phi(mdp, s, a, to)));
    }
    double mean = 0.0;
    for (double r : rs) mean += r;
    mean /= static_cast<double>(rs.size());
    double var = 0.0;
    for (double r : rs) var += (r - mean) * (r - mean);
    CHECK(reward_std(mdp) == doctest::Approx(std::sqrt(var / static_cast<double>(rs.size()))).epsilon(1e-12));
}

TEST_CASE("constant rewards make zeta undefined") {
    GridSpec g = oracle::small_spec(3, 3, {2, 0}, {0, 2}, 0.0, 5);
    g.goal_reward = 0.0;
    g.cardinal_penalty = -1.0;
    g.diagonal_penalty = -1.0;
    const TabularMDP mdp = build_grid(g);
    ResidualModel m{Eigen::VectorXd::Zero(mdp.feature_dim()), mdp.weights()};
    CHECK_THROWS_AS(pooled_std(mdp, m), DegenerateDistribution);
    CHECK_THROWS_AS(estimate_constraints(mdp, m), DegenerateDistribution);
}

TEST_CASE("transition constraint probability closed forms") {
    for (double sigma : {0.5, 1.3, 7.0}) {
        CHECK(std::abs(transition_constraint_prob(0.0, sigma) - logistic(-1.0)) < 1e-15);
        CHECK(transition_constraint_prob(sigma, sigma) == 0.5);
        CHECK(std::abs(transition_constraint_prob(2.0 * sigma, sigma) - logistic(1.0)) < 1e-15);
    }
    CHECK(std::abs(transition_constraint_prob(0.0, 1.0) - 0.2689414213699951) < 1e-15);
    CHECK_THROWS_AS(transition_constraint_prob(1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(transition_constraint_prob(1.0, -2.0), std::domain_error);
}

TEST_CASE("zeta is strictly monotone and bounded") {
    double prev = transition_constraint_prob(-1000.0, 2.0);
    CHECK(prev >= 0.0);
    for (double p = -999.0; p <= 1000.0; p += 0.5) {
        const double z = transition_constraint_prob(p, 2.0);
        CHECK(z >= prev);
        if (std::abs(p) < 30.0) CHECK(z > prev);
        CHECK(z <= 1.0);
        prev = z;
    }
}

TEST_CASE("feature constraint probabilities") {
    ResidualModel m;
    m.omega_r = Eigen::VectorXd::Zero(92);
    m.omega_n = Eigen::VectorXd::Zero(92);
    m.omega_r[89] = 2.0;
    m.omega_r[90] = 4.0;
    const std::vector<int> colors{89, 90, 91};
    const auto z = feature_constraint_prob(m, colors, 2.0);
    REQUIRE(z.size() == 3);
    CHECK(z[0] == 0.5);
    CHECK(z[1] == doctest::Approx(logistic(1.0)));
    CHECK(z[2] == doctest::Approx(logistic(-1.0)));
    // singleton subset agrees with the transition-level formula
    const std::vector<int> one{90};
    CHECK(feature_constraint_prob(m, one, 2.0)[0] == transition_constraint_prob(4.0, 2.0));
    CHECK_THROWS_AS(feature_constraint_prob(m, std::vector<int>{}, 1.0), std::domain_error);
    CHECK_THROWS_AS(feature_constraint_prob(m, std::vector<int>{92}, 1.0), std::domain_error);
}

TEST_CASE("hard threshold") {
    CHECK(hard_threshold(0.61));
    CHECK(hard_threshold(0.6, 0.6));
    CHECK_FALSE(hard_threshold(0.0, 0.1));
    CHECK(hard_threshold(0.0, 0.0));
    CHECK_THROWS_AS(hard_threshold(0.5, 1.5), std::domain_error);
}

TEST_CASE("zero residual gives the baseline probability everywhere") {
    const TabularMDP mdp = build_grid(GridSpec{});
    ResidualModel m{Eigen::VectorXd::Zero(mdp.feature_dim()), mdp.weights()};
    const ConstraintEstimate est = estimate_constraints(mdp, m);
    CHECK(est.sigma_nominal == est.sigma_constrained);
    CHECK(est.sigma_pooled == doctest::Approx(est.sigma_nominal));
    for (double z : est.zeta) CHECK(z == doctest::Approx(logistic(-1.0)).epsilon(1e-14));
    for (double z : est.zeta_f) CHECK(z == doctest::Approx(logistic(-1.0)).epsilon(1e-14));
    CHECK(est.zeta.size() == mdp.transitions().size());
    CHECK(est.zeta_f.size() == 92);
}

TEST_CASE("estimate uses the learned world for sigma_c") {
    const TabularMDP mdp = build_grid(GridSpec{});
    ResidualModel m{Eigen::VectorXd::Zero(mdp.feature_dim()), mdp.weights()};
    m.omega_r[40] = 5.0;
    const ConstraintEstimate est = estimate_constraints(mdp, m);
    CHECK(est.sigma_constrained == doctest::Approx(reward_std(apply_residual(mdp, m.omega_r))));
    CHECK(est.sigma_pooled == doctest::Approx(std::sqrt((est.sigma_nominal * est.sigma_nominal +
                                                         est.sigma_constrained * est.sigma_constrained) / 2.0)));
    const auto trans = mdp.transitions();
    for (std::size_t i = 0; i < trans.size(); ++i) {
        const double pen = trans[i].from != mdp.goal() && trans[i].to == 40 ? 5.0 : 0.0;
        CHECK(est.zeta[i] == doctest::Approx(transition_constraint_prob(pen, est.sigma_pooled)));
    }
}

TEST_CASE("zeta CSV output") {
    const TabularMDP mdp = build_grid(oracle::small_spec(3, 1, {0, 0}, {0, 2}, 0.0, 3));
    ResidualModel m{Eigen::VectorXd::Zero(mdp.feature_dim()), mdp.weights()};
    const ConstraintEstimate est = estimate_constraints(mdp, m);
    std::ostringstream t, f;
    write_transition_zeta_csv(t, mdp, est);
    write_feature_zeta_csv(f, est);
    CHECK(t.str().rfind("s,a,s_next,zeta\n", 0) == 0);
    CHECK(f.str().rfind("feature_index,zeta_f\n0,", 0) == 0);
}
