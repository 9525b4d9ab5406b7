#pragma once

// Maximum-entropy inverse soft-constraint learning.
//
// The trajectory model is P(tau | w) = exp(w . phi(tau)) / Z(w) * prod P(s'|s,a)
// over trajectories that start from D_0 and stop at the goal or after
// `horizon` steps. The learned quantity is a nonnegative residual omega_r;
// the constrained world uses omega_c = omega_n - omega_r.

#include "mesc/mdp.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <vector>

namespace mesc {

struct ResidualModel {
    Eigen::VectorXd omega_r;
    Eigen::VectorXd omega_n;

    Eigen::VectorXd omega_c() const { return omega_n - omega_r; }
};

void to_json(nlohmann::json& j, const ResidualModel& m);
void from_json(const nlohmann::json& j, ResidualModel& m);

/// Expected visitation of every transition of the MDP, aligned with mdp.transitions().
struct VisitationCounts {
    std::vector<double> values;
};

struct MaxEntResult {
    VisitationCounts visits;
    /// sum_x D(x) phi(x)
    Eigen::VectorXd feature_expectation;
    /// log Z(w), marginalised over D_0
    double log_partition = 0.0;
};

struct IrlHyperparams {
    double learning_rate = 0.1;
    double decay = 0.99;
    int iterations = 300;
    int horizon = 50;
    double convergence_tol = 1e-4;

    void validate() const;
};

Eigen::VectorXd empirical_feature_expectation(const TabularMDP& mdp, const std::vector<Trajectory>& demos);

/// Backward log-partition pass followed by a forward occupancy pass.
MaxEntResult expected_feature_counts(const TabularMDP& mdp, const Eigen::VectorXd& omega, int horizon);
inline MaxEntResult expected_feature_counts(const TabularMDP& mdp, const Eigen::VectorXd& omega) {
    return expected_feature_counts(mdp, omega, mdp.horizon());
}

/// Mean log P(tau | omega) over the demos. Every demo must end at the goal or have exactly `horizon` steps.
double demo_log_likelihood(const TabularMDP& mdp, const std::vector<Trajectory>& demos, const Eigen::VectorXd& omega,
                           int horizon);

/// d/d omega_r of the mean demo log-likelihood at omega_c = mdp.weights() - omega_r:
/// expected minus empirical feature counts.
Eigen::VectorXd mesc_irl_gradient(const TabularMDP& mdp, const std::vector<Trajectory>& demos,
                                  const Eigen::VectorXd& omega_r, int horizon);

struct LearnTrace {
    int iterations = 0;
    double final_gradient_norm = 0.0;
    bool converged = false;
};

/// Projected gradient ascent on the residual, starting from zero.
ResidualModel mesc_irl_learn(const TabularMDP& mdp, const std::vector<Trajectory>& demos, const IrlHyperparams& hp,
                             LearnTrace* trace = nullptr);

}  // namespace mesc
