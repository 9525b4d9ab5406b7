#pragma once

#include "mesc/constraint_prob.hpp"
#include "mesc/mdp.hpp"

#include <map>
#include <span>
#include <vector>

namespace mesc {

/// True costs and constraint probabilities of a set of items (cells or
/// transitions), aligned with a vector of predicted probabilities.
struct ConstraintGroundTruth {
    std::vector<double> cost;
    std::vector<double> zeta;
    int num_constraints = 0;

    void validate() const;
};

/// |{x : c(x) = 0 and pred(x) - true(x) > chi}| / num_constraints
double soft_fp_rate(std::span<const double> predicted, const ConstraintGroundTruth& truth, double chi);
/// |{x : c(x) != 0 and true(x) - pred(x) > chi}| / num_constraints
double soft_fn_rate(std::span<const double> predicted, const ConstraintGroundTruth& truth, double chi);

/// Hard evaluation: zeta >= cutoff counts as "constrained".
double hard_fp_rate(std::span<const double> predicted, const ConstraintGroundTruth& truth, double cutoff);
double hard_fn_rate(std::span<const double> predicted, const ConstraintGroundTruth& truth, double cutoff);

/// Occupancy-level ground truth: one item per cell, cost taken from the state block.
ConstraintGroundTruth cell_ground_truth(const TabularMDP& nominal, const TabularMDP& truth, int num_constraints);
/// Predicted occupancy-constraint probabilities (state block of zeta_f).
std::vector<double> cell_predictions(const TabularMDP& nominal, const ConstraintEstimate& est);

/// Transition-level ground truth over nominal.transitions().
ConstraintGroundTruth transition_ground_truth(const TabularMDP& nominal, const TabularMDP& truth, int num_constraints);

inline constexpr double kSmoothing = 1e-9;

/// KL(P || Q) in nats after additive smoothing and renormalisation.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double js_divergence(std::span<const double> p, std::span<const double> q);

using TrajectoryDistribution = std::map<Trajectory, double, bool (*)(const Trajectory&, const Trajectory&)>;

/// Empirical frequency of each distinct transition sequence.
TrajectoryDistribution trajectory_distribution(const std::vector<Trajectory>& trajs);

/// Both distributions laid out over the union of their supports.
std::pair<std::vector<double>, std::vector<double>> align_distributions(const TrajectoryDistribution& a,
                                                                        const TrajectoryDistribution& b);

double trajectory_kl(const std::vector<Trajectory>& p, const std::vector<Trajectory>& q);
double trajectory_js(const std::vector<Trajectory>& p, const std::vector<Trajectory>& q);

struct TrajectoryQuality {
    double avg_norm_length = 0.0;
    double avg_norm_penalty = 0.0;
    double avg_violations = 0.0;
    /// Set when the reference penalty is zero and avg_norm_penalty holds the raw mean penalty.
    bool raw_penalty = false;
};

/// Mean constraint-penalty magnitude -c(tau) under the ground-truth world.
double mean_penalty(const std::vector<Trajectory>& trajs, const TabularMDP& env_truth);

TrajectoryQuality trajectory_quality(const std::vector<Trajectory>& trajs, const TabularMDP& env_truth,
                                     int shortest_len, double ref_penalty);

}  // namespace mesc
