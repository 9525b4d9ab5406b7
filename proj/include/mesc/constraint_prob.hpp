#pragma once

// Penalty -> probability conversion. A penalty p is mapped to
//   zeta = sigmoid((p - sigma_pooled) / sigma_pooled)
// which is the CDF at p of a logistic distribution centred at sigma_pooled.

#include "mesc/mdp.hpp"
#include "mesc/mesc_irl.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace mesc {

class DegenerateDistribution : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

struct ConstraintEstimate {
    double sigma_nominal = 0.0;
    double sigma_constrained = 0.0;
    double sigma_pooled = 0.0;
    /// Per transition, aligned with mdp.transitions().
    std::vector<double> zeta;
    /// Per feature index.
    std::vector<double> zeta_f;
};

/// Population standard deviation of R over every feasible transition leaving a non-goal state.
double reward_std(const TabularMDP& mdp);
double pooled_std(double sigma_nominal, double sigma_constrained);
double pooled_std(const TabularMDP& nominal, const ResidualModel& model);

double transition_constraint_prob(double penalty, double sigma_pooled);

/// One probability per one-hot value of the subset, i.e. per listed feature index.
std::vector<double> feature_constraint_prob(const ResidualModel& model, std::span<const int> feature_subset,
                                            double sigma_pooled);

bool hard_threshold(double zeta, double cutoff = 0.6);

ConstraintEstimate estimate_constraints(const TabularMDP& nominal, const ResidualModel& model);

/// CSV rows "s,a,s_next,zeta".
void write_transition_zeta_csv(std::ostream& out, const TabularMDP& mdp, const ConstraintEstimate& est);
/// CSV rows "feature_index,zeta_f".
void write_feature_zeta_csv(std::ostream& out, const ConstraintEstimate& est);

}  // namespace mesc
