#pragma once

// Multi-alternative decision field theory.
//
//   V(t) = C M W(t)          W(t) one-hot, attribute j drawn with probability w_j
//   P(t+1) = S P(t) + V(t+1), P(0) = 0
//
// Options are rows of M, attributes are columns.

#include "mesc/random.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <stdexcept>
#include <variant>

namespace mesc {

class UnstableFeedback : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

struct FixedSteps {
    int steps = 1;
};

struct ThresholdStop {
    double threshold = 1.0;
    int max_steps = 1000;
};

using StopRule = std::variant<FixedSteps, ThresholdStop>;

/// Lateral-inhibition parameters. Distances between options are measured with
/// the component along the dominance direction (1, ..., 1)/sqrt(J) scaled by
/// `dominance_weight` and the orthogonal (indifference) component unscaled.
struct FeedbackParams {
    double phi1 = 0.022;
    double phi2 = 0.05;
    double dominance_weight = 10.0;
};

Eigen::MatrixXd build_contrast(int k);
Eigen::MatrixXd build_feedback(const Eigen::MatrixXd& m, const FeedbackParams& params = {});
double spectral_radius(const Eigen::MatrixXd& s);

/// C M e_j.
Eigen::VectorXd valence(const Eigen::MatrixXd& c, const Eigen::MatrixXd& m, int attribute);

class MdftModel {
  public:
    /// Throws std::domain_error on a malformed M or w, UnstableFeedback when
    /// the spectral radius of S exceeds 1.
    MdftModel(Eigen::MatrixXd m, Eigen::VectorXd w, StopRule stop, FeedbackParams params = {});

    int num_options() const { return static_cast<int>(m_.rows()); }
    int num_attributes() const { return static_cast<int>(m_.cols()); }
    const Eigen::MatrixXd& evaluation() const { return m_; }
    const Eigen::VectorXd& attention() const { return w_; }
    const Eigen::MatrixXd& contrast() const { return c_; }
    const Eigen::MatrixXd& feedback() const { return s_; }
    const StopRule& stop_rule() const { return stop_; }
    const FeedbackParams& feedback_params() const { return params_; }

    /// Precomputed C M; column j is the valence when attending to attribute j.
    const Eigen::MatrixXd& valences() const { return cm_; }

  private:
    Eigen::MatrixXd m_;
    Eigen::VectorXd w_;
    StopRule stop_;
    FeedbackParams params_;
    Eigen::MatrixXd c_;
    Eigen::MatrixXd s_;
    Eigen::MatrixXd cm_;
};

void to_json(nlohmann::json& j, const MdftModel& model);
MdftModel mdft_from_json(const nlohmann::json& j);

struct DeliberationState {
    Eigen::VectorXd preferences;
    int t = 0;
};

/// Runs the preference accumulation and returns the final state.
DeliberationState accumulate(const MdftModel& model, Rng& rng);

/// Index of the option with the highest accumulated preference; ties go to the lowest index.
int deliberate(const MdftModel& model, Rng& rng);
int deliberate(const MdftModel& model, std::uint64_t seed);

Eigen::VectorXd choice_distribution(const MdftModel& model, int n_runs, std::uint64_t seed);

/// M = I_k, w = p, one deliberation step: the induced choice distribution is p.
MdftModel mdft_from_distribution(const Eigen::VectorXd& p);

/// Two attributes with random attention weights, a single all-ones row for
/// `chosen`, one deliberation step: `chosen` is selected on every run.
MdftModel mdft_from_greedy(int chosen, int k, std::uint64_t weight_seed = 0);

}  // namespace mesc
