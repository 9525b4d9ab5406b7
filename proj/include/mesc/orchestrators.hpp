#pragma once

// Per-state combination of a nominal and a constrained policy.

#include "mesc/mdft.hpp"
#include "mesc/mdp.hpp"
#include "mesc/planner.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mesc {

enum class OrchestratorKind { greedy, weighted_average, mdft };

std::string kind_name(OrchestratorKind kind);
OrchestratorKind kind_from_name(const std::string& name);

struct OrchestratorConfig {
    OrchestratorKind kind = OrchestratorKind::mdft;
    double w_n = 0.5;
    double w_c = 0.5;
    int mdft_steps = 25;
    FeedbackParams feedback{};

    static OrchestratorConfig with_weight(OrchestratorKind kind, double w_n);
    void validate() const;
};

/// Scores of the available actions of one state, all aligned with `actions`.
struct StateActionScores {
    std::vector<int> actions;
    Eigen::VectorXd q_n;
    Eigen::VectorXd q_c;
    Eigen::VectorXd sq_n;
    Eigen::VectorXd sq_c;
};

/// Softmax-of-Q scores for every state, built from the nominal and constrained Q tables.
class ScoreTable {
  public:
    ScoreTable(const QTable& q_nominal, const QTable& q_constrained, double temperature = 1.0);

    const StateActionScores& at(int s) const { return rows_.at(s); }
    int num_states() const { return static_cast<int>(rows_.size()); }

  private:
    std::vector<StateActionScores> rows_;
};

int greedy_select(const StateActionScores& scores);

/// w_n sq_n + w_c sq_c.
Eigen::VectorXd wa_distribution(const StateActionScores& scores, double w_n, double w_c);
int wa_select(const StateActionScores& scores, double w_n, double w_c, Rng& rng);

/// MDFT model with M = [sq_n sq_c], w = (w_n, w_c) and fixed-step deliberation.
/// Empty when the state has a single action.
std::optional<MdftModel> orchestration_model(const StateActionScores& scores, double w_n, double w_c, int mdft_steps,
                                             const FeedbackParams& feedback = {});
int mdft_select(const StateActionScores& scores, double w_n, double w_c, int mdft_steps, Rng& rng,
                const FeedbackParams& feedback = {});

/// An orchestrated agent. MDFT models are built once per state.
class Orchestrator {
  public:
    Orchestrator(const ScoreTable& scores, OrchestratorConfig config);

    int choose(int s, Rng& rng) const;
    const OrchestratorConfig& config() const { return config_; }

  private:
    const ScoreTable* scores_;
    OrchestratorConfig config_;
    std::vector<std::optional<MdftModel>> models_;
};

/// n episodes in `env`; episode i uses EpisodeStreams::make(seed, i).
std::vector<Trajectory> run_agent(const TabularMDP& env, const ScoreTable& scores, const OrchestratorConfig& config,
                                  int n, std::uint64_t seed);

/// True iff at every grid point w_n in {0, step, 2 step, ..., 1}, the weighted
/// average assigns the middle action no more mass than the larger of the other
/// two. Evaluated in exact rational arithmetic on the given doubles.
bool wa_unrepresentability_check(const Eigen::VectorXd& sq_n, const Eigen::VectorXd& sq_c, double grid_step);

}  // namespace mesc
