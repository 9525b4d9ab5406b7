#pragma once

// Finite-horizon tabular MDPs on 8-connected grid worlds.
//
// Feature layout of phi(s, a, s'):  [ states | actions | colors ]
//   - one bit for the target state s'
//   - one bit for the chosen action a
//   - at most one bit for the color of s'
// Transitions leaving the (absorbing) goal carry the zero feature vector.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mesc {

inline constexpr int kNumActions = 8;
inline constexpr int kNumColors = 3;

/// Compass actions, cardinal directions first.
enum class Action : int { N = 0, E, S, W, NE, SE, SW, NW };

enum class Color : int { none = -1, blue = 0, green = 1, red = 2 };

struct Cell {
    int row = 0;
    int col = 0;
    auto operator<=>(const Cell&) const = default;
};

std::pair<int, int> action_delta(int action);
bool is_diagonal(int action);
std::string action_name(int action);
int action_from_name(const std::string& name);
std::string color_name(Color c);
Color color_from_name(const std::string& name);

struct GridSpec {
    int width = 9;
    int height = 9;
    Cell start{0, 0};
    Cell goal{8, 8};
    std::vector<std::pair<Cell, Color>> colors;
    double slip_prob = 0.1;
    double goal_reward = 10.0;
    double cardinal_penalty = -4.0;
    double diagonal_penalty = -4.0 * 1.4142135623730951;
    double discount = 0.99;
    int horizon = 50;
    std::vector<Cell> constrained_cells;
    double constraint_cost = -50.0;
    std::vector<int> constrained_actions;
    std::vector<Color> constrained_features;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

void to_json(nlohmann::json& j, const GridSpec& spec);
void from_json(const nlohmann::json& j, GridSpec& spec);

/// Invalid (s, a) pair or malformed trajectory.
class InvalidAction : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct Transition {
    int from;
    int action;
    int to;
    double prob;
};

/// Nonzero positions of a transition's one-hot feature vector (-1 when absent).
struct FeatureBits {
    int state = -1;
    int action = -1;
    int color = -1;
};

class TabularMDP {
  public:
    int num_states() const { return width_ * height_; }
    int width() const { return width_; }
    int height() const { return height_; }
    int feature_dim() const { return num_states() + kNumActions + kNumColors; }
    int state_offset() const { return 0; }
    int action_offset() const { return num_states(); }
    int color_offset() const { return num_states() + kNumActions; }

    int goal() const { return goal_; }
    int start() const { return start_; }
    double discount() const { return discount_; }
    int horizon() const { return horizon_; }
    double slip_prob() const { return slip_; }
    const Eigen::VectorXd& start_dist() const { return start_dist_; }

    int state_of(Cell c) const { return c.row * width_ + c.col; }
    Cell cell_of(int s) const { return {s / width_, s % width_}; }
    Color color_of(int s) const { return colors_[s]; }
    bool in_bounds(Cell c) const { return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_; }

    /// Available actions A_s, ascending.
    std::span<const int> actions(int s) const { return actions_[s]; }
    bool available(int s, int a) const;

    /// Successor (in-bounds target) of action a from s, ignoring slip.
    std::optional<int> move_target(int s, int a) const;

    /// Flat list of feasible transitions (P > 0), grouped by (s, a).
    std::span<const Transition> transitions() const { return transitions_; }
    /// Transitions of one (s, a). Throws InvalidAction when a is not in A_s.
    std::span<const Transition> transitions(int s, int a) const;
    /// Index range of transitions(s, a) inside transitions().
    std::pair<std::size_t, std::size_t> transition_range(int s, int a) const;

    FeatureBits feature_bits(int s, int a, int s_next) const;
    Eigen::VectorXd features(int s, int a, int s_next) const;
    double dot(const Eigen::VectorXd& w, int s, int a, int s_next) const;

    /// Reward weights of this world (omega^N for the nominal world, omega^C otherwise).
    const Eigen::VectorXd& weights() const { return weights_; }
    const Eigen::VectorXd& nominal_weights() const { return nominal_weights_; }
    double reward(int s, int a, int s_next) const { return dot(weights_, s, a, s_next); }
    /// Constraint cost c(s, a, s') = (omega - omega^N) . phi; nonpositive for soft penalties.
    double cost(int s, int a, int s_next) const;

    TabularMDP with_weights(Eigen::VectorXd weights) const;

  private:
    friend TabularMDP build_grid(const GridSpec& spec);

    int width_ = 0;
    int height_ = 0;
    int start_ = 0;
    int goal_ = 0;
    double discount_ = 1.0;
    int horizon_ = 1;
    double slip_ = 0.0;
    std::vector<Color> colors_;
    std::vector<std::vector<int>> actions_;
    std::vector<Transition> transitions_;
    // offset into transitions_ for (s, a); begin = ranges_[s*8+a], end = ranges_[s*8+a+1]
    std::vector<std::size_t> ranges_;
    Eigen::VectorXd start_dist_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd nominal_weights_;
};

TabularMDP build_grid(const GridSpec& spec);

/// Dense successor distribution P(. | s, a).
Eigen::VectorXd transition_dist(const TabularMDP& mdp, int s, int a);

struct Step {
    int s;
    int a;
    int s_next;
    bool operator==(const Step&) const = default;
};

using Trajectory = std::vector<Step>;

/// Throws InvalidAction unless the steps chain, use available actions and have P > 0.
void validate_trajectory(const TabularMDP& mdp, const Trajectory& tau);

/// sum_i gamma^(i-1) R(s_i, a_i, s_{i+1}).
double trajectory_reward(const TabularMDP& mdp, const Trajectory& tau);
Eigen::VectorXd trajectory_features(const TabularMDP& mdp, const Trajectory& tau);
/// Undiscounted c(tau).
double trajectory_cost(const TabularMDP& mdp, const Trajectory& tau);

/// Returns the world with weights omega - omega_r. omega_r must be nonnegative.
TabularMDP apply_residual(const TabularMDP& nominal, const Eigen::VectorXd& omega_r);

/// Fewest moves between two cells with 8-connected deterministic moves.
int shortest_path_length(const TabularMDP& mdp, int from, int to);

}  // namespace mesc
