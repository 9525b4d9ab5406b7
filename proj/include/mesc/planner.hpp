#pragma once

#include "mesc/mdp.hpp"
#include "mesc/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace mesc {

/// q(s, a) for every state and the 8 compass actions; -inf marks a not in A_s.
struct QTable {
    Eigen::MatrixXd values;
    /// Number of Bellman backups performed.
    int sweeps = 0;

    bool available(int s, int a) const;
};

/// Row-stochastic pi(s, a); zero outside A_s.
struct Policy {
    Eigen::MatrixXd probs;
};

/// Finite-horizon value iteration. Runs at most mdp.horizon() backups and stops
/// early once successive Q tables agree within `tol` in sup-norm.
QTable value_iteration(const TabularMDP& mdp, double tol = 1e-10);

Policy softmax_policy(const QTable& q, double temperature = 1.0);
/// Deterministic argmax policy; ties go to the lowest action index.
Policy greedy_policy(const QTable& q);
int greedy_action(const QTable& q, int s);

/// Independent random streams for one episode: environment noise (start state,
/// slips) and action selection are drawn from separate generators so that two
/// agents facing the same seed see the same environment outcomes.
struct EpisodeStreams {
    Rng env;
    Rng decision;

    static EpisodeStreams make(std::uint64_t seed, std::uint64_t episode);
};

using ActionChooser = std::function<int(int state, Rng& decision)>;

/// Roll out one episode from D_0 until the goal or mdp.horizon() steps.
Trajectory rollout(const TabularMDP& mdp, const ActionChooser& choose, EpisodeStreams& streams);

std::vector<Trajectory> sample_trajectories(const TabularMDP& mdp, const Policy& policy, int n, std::uint64_t seed);

/// JSON lines: one trajectory per line as a list of [s, a, s'] triples.
void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajs);
std::vector<Trajectory> read_trajectories(std::istream& in);

}  // namespace mesc
