#pragma once

// Independent reference computations used by the unit and acceptance tests.
// They deliberately avoid the dynamic programs they are checked against.

#include "mesc/mdp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using mesc::TabularMDP;

inline mesc::GridSpec small_spec(int w, int h, mesc::Cell start, mesc::Cell goal, double slip, int horizon,
                                 double discount = 1.0) {
    mesc::GridSpec g;
    g.width = w;
    g.height = h;
    g.start = start;
    g.goal = goal;
    g.slip_prob = slip;
    g.horizon = horizon;
    g.discount = discount;
    return g;
}

/// Successors of (s, a) computed straight from the slip model: the intended
/// move gets 1 - slip, and slip is spread uniformly over the moves of A_s.
inline std::vector<std::pair<int, double>> successors(const TabularMDP& mdp, int s, int a) {
    std::vector<std::pair<int, double>> out;
    if (s == mdp.goal()) return {{s, 1.0}};
    const auto acts = mdp.actions(s);
    auto add = [&](int to, double p) {
        for (auto& e : out)
            if (e.first == to) {
                e.second += p;
                return;
            }
        out.emplace_back(to, p);
    };
    const mesc::Cell c = mdp.cell_of(s);
    auto target = [&](int act) {
        const auto [dr, dc] = mesc::action_delta(act);
        return mdp.state_of({c.row + dr, c.col + dc});
    };
    add(target(a), 1.0 - mdp.slip_prob());
    for (int b : acts) add(target(b), mdp.slip_prob() / static_cast<double>(acts.size()));
    out.erase(std::remove_if(out.begin(), out.end(), [](const auto& e) { return e.second == 0.0; }), out.end());
    return out;
}

/// Feature vector rebuilt from the block layout [states | actions | colors].
inline Eigen::VectorXd phi(const TabularMDP& mdp, int s, int a, int s_next) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(mdp.feature_dim());
    if (s == mdp.goal()) return f;
    f[s_next] = 1.0;
    f[mdp.num_states() + a] = 1.0;
    if (const auto col = mdp.color_of(s_next); col != mesc::Color::none)
        f[mdp.num_states() + mesc::kNumActions + static_cast<int>(col)] = 1.0;
    return f;
}

/// Maximum-entropy trajectory model by exhaustive enumeration. Every path from
/// the start of length `horizon` (or shorter when it ends at the goal) gets
/// weight exp(w . phi(tau)) prod P. Returns expected visits keyed by (s, a, s').
struct EnumeratedMaxEnt {
    std::vector<double> visits;  // indexed [(s * 8 + a) * n + s']
    Eigen::VectorXd features;
    double log_partition = 0.0;
};

inline EnumeratedMaxEnt enumerate_maxent(const TabularMDP& mdp, const Eigen::VectorXd& w, int horizon) {
    const int n = mdp.num_states();
    std::vector<double> num(static_cast<std::size_t>(n) * mesc::kNumActions * n, 0.0);
    Eigen::VectorXd feat = Eigen::VectorXd::Zero(mdp.feature_dim());
    double z = 0.0;
    std::vector<std::array<int, 3>> path;

    std::function<void(int, int, double, double)> rec = [&](int s, int left, double logw, double prob) {
        if (left == 0 || s == mdp.goal()) {
            const double weight = std::exp(logw) * prob;
            z += weight;
            for (const auto& [ps, pa, pn] : path) num[(static_cast<std::size_t>(ps) * mesc::kNumActions + pa) * n + pn] += weight;
            return;
        }
        for (int a : mdp.actions(s)) {
            for (const auto& [to, p] : successors(mdp, s, a)) {
                path.push_back({s, a, to});
                rec(to, left - 1, logw + w.dot(phi(mdp, s, a, to)), prob * p);
                path.pop_back();
            }
        }
    };
    rec(mdp.start(), horizon, 0.0, 1.0);

    EnumeratedMaxEnt out;
    for (double& v : num) v /= z;
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < mesc::kNumActions; ++a)
            for (int t = 0; t < n; ++t)
                if (const double v = num[(static_cast<std::size_t>(s) * mesc::kNumActions + a) * n + t]; v != 0.0)
                    feat += v * phi(mdp, s, a, t);
    out.visits = std::move(num);
    out.features = feat;
    out.log_partition = std::log(z);
    return out;
}

/// Optimal finite-horizon Q by explicit tree search (no tables).
inline double tree_value(const TabularMDP& mdp, int s, int left);

inline double tree_q(const TabularMDP& mdp, int s, int a, int left) {
    double acc = 0.0;
    for (const auto& [to, p] : successors(mdp, s, a))
        acc += p * (mdp.weights().dot(phi(mdp, s, a, to)) + mdp.discount() * tree_value(mdp, to, left - 1));
    return acc;
}

inline double tree_value(const TabularMDP& mdp, int s, int left) {
    if (left == 0 || s == mdp.goal()) return 0.0;
    double best = -1e300;
    for (int a : mdp.actions(s)) best = std::max(best, tree_q(mdp, s, a, left));
    return best;
}

/// Deterministic worlds: best discounted return over every action sequence of length <= left starting with a.
inline double best_sequence_return(const TabularMDP& mdp, int s, int a, int left) {
    const auto succ = successors(mdp, s, a);
    const int to = succ.front().first;
    const double r = mdp.weights().dot(phi(mdp, s, a, to));
    if (left == 1 || to == mdp.goal()) return r;
    double best = -1e300;
    for (int b : mdp.actions(to)) best = std::max(best, best_sequence_return(mdp, to, b, left - 1));
    return r + mdp.discount() * best;
}

}  // namespace oracle
