#include "mesc/planner.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace mesc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

bool QTable::available(int s, int a) const { return values(s, a) != kNegInf; }

QTable value_iteration(const TabularMDP& mdp, double tol) {
    const int n = mdp.num_states();
    QTable q;
    q.values = Eigen::MatrixXd::Constant(n, kNumActions, kNegInf);
    for (int s = 0; s < n; ++s)
        for (int a : mdp.actions(s)) q.values(s, a) = 0.0;

    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int h = 1; h <= mdp.horizon(); ++h) {
        Eigen::MatrixXd next = q.values;
        for (int s = 0; s < n; ++s) {
            if (s == mdp.goal()) continue;
            for (int a : mdp.actions(s)) {
                double acc = 0.0;
                for (const auto& t : mdp.transitions(s, a))
                    acc += t.prob * (mdp.reward(t.from, t.action, t.to) + mdp.discount() * v[t.to]);
                next(s, a) = acc;
            }
        }
        double delta = 0.0;
        for (int s = 0; s < n; ++s) {
            double best = 0.0;
            bool any = false;
            for (int a : mdp.actions(s)) {
                delta = std::max(delta, std::abs(next(s, a) - q.values(s, a)));
                best = any ? std::max(best, next(s, a)) : next(s, a);
                any = true;
            }
            v[s] = any ? best : 0.0;
        }
        q.values = std::move(next);
        q.sweeps = h;
        if (delta < tol) break;
    }
    return q;
}

Policy softmax_policy(const QTable& q, double temperature) {
    if (!(temperature > 0.0)) throw std::domain_error("softmax temperature must be positive");
    Policy pi;
    pi.probs = Eigen::MatrixXd::Zero(q.values.rows(), q.values.cols());
    for (Eigen::Index s = 0; s < q.values.rows(); ++s) {
        double hi = kNegInf;
        for (Eigen::Index a = 0; a < q.values.cols(); ++a) hi = std::max(hi, q.values(s, a));
        if (hi == kNegInf) continue;
        double z = 0.0;
        for (Eigen::Index a = 0; a < q.values.cols(); ++a) {
            if (q.values(s, a) == kNegInf) continue;
            pi.probs(s, a) = std::exp((q.values(s, a) - hi) / temperature);
            z += pi.probs(s, a);
        }
        pi.probs.row(s) /= z;
    }
    return pi;
}

int greedy_action(const QTable& q, int s) {
    int best = -1;
    for (int a = 0; a < q.values.cols(); ++a) {
        if (q.values(s, a) == kNegInf) continue;
        if (best < 0 || q.values(s, a) > q.values(s, best)) best = a;
    }
    return best;
}

Policy greedy_policy(const QTable& q) {
    Policy pi;
    pi.probs = Eigen::MatrixXd::Zero(q.values.rows(), q.values.cols());
    for (Eigen::Index s = 0; s < q.values.rows(); ++s) {
        const int a = greedy_action(q, static_cast<int>(s));
        if (a >= 0) pi.probs(s, a) = 1.0;
    }
    return pi;
}

EpisodeStreams EpisodeStreams::make(std::uint64_t seed, std::uint64_t episode) {
    return {make_rng(derive_seed(seed, {episode, 0})), make_rng(derive_seed(seed, {episode, 1}))};
}

Trajectory rollout(const TabularMDP& mdp, const ActionChooser& choose, EpisodeStreams& streams) {
    const Eigen::VectorXd& d0 = mdp.start_dist();
    int s = static_cast<int>(sample_index(std::span<const double>(d0.data(), d0.size()), streams.env));
    Trajectory tau;
    while (s != mdp.goal() && static_cast<int>(tau.size()) < mdp.horizon()) {
        const int a = choose(s, streams.decision);
        const auto succ = mdp.transitions(s, a);
        std::vector<double> p(succ.size());
        for (std::size_t i = 0; i < succ.size(); ++i) p[i] = succ[i].prob;
        const int s_next = succ[sample_index(p, streams.env)].to;
        tau.push_back({s, a, s_next});
        s = s_next;
    }
    return tau;
}

std::vector<Trajectory> sample_trajectories(const TabularMDP& mdp, const Policy& policy, int n, std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("sample_trajectories: negative count");
    const ActionChooser choose = [&](int s, Rng& rng) {
        const auto row = policy.probs.row(s);
        std::array<double, kNumActions> p{};
        for (int a = 0; a < kNumActions; ++a) p[a] = row[a];
        return static_cast<int>(sample_index(p, rng));
    };
    std::vector<Trajectory> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        auto streams = EpisodeStreams::make(seed, static_cast<std::uint64_t>(i));
        out.push_back(rollout(mdp, choose, streams));
    }
    return out;
}

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajs) {
    for (const auto& tau : trajs) {
        nlohmann::json line = nlohmann::json::array();
        for (const auto& st : tau) line.push_back({st.s, st.a, st.s_next});
        out << line.dump() << '\n';
    }
}

std::vector<Trajectory> read_trajectories(std::istream& in) {
    std::vector<Trajectory> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Trajectory tau;
            for (const auto& t : j) {
                if (!t.is_array() || t.size() != 3) throw std::invalid_argument("expected [s, a, s'] triple");
                tau.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
            }
            out.push_back(std::move(tau));
        } catch (const std::exception& e) {
            throw std::invalid_argument("trajectory line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace mesc
