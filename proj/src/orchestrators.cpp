#include "mesc/orchestrators.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <limits>

namespace mesc {

namespace {

using Rational = boost::multiprecision::cpp_rational;

Rational exact(double x) {
    if (!std::isfinite(x)) throw std::domain_error("non-finite score");
    int exp = 0;
    const double frac = std::frexp(x, &exp);
    // frac * 2^53 is an integer for every finite double
    const auto mant = static_cast<long long>(std::ldexp(frac, 53));
    Rational r(mant);
    exp -= 53;
    const Rational two_pow = Rational(boost::multiprecision::cpp_int(1) << std::abs(exp));
    if (exp >= 0) return Rational(r * two_pow);
    return Rational(r / two_pow);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& q, double temperature) {
    Eigen::VectorXd p = ((q.array() - q.maxCoeff()) / temperature).exp();
    return p / p.sum();
}

}  // namespace

std::string kind_name(OrchestratorKind kind) {
    switch (kind) {
        case OrchestratorKind::greedy: return "greedy";
        case OrchestratorKind::weighted_average: return "wa";
        case OrchestratorKind::mdft: return "mdft";
    }
    throw std::invalid_argument("bad orchestrator kind");
}

OrchestratorKind kind_from_name(const std::string& name) {
    if (name == "greedy") return OrchestratorKind::greedy;
    if (name == "wa" || name == "weighted_average") return OrchestratorKind::weighted_average;
    if (name == "mdft") return OrchestratorKind::mdft;
    throw std::invalid_argument("unknown orchestrator: " + name);
}

OrchestratorConfig OrchestratorConfig::with_weight(OrchestratorKind kind, double w_n) {
    OrchestratorConfig c;
    c.kind = kind;
    c.w_n = w_n;
    c.w_c = 1.0 - w_n;
    return c;
}

void OrchestratorConfig::validate() const {
    if (!(w_n >= 0.0 && w_n <= 1.0 && w_c >= 0.0 && w_c <= 1.0))
        throw std::domain_error("orchestrator weights must lie in [0, 1]");
    if (std::abs(w_n + w_c - 1.0) > 1e-12) throw std::domain_error("orchestrator weights must sum to 1");
    if (kind == OrchestratorKind::mdft && mdft_steps < 1) throw std::domain_error("mdft_steps must be >= 1");
}

ScoreTable::ScoreTable(const QTable& q_nominal, const QTable& q_constrained, double temperature) {
    if (!(temperature > 0.0)) throw std::domain_error("softmax temperature must be positive");
    if (q_nominal.values.rows() != q_constrained.values.rows())
        throw std::invalid_argument("Q tables cover different state spaces");
    const auto n = q_nominal.values.rows();
    rows_.resize(n);
    for (Eigen::Index s = 0; s < n; ++s) {
        auto& row = rows_[s];
        for (int a = 0; a < kNumActions; ++a) {
            const bool an = q_nominal.available(static_cast<int>(s), a);
            if (an != q_constrained.available(static_cast<int>(s), a))
                throw std::invalid_argument("Q tables disagree on available actions");
            if (an) row.actions.push_back(a);
        }
        const auto k = static_cast<Eigen::Index>(row.actions.size());
        row.q_n.resize(k);
        row.q_c.resize(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            row.q_n[i] = q_nominal.values(s, row.actions[i]);
            row.q_c[i] = q_constrained.values(s, row.actions[i]);
        }
        if (k > 0) {
            row.sq_n = softmax(row.q_n, temperature);
            row.sq_c = softmax(row.q_c, temperature);
        }
    }
}

int greedy_select(const StateActionScores& scores) {
    if (scores.actions.empty()) throw std::invalid_argument("no available actions");
    std::size_t best = 0;
    double best_v = std::max(scores.q_c[0], scores.q_n[0]);
    for (std::size_t i = 1; i < scores.actions.size(); ++i) {
        const double v = std::max(scores.q_c[i], scores.q_n[i]);
        if (v > best_v) {
            best = i;
            best_v = v;
        }
    }
    return scores.actions[best];
}

Eigen::VectorXd wa_distribution(const StateActionScores& scores, double w_n, double w_c) {
    return w_n * scores.sq_n + w_c * scores.sq_c;
}

int wa_select(const StateActionScores& scores, double w_n, double w_c, Rng& rng) {
    if (scores.actions.empty()) throw std::invalid_argument("no available actions");
    const Eigen::VectorXd p = wa_distribution(scores, w_n, w_c);
    return scores.actions[sample_index(std::span<const double>(p.data(), p.size()), rng)];
}

std::optional<MdftModel> orchestration_model(const StateActionScores& scores, double w_n, double w_c, int mdft_steps,
                                             const FeedbackParams& feedback) {
    if (scores.actions.size() < 2) return std::nullopt;
    Eigen::MatrixXd m(scores.sq_n.size(), 2);
    m.col(0) = scores.sq_n;
    m.col(1) = scores.sq_c;
    return MdftModel(std::move(m), Eigen::Vector2d(w_n, w_c), FixedSteps{mdft_steps}, feedback);
}

int mdft_select(const StateActionScores& scores, double w_n, double w_c, int mdft_steps, Rng& rng,
                const FeedbackParams& feedback) {
    if (scores.actions.empty()) throw std::invalid_argument("no available actions");
    const auto model = orchestration_model(scores, w_n, w_c, mdft_steps, feedback);
    if (!model) return scores.actions.front();
    return scores.actions[deliberate(*model, rng)];
}

Orchestrator::Orchestrator(const ScoreTable& scores, OrchestratorConfig config)
    : scores_(&scores), config_(config) {
    config_.validate();
    if (config_.kind == OrchestratorKind::mdft) {
        models_.reserve(scores.num_states());
        for (int s = 0; s < scores.num_states(); ++s)
            models_.push_back(orchestration_model(scores.at(s), config_.w_n, config_.w_c, config_.mdft_steps, config_.feedback));
    }
}

int Orchestrator::choose(int s, Rng& rng) const {
    const auto& row = scores_->at(s);
    switch (config_.kind) {
        case OrchestratorKind::greedy: return greedy_select(row);
        case OrchestratorKind::weighted_average: return wa_select(row, config_.w_n, config_.w_c, rng);
        case OrchestratorKind::mdft:
            if (row.actions.empty()) throw std::invalid_argument("no available actions");
            if (!models_[s]) return row.actions.front();
            return row.actions[deliberate(*models_[s], rng)];
    }
    throw std::logic_error("unreachable");
}

std::vector<Trajectory> run_agent(const TabularMDP& env, const ScoreTable& scores, const OrchestratorConfig& config,
                                  int n, std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("run_agent: negative episode count");
    if (scores.num_states() != env.num_states()) throw std::invalid_argument("scores do not match the environment");
    const Orchestrator agent(scores, config);
    const ActionChooser choose = [&](int s, Rng& rng) { return agent.choose(s, rng); };
    std::vector<Trajectory> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        auto streams = EpisodeStreams::make(seed, static_cast<std::uint64_t>(i));
        out.push_back(rollout(env, choose, streams));
    }
    return out;
}

bool wa_unrepresentability_check(const Eigen::VectorXd& sq_n, const Eigen::VectorXd& sq_c, double grid_step) {
    if (sq_n.size() != 3 || sq_c.size() != 3) throw std::domain_error("check is defined for exactly three actions");
    if (!(grid_step > 0.0 && grid_step <= 1.0)) throw std::domain_error("grid_step must lie in (0, 1]");
    const long long intervals = std::llround(1.0 / grid_step);
    if (std::abs(static_cast<double>(intervals) * grid_step - 1.0) > 1e-9)
        throw std::domain_error("grid_step must divide 1");

    std::array<Rational, 3> n, c;
    for (int i = 0; i < 3; ++i) {
        n[i] = exact(sq_n[i]);
        c[i] = exact(sq_c[i]);
    }
    for (long long i = 0; i <= intervals; ++i) {
        const Rational wn(i, intervals);
        const Rational wc = 1 - wn;
        const Rational p1 = wn * n[0] + wc * c[0];
        const Rational p2 = wn * n[1] + wc * c[1];
        const Rational p3 = wn * n[2] + wc * c[2];
        if (p2 > (p1 > p3 ? p1 : p3)) return false;
    }
    return true;
}

}  // namespace mesc
