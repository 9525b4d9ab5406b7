#include "mesc/mesc_irl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mesc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// log Z_h(s) for h = 0..horizon, row h.
Eigen::MatrixXd backward_pass(const TabularMDP& mdp, const std::vector<double>& log_weight, int horizon) {
    const int n = mdp.num_states();
    Eigen::MatrixXd log_z = Eigen::MatrixXd::Zero(horizon + 1, n);
    const auto trans = mdp.transitions();
    for (int h = 1; h <= horizon; ++h) {
        for (int s = 0; s < n; ++s) {
            if (s == mdp.goal() || mdp.actions(s).empty()) continue;
            double acc = kNegInf;
            for (int a : mdp.actions(s)) {
                const auto [b, e] = mdp.transition_range(s, a);
                for (std::size_t i = b; i < e; ++i) acc = log_add(acc, log_weight[i] + log_z(h - 1, trans[i].to));
            }
            log_z(h, s) = acc;
        }
    }
    return log_z;
}

// log P(s'|s,a) + omega . phi(s,a,s') per transition.
std::vector<double> transition_log_weights(const TabularMDP& mdp, const Eigen::VectorXd& omega) {
    const auto trans = mdp.transitions();
    std::vector<double> lw(trans.size());
    for (std::size_t i = 0; i < trans.size(); ++i)
        lw[i] = std::log(trans[i].prob) + mdp.dot(omega, trans[i].from, trans[i].action, trans[i].to);
    return lw;
}

}  // namespace

void to_json(nlohmann::json& j, const ResidualModel& m) {
    j = nlohmann::json{{"omega_r", to_vector(m.omega_r)}, {"omega_n", to_vector(m.omega_n)}};
}

void from_json(const nlohmann::json& j, ResidualModel& m) {
    m.omega_r = from_vector(j.at("omega_r").get<std::vector<double>>());
    m.omega_n = from_vector(j.at("omega_n").get<std::vector<double>>());
    if (m.omega_r.size() != m.omega_n.size()) throw std::invalid_argument("omega_r and omega_n differ in length");
}

void IrlHyperparams::validate() const {
    if (!(learning_rate > 0.0) || !(decay > 0.0) || iterations < 0 || horizon <= 0 || !(convergence_tol > 0.0))
        throw std::invalid_argument("IRL hyperparameters must be positive");
}

Eigen::VectorXd empirical_feature_expectation(const TabularMDP& mdp, const std::vector<Trajectory>& demos) {
    if (demos.empty()) throw std::invalid_argument("empirical_feature_expectation: no demonstrations");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(mdp.feature_dim());
    for (const auto& tau : demos) mean += trajectory_features(mdp, tau);
    return mean / static_cast<double>(demos.size());
}

MaxEntResult expected_feature_counts(const TabularMDP& mdp, const Eigen::VectorXd& omega, int horizon) {
    if (omega.size() != mdp.feature_dim()) throw std::invalid_argument("weight vector has wrong dimension");
    if (!omega.allFinite()) throw std::domain_error("weight vector is not finite");
    if (horizon <= 0) throw std::invalid_argument("horizon must be positive");

    const int n = mdp.num_states();
    const auto trans = mdp.transitions();
    const std::vector<double> lw = transition_log_weights(mdp, omega);
    const Eigen::MatrixXd log_z = backward_pass(mdp, lw, horizon);

    MaxEntResult out;
    out.visits.values.assign(trans.size(), 0.0);
    out.log_partition = kNegInf;
    for (int s = 0; s < n; ++s)
        if (mdp.start_dist()[s] > 0.0) out.log_partition = log_add(out.log_partition, std::log(mdp.start_dist()[s]) + log_z(horizon, s));

    Eigen::VectorXd occ = mdp.start_dist();
    for (int t = 0; t < horizon; ++t) {
        const int remaining = horizon - t;
        Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
        for (int s = 0; s < n; ++s) {
            if (occ[s] == 0.0) continue;
            if (s == mdp.goal() || mdp.actions(s).empty()) {
                next[s] += occ[s];
                continue;
            }
            for (int a : mdp.actions(s)) {
                const auto [b, e] = mdp.transition_range(s, a);
                for (std::size_t i = b; i < e; ++i) {
                    const double p = std::exp(lw[i] + log_z(remaining - 1, trans[i].to) - log_z(remaining, s));
                    const double mass = occ[s] * p;
                    out.visits.values[i] += mass;
                    next[trans[i].to] += mass;
                }
            }
        }
        occ = std::move(next);
    }

    out.feature_expectation = Eigen::VectorXd::Zero(mdp.feature_dim());
    for (std::size_t i = 0; i < trans.size(); ++i) {
        const double d = out.visits.values[i];
        if (d == 0.0) continue;
        const FeatureBits f = mdp.feature_bits(trans[i].from, trans[i].action, trans[i].to);
        if (f.state >= 0) out.feature_expectation[f.state] += d;
        if (f.action >= 0) out.feature_expectation[f.action] += d;
        if (f.color >= 0) out.feature_expectation[f.color] += d;
    }
    return out;
}

double demo_log_likelihood(const TabularMDP& mdp, const std::vector<Trajectory>& demos, const Eigen::VectorXd& omega,
                           int horizon) {
    if (demos.empty()) throw std::invalid_argument("demo_log_likelihood: no demonstrations");
    const std::vector<double> lw = transition_log_weights(mdp, omega);
    const Eigen::MatrixXd log_z = backward_pass(mdp, lw, horizon);
    double total = 0.0;
    for (const auto& tau : demos) {
        validate_trajectory(mdp, tau);
        const int len = static_cast<int>(tau.size());
        const int s0 = tau.empty() ? mdp.start() : tau.front().s;
        const int last = tau.empty() ? s0 : tau.back().s_next;
        if (len > horizon || (len < horizon && last != mdp.goal() && !mdp.actions(last).empty()))
            throw std::invalid_argument("demonstration is neither complete nor horizon-length");
        double ll = std::log(mdp.start_dist()[s0]) - log_z(horizon, s0);
        for (const auto& st : tau) {
            double p = 0.0;
            for (const auto& t : mdp.transitions(st.s, st.a))
                if (t.to == st.s_next) p += t.prob;
            ll += std::log(p) + mdp.dot(omega, st.s, st.a, st.s_next);
        }
        total += ll;
    }
    return total / static_cast<double>(demos.size());
}

Eigen::VectorXd mesc_irl_gradient(const TabularMDP& mdp, const std::vector<Trajectory>& demos,
                                  const Eigen::VectorXd& omega_r, int horizon) {
    if (omega_r.size() != mdp.feature_dim()) throw std::invalid_argument("residual has wrong dimension");
    const Eigen::VectorXd omega_c = mdp.weights() - omega_r;
    return expected_feature_counts(mdp, omega_c, horizon).feature_expectation - empirical_feature_expectation(mdp, demos);
}

ResidualModel mesc_irl_learn(const TabularMDP& mdp, const std::vector<Trajectory>& demos, const IrlHyperparams& hp,
                             LearnTrace* trace) {
    hp.validate();
    const Eigen::VectorXd empirical = empirical_feature_expectation(mdp, demos);
    ResidualModel model;
    model.omega_n = mdp.weights();
    model.omega_r = Eigen::VectorXd::Zero(mdp.feature_dim());

    LearnTrace local;
    double lr = hp.learning_rate;
    for (int it = 0; it < hp.iterations; ++it) {
        const Eigen::VectorXd omega_c = model.omega_n - model.omega_r;
        Eigen::VectorXd grad = expected_feature_counts(mdp, omega_c, hp.horizon).feature_expectation - empirical;
        // components pinned at zero whose ascent direction points below it
        for (Eigen::Index i = 0; i < grad.size(); ++i)
            if (model.omega_r[i] <= 0.0 && grad[i] < 0.0) grad[i] = 0.0;
        local.final_gradient_norm = grad.cwiseAbs().maxCoeff();
        if (local.final_gradient_norm < hp.convergence_tol) {
            local.converged = true;
            break;
        }
        model.omega_r = (model.omega_r + lr * grad).cwiseMax(0.0);
        local.iterations = it + 1;
        if (!model.omega_r.allFinite()) {
            std::ostringstream msg;
            msg << "MESC-IRL diverged at iteration " << it << " (learning rate " << lr << ", gradient sup-norm "
                << local.final_gradient_norm << ")";
            throw std::runtime_error(msg.str());
        }
        lr *= hp.decay;
    }
    if (trace) *trace = local;
    return model;
}

}  // namespace mesc
