#include "mesc/constraint_prob.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace mesc {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_sigma(double sigma) {
    if (!(sigma > 0.0)) throw std::domain_error("sigma_pooled must be positive");
}

}  // namespace

double reward_std(const TabularMDP& mdp) {
    double sum = 0.0;
    double sq = 0.0;
    std::size_t count = 0;
    for (const auto& t : mdp.transitions()) {
        if (t.from == mdp.goal()) continue;
        const double r = mdp.reward(t.from, t.action, t.to);
        sum += r;
        sq += r * r;
        ++count;
    }
    if (count == 0) return 0.0;
    const double mean = sum / static_cast<double>(count);
    return std::sqrt(std::max(0.0, sq / static_cast<double>(count) - mean * mean));
}

double pooled_std(double sigma_nominal, double sigma_constrained) {
    const double pooled = std::sqrt((sigma_nominal * sigma_nominal + sigma_constrained * sigma_constrained) / 2.0);
    if (!(pooled > 0.0)) throw DegenerateDistribution("pooled standard deviation is zero; zeta is undefined");
    return pooled;
}

double pooled_std(const TabularMDP& nominal, const ResidualModel& model) {
    return pooled_std(reward_std(nominal), reward_std(apply_residual(nominal, model.omega_r)));
}

double transition_constraint_prob(double penalty, double sigma_pooled) {
    check_sigma(sigma_pooled);
    return sigmoid((penalty - sigma_pooled) / sigma_pooled);
}

std::vector<double> feature_constraint_prob(const ResidualModel& model, std::span<const int> feature_subset,
                                            double sigma_pooled) {
    if (feature_subset.empty()) throw std::domain_error("feature subset is empty");
    check_sigma(sigma_pooled);
    std::vector<double> out;
    out.reserve(feature_subset.size());
    for (int i : feature_subset) {
        if (i < 0 || i >= model.omega_r.size()) throw std::domain_error("feature index out of range");
        out.push_back(sigmoid((model.omega_r[i] - sigma_pooled) / sigma_pooled));
    }
    return out;
}

bool hard_threshold(double zeta, double cutoff) {
    if (!(cutoff >= 0.0 && cutoff <= 1.0)) throw std::domain_error("cutoff outside [0, 1]");
    return zeta >= cutoff;
}

ConstraintEstimate estimate_constraints(const TabularMDP& nominal, const ResidualModel& model) {
    ConstraintEstimate est;
    est.sigma_nominal = reward_std(nominal);
    est.sigma_constrained = reward_std(apply_residual(nominal, model.omega_r));
    est.sigma_pooled = pooled_std(est.sigma_nominal, est.sigma_constrained);

    const auto trans = nominal.transitions();
    est.zeta.reserve(trans.size());
    for (const auto& t : trans)
        est.zeta.push_back(transition_constraint_prob(nominal.dot(model.omega_r, t.from, t.action, t.to), est.sigma_pooled));

    std::vector<int> all(static_cast<std::size_t>(model.omega_r.size()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    est.zeta_f = feature_constraint_prob(model, all, est.sigma_pooled);
    return est;
}

void write_transition_zeta_csv(std::ostream& out, const TabularMDP& mdp, const ConstraintEstimate& est) {
    out << "s,a,s_next,zeta\n" << std::setprecision(12);
    const auto trans = mdp.transitions();
    for (std::size_t i = 0; i < trans.size(); ++i)
        out << trans[i].from << ',' << trans[i].action << ',' << trans[i].to << ',' << est.zeta[i] << '\n';
}

void write_feature_zeta_csv(std::ostream& out, const ConstraintEstimate& est) {
    out << "feature_index,zeta_f\n" << std::setprecision(12);
    for (std::size_t i = 0; i < est.zeta_f.size(); ++i) out << i << ',' << est.zeta_f[i] << '\n';
}

}  // namespace mesc
