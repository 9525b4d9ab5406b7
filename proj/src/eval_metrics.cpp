#include "mesc/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace mesc {

namespace {

void check_aligned(std::span<const double> predicted, const ConstraintGroundTruth& truth) {
    truth.validate();
    if (predicted.size() != truth.cost.size()) throw std::invalid_argument("prediction and ground truth differ in size");
}

void check_unit(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error(std::string(what) + " outside [0, 1]");
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> smooth(std::span<const double> p) {
    std::vector<double> out(p.begin(), p.end());
    double total = 0.0;
    for (double& x : out) {
        if (x < 0.0) throw std::domain_error("negative probability");
        x += kSmoothing;
        total += x;
    }
    for (double& x : out) x /= total;
    return out;
}

double kl_smoothed(const std::vector<double>& p, const std::vector<double>& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
    return std::max(0.0, kl);
}

bool step_less(const Trajectory& a, const Trajectory& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](const Step& x, const Step& y) {
        return std::tie(x.s, x.a, x.s_next) < std::tie(y.s, y.a, y.s_next);
    });
}

}  // namespace

void ConstraintGroundTruth::validate() const {
    if (num_constraints <= 0) throw std::domain_error("num_constraints must be positive");
    if (cost.size() != zeta.size()) throw std::invalid_argument("cost and zeta differ in size");
    for (double z : zeta) check_unit(z, "true zeta");
}

double soft_fp_rate(std::span<const double> predicted, const ConstraintGroundTruth& truth, double chi) {
    check_aligned(predicted, truth);
    check_unit(chi, "chi");
    int count = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (truth.cost[i] == 0.0 && predicted[i] - truth.zeta[i] > chi) ++count;
    return static_cast<double>(count) / truth.num_constraints;
}

double soft_fn_rate(std::span<const double> predicted, const ConstraintGroundTruth& truth, double chi) {
    check_aligned(predicted, truth);
    check_unit(chi, "chi");
    int count = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (truth.cost[i] != 0.0 && truth.zeta[i] - predicted[i] > chi) ++count;
    return static_cast<double>(count) / truth.num_constraints;
}

double hard_fp_rate(std::span<const double> predicted, const ConstraintGroundTruth& truth, double cutoff) {
    check_aligned(predicted, truth);
    int count = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (truth.cost[i] == 0.0 && hard_threshold(predicted[i], cutoff)) ++count;
    return static_cast<double>(count) / truth.num_constraints;
}

double hard_fn_rate(std::span<const double> predicted, const ConstraintGroundTruth& truth, double cutoff) {
    check_aligned(predicted, truth);
    int count = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (truth.cost[i] != 0.0 && !hard_threshold(predicted[i], cutoff)) ++count;
    return static_cast<double>(count) / truth.num_constraints;
}

ConstraintGroundTruth cell_ground_truth(const TabularMDP& nominal, const TabularMDP& truth, int num_constraints) {
    const double sigma = pooled_std(reward_std(nominal), reward_std(truth));
    ConstraintGroundTruth gt;
    gt.num_constraints = num_constraints;
    for (int s = 0; s < nominal.num_states(); ++s) {
        const int f = nominal.state_offset() + s;
        const double c = truth.weights()[f] - nominal.weights()[f];
        gt.cost.push_back(c);
        gt.zeta.push_back(logistic((-c - sigma) / sigma));
    }
    return gt;
}

std::vector<double> cell_predictions(const TabularMDP& nominal, const ConstraintEstimate& est) {
    const auto first = est.zeta_f.begin() + nominal.state_offset();
    return {first, first + nominal.num_states()};
}

ConstraintGroundTruth transition_ground_truth(const TabularMDP& nominal, const TabularMDP& truth, int num_constraints) {
    const double sigma = pooled_std(reward_std(nominal), reward_std(truth));
    ConstraintGroundTruth gt;
    gt.num_constraints = num_constraints;
    for (const auto& t : nominal.transitions()) {
        const double c = truth.reward(t.from, t.action, t.to) - nominal.reward(t.from, t.action, t.to);
        gt.cost.push_back(c);
        gt.zeta.push_back(logistic((-c - sigma) / sigma));
    }
    return gt;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("distributions differ in support size");
    return kl_smoothed(smooth(p), smooth(q));
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("distributions differ in support size");
    const auto ps = smooth(p);
    const auto qs = smooth(q);
    std::vector<double> m(ps.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (ps[i] + qs[i]);
    return std::min(std::log(2.0), 0.5 * kl_smoothed(ps, m) + 0.5 * kl_smoothed(qs, m));
}

TrajectoryDistribution trajectory_distribution(const std::vector<Trajectory>& trajs) {
    if (trajs.empty()) throw std::invalid_argument("trajectory_distribution: empty trajectory set");
    TrajectoryDistribution dist(&step_less);
    const double w = 1.0 / static_cast<double>(trajs.size());
    for (const auto& t : trajs) dist[t] += w;
    return dist;
}

std::pair<std::vector<double>, std::vector<double>> align_distributions(const TrajectoryDistribution& a,
                                                                        const TrajectoryDistribution& b) {
    std::vector<double> pa, pb;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && step_less(ia->first, ib->first))) {
            pa.push_back(ia->second);
            pb.push_back(0.0);
            ++ia;
        } else if (ia == a.end() || step_less(ib->first, ia->first)) {
            pa.push_back(0.0);
            pb.push_back(ib->second);
            ++ib;
        } else {
            pa.push_back(ia->second);
            pb.push_back(ib->second);
            ++ia;
            ++ib;
        }
    }
    return {pa, pb};
}

double trajectory_kl(const std::vector<Trajectory>& p, const std::vector<Trajectory>& q) {
    const auto [a, b] = align_distributions(trajectory_distribution(p), trajectory_distribution(q));
    return kl_divergence(a, b);
}

double trajectory_js(const std::vector<Trajectory>& p, const std::vector<Trajectory>& q) {
    const auto [a, b] = align_distributions(trajectory_distribution(p), trajectory_distribution(q));
    return js_divergence(a, b);
}

double mean_penalty(const std::vector<Trajectory>& trajs, const TabularMDP& env_truth) {
    if (trajs.empty()) return 0.0;
    double total = 0.0;
    for (const auto& t : trajs) total += -trajectory_cost(env_truth, t);
    return total / static_cast<double>(trajs.size());
}

TrajectoryQuality trajectory_quality(const std::vector<Trajectory>& trajs, const TabularMDP& env_truth,
                                     int shortest_len, double ref_penalty) {
    if (shortest_len < 1) throw std::domain_error("shortest path length must be >= 1");
    TrajectoryQuality q;
    if (trajs.empty()) return q;
    double len = 0.0;
    double violations = 0.0;
    for (const auto& tau : trajs) {
        len += static_cast<double>(tau.size());
        for (const auto& st : tau)
            if (env_truth.cost(st.s, st.a, st.s_next) != 0.0) violations += 1.0;
    }
    const double n = static_cast<double>(trajs.size());
    q.avg_norm_length = len / n / shortest_len;
    q.avg_violations = violations / n;
    const double pen = mean_penalty(trajs, env_truth);
    if (ref_penalty == 0.0) {
        q.avg_norm_penalty = pen;
        q.raw_penalty = true;
    } else {
        q.avg_norm_penalty = pen / ref_penalty;
    }
    return q;
}

}  // namespace mesc
