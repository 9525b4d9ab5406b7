#include "mesc/mdft.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

namespace mesc {

namespace {

// Marginal stability (radius exactly 1) arises when two options coincide; the
// corresponding difference mode never receives valence input.
constexpr double kRadiusSlack = 1e-12;

int argmax_lowest(const Eigen::VectorXd& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

void check_attention(const Eigen::VectorXd& w) {
    if (w.size() == 0) throw std::domain_error("attention weights are empty");
    if ((w.array() < 0.0).any() || !w.allFinite()) throw std::domain_error("attention weights must be nonnegative");
    if (std::abs(w.sum() - 1.0) > 1e-9) throw std::domain_error("attention weights must sum to 1");
}

}  // namespace

Eigen::MatrixXd build_contrast(int k) {
    if (k < 2) throw std::domain_error("contrast matrix needs at least two options");
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(k, k, -1.0 / static_cast<double>(k - 1));
    c.diagonal().setOnes();
    return c;
}

Eigen::MatrixXd build_feedback(const Eigen::MatrixXd& m, const FeedbackParams& params) {
    if (!(params.phi1 > 0.0)) throw std::domain_error("phi1 must be positive");
    if (!(params.phi2 > 0.0 && params.phi2 < 1.0)) throw std::domain_error("phi2 must lie in (0, 1)");
    if (!(params.dominance_weight > 0.0)) throw std::domain_error("dominance weight must be positive");
    const Eigen::Index k = m.rows();
    const Eigen::Index j = m.cols();
    const Eigen::VectorXd unit = Eigen::VectorXd::Constant(j, 1.0 / std::sqrt(static_cast<double>(j)));

    Eigen::MatrixXd s(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            const Eigen::VectorXd d = (m.row(a) - m.row(b)).transpose();
            const double dom = d.dot(unit);
            const double indiff_sq = std::max(0.0, d.squaredNorm() - dom * dom);
            const double dist_sq = indiff_sq + params.dominance_weight * dom * dom;
            s(a, b) = (a == b ? 1.0 : 0.0) - params.phi2 * std::exp(-params.phi1 * dist_sq);
        }
    }
    const double radius = spectral_radius(s);
    if (radius > 1.0 + kRadiusSlack)
        throw UnstableFeedback("feedback matrix has spectral radius " + std::to_string(radius));
    return s;
}

double spectral_radius(const Eigen::MatrixXd& s) {
    if (s.size() == 0) return 0.0;
    if (s.isApprox(s.transpose())) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().cwiseAbs().maxCoeff();
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(s, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::VectorXd valence(const Eigen::MatrixXd& c, const Eigen::MatrixXd& m, int attribute) {
    if (attribute < 0 || attribute >= m.cols()) throw std::out_of_range("attribute index out of range");
    return c * m.col(attribute);
}

MdftModel::MdftModel(Eigen::MatrixXd m, Eigen::VectorXd w, StopRule stop, FeedbackParams params)
    : m_(std::move(m)), w_(std::move(w)), stop_(stop), params_(params) {
    if (m_.rows() < 2) throw std::domain_error("MDFT needs at least two options");
    if (m_.cols() != w_.size()) throw std::domain_error("attention weights do not match the attribute count");
    if (!m_.allFinite()) throw std::domain_error("evaluation matrix is not finite");
    check_attention(w_);
    if (const auto* f = std::get_if<FixedSteps>(&stop_); f && f->steps < 1)
        throw std::domain_error("fixed deliberation needs at least one step");
    if (const auto* t = std::get_if<ThresholdStop>(&stop_); t && t->max_steps < 1)
        throw std::domain_error("threshold stopping needs max_steps >= 1");
    c_ = build_contrast(static_cast<int>(m_.rows()));
    s_ = build_feedback(m_, params_);
    cm_ = c_ * m_;
}

DeliberationState accumulate(const MdftModel& model, Rng& rng) {
    const Eigen::VectorXd& w = model.attention();
    const std::span<const double> weights(w.data(), static_cast<std::size_t>(w.size()));
    DeliberationState st{Eigen::VectorXd::Zero(model.num_options()), 0};

    auto step = [&] {
        const auto j = static_cast<Eigen::Index>(sample_index(weights, rng));
        st.preferences = model.feedback() * st.preferences + model.valences().col(j);
        ++st.t;
    };

    if (const auto* f = std::get_if<FixedSteps>(&model.stop_rule())) {
        while (st.t < f->steps) step();
    } else {
        const auto& rule = std::get<ThresholdStop>(model.stop_rule());
        while (st.t < rule.max_steps) {
            step();
            if (st.preferences.maxCoeff() >= rule.threshold) break;
        }
    }
    return st;
}

int deliberate(const MdftModel& model, Rng& rng) { return argmax_lowest(accumulate(model, rng).preferences); }

int deliberate(const MdftModel& model, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return deliberate(model, rng);
}

Eigen::VectorXd choice_distribution(const MdftModel& model, int n_runs, std::uint64_t seed) {
    if (n_runs < 1) throw std::invalid_argument("choice_distribution needs at least one run");
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(model.num_options());
    for (int r = 0; r < n_runs; ++r) freq[deliberate(model, derive_seed(seed, {static_cast<std::uint64_t>(r)}))] += 1.0;
    return freq / static_cast<double>(n_runs);
}

MdftModel mdft_from_distribution(const Eigen::VectorXd& p) {
    if (p.size() < 2) throw std::domain_error("distribution needs at least two options");
    check_attention(p);
    const Eigen::Index k = p.size();
    return MdftModel(Eigen::MatrixXd::Identity(k, k), p, FixedSteps{1});
}

MdftModel mdft_from_greedy(int chosen, int k, std::uint64_t weight_seed) {
    if (k < 2) throw std::domain_error("greedy embedding needs at least two options");
    if (chosen < 0 || chosen >= k) throw std::out_of_range("chosen option out of range");
    Rng rng = make_rng(weight_seed);
    const double w0 = uniform01(rng);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, 2);
    m.row(chosen).setOnes();
    return MdftModel(std::move(m), Eigen::Vector2d(w0, 1.0 - w0), FixedSteps{1});
}

void to_json(nlohmann::json& j, const MdftModel& model) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < model.evaluation().rows(); ++r) {
        std::vector<double> row(model.evaluation().cols());
        for (Eigen::Index c = 0; c < model.evaluation().cols(); ++c) row[c] = model.evaluation()(r, c);
        rows.push_back(row);
    }
    const auto& w = model.attention();
    nlohmann::json stop;
    if (const auto* f = std::get_if<FixedSteps>(&model.stop_rule()))
        stop = {{"fixed_steps", f->steps}};
    else {
        const auto& t = std::get<ThresholdStop>(model.stop_rule());
        stop = {{"threshold", t.threshold}, {"max_steps", t.max_steps}};
    }
    j = nlohmann::json{{"M", rows},
                       {"w", std::vector<double>(w.data(), w.data() + w.size())},
                       {"phi1", model.feedback_params().phi1},
                       {"phi2", model.feedback_params().phi2},
                       {"dominance_weight", model.feedback_params().dominance_weight},
                       {"stop_rule", stop}};
}

MdftModel mdft_from_json(const nlohmann::json& j) {
    const auto rows = j.at("M").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw std::domain_error("M is empty");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) throw std::domain_error("M rows differ in length");
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    const auto wv = j.at("w").get<std::vector<double>>();
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(wv.data(), static_cast<Eigen::Index>(wv.size()));
    FeedbackParams params;
    params.phi1 = j.value("phi1", params.phi1);
    params.phi2 = j.value("phi2", params.phi2);
    params.dominance_weight = j.value("dominance_weight", params.dominance_weight);
    StopRule stop = FixedSteps{1};
    const auto& sr = j.at("stop_rule");
    if (sr.contains("fixed_steps"))
        stop = FixedSteps{sr.at("fixed_steps").get<int>()};
    else
        stop = ThresholdStop{sr.at("threshold").get<double>(), sr.value("max_steps", 1000)};
    return MdftModel(std::move(m), std::move(w), stop, params);
}

}  // namespace mesc
