#include "mesc/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace mesc {

namespace {

constexpr std::array<std::pair<int, int>, kNumActions> kDeltas{{
    {-1, 0}, {0, 1}, {1, 0}, {0, -1}, {-1, 1}, {1, 1}, {1, -1}, {-1, -1}}};
constexpr std::array<const char*, kNumActions> kActionNames{"N", "E", "S", "W", "NE", "SE", "SW", "NW"};

void check_action(int a) {
    if (a < 0 || a >= kNumActions) throw InvalidAction("action index out of range: " + std::to_string(a));
}

nlohmann::json cell_json(Cell c) { return nlohmann::json::array({c.row, c.col}); }

Cell cell_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("cell must be a [row, col] pair");
    return {j.at(0).get<int>(), j.at(1).get<int>()};
}

}  // namespace

std::pair<int, int> action_delta(int action) {
    check_action(action);
    return kDeltas[action];
}

bool is_diagonal(int action) {
    check_action(action);
    return action >= static_cast<int>(Action::NE);
}

std::string action_name(int action) {
    check_action(action);
    return kActionNames[action];
}

int action_from_name(const std::string& name) {
    for (int a = 0; a < kNumActions; ++a)
        if (name == kActionNames[a]) return a;
    throw std::invalid_argument("unknown action name: " + name);
}

std::string color_name(Color c) {
    switch (c) {
        case Color::none: return "none";
        case Color::blue: return "blue";
        case Color::green: return "green";
        case Color::red: return "red";
    }
    throw std::invalid_argument("bad color");
}

Color color_from_name(const std::string& name) {
    if (name == "none") return Color::none;
    if (name == "blue") return Color::blue;
    if (name == "green") return Color::green;
    if (name == "red") return Color::red;
    throw std::invalid_argument("unknown color: " + name);
}

void GridSpec::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("GridSpec: " + msg); };
    if (width <= 0 || height <= 0) fail("width and height must be positive");
    auto inside = [&](Cell c) { return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width; };
    if (!inside(start)) fail("start out of bounds");
    if (!inside(goal)) fail("goal out of bounds");
    if (start == goal && width * height != 1) fail("start equals goal");
    if (!(slip_prob >= 0.0 && slip_prob <= 1.0)) fail("slip_prob outside [0, 1]");
    if (!(discount >= 0.0 && discount <= 1.0)) fail("discount outside [0, 1]");
    if (horizon <= 0) fail("horizon must be positive");

    std::set<Cell> seen;
    for (const auto& [cell, color] : colors) {
        if (!inside(cell)) fail("colored cell out of bounds");
        if (color == Color::none) fail("explicit 'none' color entry");
        if (!seen.insert(cell).second) fail("cell assigned more than one color");
    }
    seen.clear();
    for (const auto& cell : constrained_cells) {
        if (!inside(cell)) fail("constrained cell out of bounds");
        if (cell == goal) fail("goal cannot be constrained");
        if (!seen.insert(cell).second) fail("duplicate constrained cell");
    }
    std::set<int> acts;
    for (int a : constrained_actions) {
        if (a < 0 || a >= kNumActions) fail("constrained action out of range");
        if (!acts.insert(a).second) fail("duplicate constrained action");
    }
    std::set<Color> feats;
    for (Color c : constrained_features) {
        if (c == Color::none) fail("'none' cannot be a constrained feature");
        if (!feats.insert(c).second) fail("duplicate constrained feature");
    }
}

void to_json(nlohmann::json& j, const GridSpec& spec) {
    nlohmann::json colors = nlohmann::json::array();
    for (const auto& [cell, color] : spec.colors) colors.push_back({{"cell", cell_json(cell)}, {"color", color_name(color)}});
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : spec.constrained_cells) cells.push_back(cell_json(c));
    nlohmann::json acts = nlohmann::json::array();
    for (int a : spec.constrained_actions) acts.push_back(action_name(a));
    nlohmann::json feats = nlohmann::json::array();
    for (Color c : spec.constrained_features) feats.push_back(color_name(c));
    j = nlohmann::json{{"width", spec.width},
                       {"height", spec.height},
                       {"start", cell_json(spec.start)},
                       {"goal", cell_json(spec.goal)},
                       {"colors", colors},
                       {"slip_prob", spec.slip_prob},
                       {"goal_reward", spec.goal_reward},
                       {"cardinal_penalty", spec.cardinal_penalty},
                       {"diagonal_penalty", spec.diagonal_penalty},
                       {"discount", spec.discount},
                       {"horizon", spec.horizon},
                       {"constrained_cells", cells},
                       {"constraint_cost", spec.constraint_cost},
                       {"constrained_actions", acts},
                       {"constrained_features", feats}};
}

void from_json(const nlohmann::json& j, GridSpec& spec) {
    spec = GridSpec{};
    auto opt = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    opt("width", spec.width);
    opt("height", spec.height);
    if (j.contains("start")) spec.start = cell_from(j.at("start"));
    if (j.contains("goal")) spec.goal = cell_from(j.at("goal"));
    if (j.contains("colors"))
        for (const auto& e : j.at("colors"))
            spec.colors.emplace_back(cell_from(e.at("cell")), color_from_name(e.at("color").get<std::string>()));
    opt("slip_prob", spec.slip_prob);
    opt("goal_reward", spec.goal_reward);
    opt("cardinal_penalty", spec.cardinal_penalty);
    opt("diagonal_penalty", spec.diagonal_penalty);
    opt("discount", spec.discount);
    opt("horizon", spec.horizon);
    if (j.contains("constrained_cells"))
        for (const auto& e : j.at("constrained_cells")) spec.constrained_cells.push_back(cell_from(e));
    opt("constraint_cost", spec.constraint_cost);
    if (j.contains("constrained_actions"))
        for (const auto& e : j.at("constrained_actions"))
            spec.constrained_actions.push_back(e.is_number() ? e.get<int>() : action_from_name(e.get<std::string>()));
    if (j.contains("constrained_features"))
        for (const auto& e : j.at("constrained_features"))
            spec.constrained_features.push_back(color_from_name(e.get<std::string>()));
}

TabularMDP build_grid(const GridSpec& spec) {
    spec.validate();
    TabularMDP m;
    m.width_ = spec.width;
    m.height_ = spec.height;
    m.start_ = m.state_of(spec.start);
    m.goal_ = m.state_of(spec.goal);
    m.discount_ = spec.discount;
    m.horizon_ = spec.horizon;
    m.slip_ = spec.slip_prob;

    const int n = m.num_states();
    m.colors_.assign(n, Color::none);
    for (const auto& [cell, color] : spec.colors) m.colors_[m.state_of(cell)] = color;

    m.actions_.resize(n);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < kNumActions; ++a)
            if (m.move_target(s, a)) m.actions_[s].push_back(a);

    m.ranges_.assign(static_cast<std::size_t>(n) * kNumActions + 1, 0);
    for (int s = 0; s < n; ++s) {
        const auto& acts = m.actions_[s];
        const double slip_share = acts.empty() ? 0.0 : spec.slip_prob / static_cast<double>(acts.size());
        for (int a = 0; a < kNumActions; ++a) {
            m.ranges_[s * kNumActions + a] = m.transitions_.size();
            if (!m.available(s, a)) continue;
            if (s == m.goal_) {
                m.transitions_.push_back({s, a, s, 1.0});
                continue;
            }
            for (int b : acts) {
                const double p = (b == a ? 1.0 - spec.slip_prob : 0.0) + slip_share;
                if (p > 0.0) m.transitions_.push_back({s, a, *m.move_target(s, b), p});
            }
        }
    }
    m.ranges_.back() = m.transitions_.size();

    m.start_dist_ = Eigen::VectorXd::Zero(n);
    m.start_dist_[m.start_] = 1.0;

    Eigen::VectorXd nominal = Eigen::VectorXd::Zero(m.feature_dim());
    nominal[m.state_offset() + m.goal_] = spec.goal_reward;
    for (int a = 0; a < kNumActions; ++a)
        nominal[m.action_offset() + a] = is_diagonal(a) ? spec.diagonal_penalty : spec.cardinal_penalty;

    Eigen::VectorXd weights = nominal;
    for (const auto& cell : spec.constrained_cells) weights[m.state_offset() + m.state_of(cell)] += spec.constraint_cost;
    for (int a : spec.constrained_actions) weights[m.action_offset() + a] += spec.constraint_cost;
    for (Color c : spec.constrained_features) weights[m.color_offset() + static_cast<int>(c)] += spec.constraint_cost;

    m.nominal_weights_ = std::move(nominal);
    m.weights_ = std::move(weights);
    return m;
}

bool TabularMDP::available(int s, int a) const {
    if (s < 0 || s >= num_states() || a < 0 || a >= kNumActions) return false;
    const auto& acts = actions_[s];
    return std::binary_search(acts.begin(), acts.end(), a);
}

std::optional<int> TabularMDP::move_target(int s, int a) const {
    const auto [dr, dc] = action_delta(a);
    const Cell c = cell_of(s);
    const Cell t{c.row + dr, c.col + dc};
    if (!in_bounds(t)) return std::nullopt;
    return state_of(t);
}

std::pair<std::size_t, std::size_t> TabularMDP::transition_range(int s, int a) const {
    if (!available(s, a))
        throw InvalidAction("action " + std::to_string(a) + " not available in state " + std::to_string(s));
    const std::size_t i = static_cast<std::size_t>(s) * kNumActions + a;
    return {ranges_[i], ranges_[i + 1]};
}

std::span<const Transition> TabularMDP::transitions(int s, int a) const {
    const auto [b, e] = transition_range(s, a);
    return std::span<const Transition>(transitions_).subspan(b, e - b);
}

FeatureBits TabularMDP::feature_bits(int s, int a, int s_next) const {
    if (s == goal_) return {};
    FeatureBits f;
    f.state = state_offset() + s_next;
    f.action = action_offset() + a;
    if (colors_[s_next] != Color::none) f.color = color_offset() + static_cast<int>(colors_[s_next]);
    return f;
}

Eigen::VectorXd TabularMDP::features(int s, int a, int s_next) const {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(feature_dim());
    const FeatureBits f = feature_bits(s, a, s_next);
    if (f.state >= 0) phi[f.state] = 1.0;
    if (f.action >= 0) phi[f.action] = 1.0;
    if (f.color >= 0) phi[f.color] = 1.0;
    return phi;
}

double TabularMDP::dot(const Eigen::VectorXd& w, int s, int a, int s_next) const {
    const FeatureBits f = feature_bits(s, a, s_next);
    double r = 0.0;
    if (f.state >= 0) r += w[f.state];
    if (f.action >= 0) r += w[f.action];
    if (f.color >= 0) r += w[f.color];
    return r;
}

double TabularMDP::cost(int s, int a, int s_next) const {
    return dot(weights_, s, a, s_next) - dot(nominal_weights_, s, a, s_next);
}

TabularMDP TabularMDP::with_weights(Eigen::VectorXd weights) const {
    if (weights.size() != feature_dim()) throw std::invalid_argument("weight vector has wrong dimension");
    TabularMDP m = *this;
    m.weights_ = std::move(weights);
    return m;
}

Eigen::VectorXd transition_dist(const TabularMDP& mdp, int s, int a) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(mdp.num_states());
    for (const auto& t : mdp.transitions(s, a)) p[t.to] += t.prob;
    return p;
}

void validate_trajectory(const TabularMDP& mdp, const Trajectory& tau) {
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const Step& st = tau[i];
        if (st.s < 0 || st.s >= mdp.num_states() || st.s_next < 0 || st.s_next >= mdp.num_states())
            throw InvalidAction("trajectory state out of range at step " + std::to_string(i));
        if (i > 0 && tau[i - 1].s_next != st.s)
            throw InvalidAction("trajectory does not chain at step " + std::to_string(i));
        bool reachable = false;
        for (const auto& t : mdp.transitions(st.s, st.a)) reachable = reachable || t.to == st.s_next;
        if (!reachable) throw InvalidAction("transition has zero probability at step " + std::to_string(i));
    }
}

double trajectory_reward(const TabularMDP& mdp, const Trajectory& tau) {
    validate_trajectory(mdp, tau);
    double total = 0.0;
    double g = 1.0;
    for (const auto& st : tau) {
        total += g * mdp.reward(st.s, st.a, st.s_next);
        g *= mdp.discount();
    }
    return total;
}

Eigen::VectorXd trajectory_features(const TabularMDP& mdp, const Trajectory& tau) {
    validate_trajectory(mdp, tau);
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(mdp.feature_dim());
    for (const auto& st : tau) {
        const FeatureBits f = mdp.feature_bits(st.s, st.a, st.s_next);
        if (f.state >= 0) phi[f.state] += 1.0;
        if (f.action >= 0) phi[f.action] += 1.0;
        if (f.color >= 0) phi[f.color] += 1.0;
    }
    return phi;
}

double trajectory_cost(const TabularMDP& mdp, const Trajectory& tau) {
    double c = 0.0;
    for (const auto& st : tau) c += mdp.cost(st.s, st.a, st.s_next);
    return c;
}

TabularMDP apply_residual(const TabularMDP& nominal, const Eigen::VectorXd& omega_r) {
    if (omega_r.size() != nominal.feature_dim())
        throw std::invalid_argument("residual has dimension " + std::to_string(omega_r.size()) + ", expected " +
                                    std::to_string(nominal.feature_dim()));
    if ((omega_r.array() < 0.0).any()) throw std::domain_error("residual weights must be nonnegative");
    return nominal.with_weights(nominal.weights() - omega_r);
}

int shortest_path_length(const TabularMDP& mdp, int from, int to) {
    std::vector<int> dist(mdp.num_states(), -1);
    std::deque<int> queue{from};
    dist[from] = 0;
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        if (s == to) return dist[s];
        for (int a : mdp.actions(s)) {
            const int t = *mdp.move_target(s, a);
            if (dist[t] < 0) {
                dist[t] = dist[s] + 1;
                queue.push_back(t);
            }
        }
    }
    return -1;
}

}  // namespace mesc
