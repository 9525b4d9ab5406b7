#include "mesc/experiment.hpp"

#include "mesc/planner.hpp"
#include "mesc/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace mesc {

namespace {

constexpr const char* kVersion = "mesc 1.0.0";

int chebyshev(Cell a, Cell b) { return std::max(std::abs(a.row - b.row), std::abs(a.col - b.col)); }

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

template <typename T>
std::string opt_text(const std::optional<T>& v) {
    if (!v) return {};
    if constexpr (std::is_same_v<T, double>)
        return format_double(*v);
    else
        return std::to_string(*v);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::optional<double> parse_opt_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters in '" + s + "'");
    return v;
}

std::optional<int> parse_opt_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters in '" + s + "'");
    return v;
}

ResultRow base_row(const World& world, std::string method) {
    ResultRow r;
    r.world_id = world.index;
    r.method = std::move(method);
    r.seed = world.seed;
    return r;
}

void fill_quality(ResultRow& row, const TrajectoryQuality& q) {
    row.norm_len = q.avg_norm_length;
    row.norm_penalty = q.avg_norm_penalty;
    row.violations = q.avg_violations;
    if (q.raw_penalty) row.flag = "raw_penalty";
}

std::string pad(int i, int width) {
    std::ostringstream os;
    os << std::setw(width) << std::setfill('0') << i;
    return os.str();
}

}  // namespace

void to_json(nlohmann::json& j, const WorldParams& p) {
    j = nlohmann::json{{"width", p.width},
                       {"height", p.height},
                       {"min_distance", p.min_distance},
                       {"num_blue", p.num_blue},
                       {"num_green", p.num_green},
                       {"num_constrained", p.num_constrained},
                       {"constraint_cost", p.constraint_cost},
                       {"slip_prob", p.slip_prob},
                       {"discount", p.discount},
                       {"horizon", p.horizon},
                       {"max_attempts", p.max_attempts}};
}

void from_json(const nlohmann::json& j, WorldParams& p) {
    p = WorldParams{};
    p.width = j.value("width", p.width);
    p.height = j.value("height", p.height);
    p.min_distance = j.value("min_distance", p.min_distance);
    p.num_blue = j.value("num_blue", p.num_blue);
    p.num_green = j.value("num_green", p.num_green);
    p.num_constrained = j.value("num_constrained", p.num_constrained);
    p.constraint_cost = j.value("constraint_cost", p.constraint_cost);
    p.slip_prob = j.value("slip_prob", p.slip_prob);
    p.discount = j.value("discount", p.discount);
    p.horizon = j.value("horizon", p.horizon);
    p.max_attempts = j.value("max_attempts", p.max_attempts);
}

std::pair<GridSpec, GridSpec> gen_random_world(std::uint64_t seed, const WorldParams& params) {
    const int cells = params.width * params.height;
    if (params.num_blue + params.num_green > cells - 2 || params.num_constrained > cells - 2)
        throw std::invalid_argument("grid too small for the requested colored/constrained cells");
    Rng rng = make_rng(seed);
    auto random_cell = [&] {
        const auto i = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(cells)));
        return Cell{i / params.width, i % params.width};
    };

    GridSpec spec;
    spec.width = params.width;
    spec.height = params.height;
    spec.slip_prob = params.slip_prob;
    spec.discount = params.discount;
    spec.horizon = params.horizon;
    spec.constraint_cost = params.constraint_cost;

    bool found = false;
    for (int attempt = 0; attempt < params.max_attempts && !found; ++attempt) {
        spec.start = random_cell();
        spec.goal = random_cell();
        // on an open 8-connected grid the shortest path is the Chebyshev distance
        found = chebyshev(spec.start, spec.goal) >= params.min_distance;
    }
    if (!found)
        throw std::runtime_error("gen_random_world: no start/goal pair " + std::to_string(params.min_distance) +
                                 " moves apart after " + std::to_string(params.max_attempts) + " attempts (seed " +
                                 std::to_string(seed) + ")");

    std::vector<Cell> pool;
    for (int r = 0; r < params.height; ++r)
        for (int c = 0; c < params.width; ++c)
            if (Cell cell{r, c}; cell != spec.start && cell != spec.goal) pool.push_back(cell);

    const auto colored = sample_without_replacement(pool, static_cast<std::size_t>(params.num_blue + params.num_green), rng);
    for (int i = 0; i < params.num_blue + params.num_green; ++i)
        spec.colors.emplace_back(colored[i], i < params.num_blue ? Color::blue : Color::green);

    GridSpec truth = spec;
    truth.constrained_cells = sample_without_replacement(pool, static_cast<std::size_t>(params.num_constrained), rng);
    return {spec, truth};
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("ExperimentConfig: " + m); };
    if (n_worlds <= 0) fail("n_worlds must be positive");
    if (demos_per_world.empty()) fail("demos_per_world is empty");
    for (int n : demos_per_world)
        if (n <= 0) fail("demo counts must be positive");
    for (double x : chi_values)
        if (!(x >= 0.0 && x <= 1.0)) fail("chi outside [0, 1]");
    for (double x : zeta_cutoffs)
        if (!(x >= 0.0 && x <= 1.0)) fail("zeta cutoff outside [0, 1]");
    if (!(weight_step > 0.0 && weight_step <= 1.0)) fail("weight_step must lie in (0, 1]");
    const double intervals = std::round(1.0 / weight_step);
    if (std::abs(intervals * weight_step - 1.0) > 1e-9) fail("weight_step must divide 1 so both endpoints are covered");
    if (rollouts <= 0) fail("rollouts must be positive");
    if (mdft_steps < 1) fail("mdft_steps must be positive");
    if (!(temperature > 0.0)) fail("temperature must be positive");
    if (sweep_demos != 0 &&
        std::find(demos_per_world.begin(), demos_per_world.end(), sweep_demos) == demos_per_world.end())
        fail("sweep_demos must be one of demos_per_world");
    irl.validate();
}

int ExperimentConfig::effective_sweep_demos() const {
    return sweep_demos != 0 ? sweep_demos : *std::max_element(demos_per_world.begin(), demos_per_world.end());
}

std::vector<double> ExperimentConfig::weight_grid() const {
    const auto intervals = static_cast<int>(std::lround(1.0 / weight_step));
    std::vector<double> grid;
    for (int i = 0; i <= intervals; ++i) grid.push_back(static_cast<double>(i) / intervals);
    return grid;
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    std::vector<std::string> kinds;
    for (auto k : c.orchestrators) kinds.push_back(kind_name(k));
    j = nlohmann::json{{"n_worlds", c.n_worlds},
                       {"demos_per_world", c.demos_per_world},
                       {"seed", c.seed},
                       {"chi_values", c.chi_values},
                       {"zeta_cutoffs", c.zeta_cutoffs},
                       {"weight_step", c.weight_step},
                       {"orchestrators", kinds},
                       {"rollouts", c.rollouts},
                       {"sweep_demos", c.sweep_demos},
                       {"run_sweep", c.run_sweep},
                       {"temperature", c.temperature},
                       {"mdft_steps", c.mdft_steps},
                       {"feedback",
                        {{"phi1", c.feedback.phi1},
                         {"phi2", c.feedback.phi2},
                         {"dominance_weight", c.feedback.dominance_weight}}},
                       {"irl",
                        {{"learning_rate", c.irl.learning_rate},
                         {"decay", c.irl.decay},
                         {"iterations", c.irl.iterations},
                         {"horizon", c.irl.horizon},
                         {"convergence_tol", c.irl.convergence_tol}}},
                       {"world", c.world},
                       {"workers", c.workers},
                       {"out_dir", c.out_dir}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    c = ExperimentConfig{};
    c.n_worlds = j.value("n_worlds", c.n_worlds);
    c.demos_per_world = j.value("demos_per_world", c.demos_per_world);
    c.seed = j.value("seed", c.seed);
    c.chi_values = j.value("chi_values", c.chi_values);
    c.zeta_cutoffs = j.value("zeta_cutoffs", c.zeta_cutoffs);
    c.weight_step = j.value("weight_step", c.weight_step);
    if (j.contains("orchestrators")) {
        c.orchestrators.clear();
        for (const auto& k : j.at("orchestrators")) c.orchestrators.push_back(kind_from_name(k.get<std::string>()));
    }
    c.rollouts = j.value("rollouts", c.rollouts);
    c.sweep_demos = j.value("sweep_demos", c.sweep_demos);
    c.run_sweep = j.value("run_sweep", c.run_sweep);
    c.temperature = j.value("temperature", c.temperature);
    c.mdft_steps = j.value("mdft_steps", c.mdft_steps);
    if (j.contains("feedback")) {
        const auto& f = j.at("feedback");
        c.feedback.phi1 = f.value("phi1", c.feedback.phi1);
        c.feedback.phi2 = f.value("phi2", c.feedback.phi2);
        c.feedback.dominance_weight = f.value("dominance_weight", c.feedback.dominance_weight);
    }
    if (j.contains("irl")) {
        const auto& h = j.at("irl");
        c.irl.learning_rate = h.value("learning_rate", c.irl.learning_rate);
        c.irl.decay = h.value("decay", c.irl.decay);
        c.irl.iterations = h.value("iterations", c.irl.iterations);
        c.irl.horizon = h.value("horizon", c.irl.horizon);
        c.irl.convergence_tol = h.value("convergence_tol", c.irl.convergence_tol);
    }
    if (j.contains("world")) c.world = j.at("world").get<WorldParams>();
    c.workers = j.value("workers", c.workers);
    c.out_dir = j.value("out_dir", c.out_dir);
}

void write_results_header(std::ostream& out) { out << kResultsHeader << '\n'; }

void write_result_row(std::ostream& out, const ResultRow& r) {
    if (r.method.find(',') != std::string::npos || r.flag.find(',') != std::string::npos)
        throw std::invalid_argument("CSV fields must not contain commas");
    out << r.world_id << ',' << r.method << ',' << opt_text(r.w_n) << ',' << opt_text(r.n_demos) << ','
        << opt_text(r.chi) << ',' << opt_text(r.fp) << ',' << opt_text(r.fn) << ',' << opt_text(r.kl) << ','
        << opt_text(r.js) << ',' << opt_text(r.norm_len) << ',' << opt_text(r.norm_penalty) << ','
        << opt_text(r.violations) << ',' << r.seed << ',' << r.flag << '\n';
}

std::vector<ResultRow> read_results(std::istream& in) {
    std::vector<ResultRow> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != kResultsHeader) throw std::runtime_error("results line 1: unexpected header");
            header_seen = true;
            continue;
        }
        const auto f = split_csv(line);
        try {
            if (f.size() != 14) throw std::invalid_argument("expected 14 fields, found " + std::to_string(f.size()));
            ResultRow r;
            r.world_id = std::stoi(f[0]);
            r.method = f[1];
            r.w_n = parse_opt_double(f[2]);
            r.n_demos = parse_opt_int(f[3]);
            r.chi = parse_opt_double(f[4]);
            r.fp = parse_opt_double(f[5]);
            r.fn = parse_opt_double(f[6]);
            r.kl = parse_opt_double(f[7]);
            r.js = parse_opt_double(f[8]);
            r.norm_len = parse_opt_double(f[9]);
            r.norm_penalty = parse_opt_double(f[10]);
            r.violations = parse_opt_double(f[11]);
            r.seed = std::stoull(f[12]);
            r.flag = f[13];
            rows.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("results line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

World make_world(const ExperimentConfig& config, int index) {
    World w;
    w.index = index;
    w.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(index)});
    std::tie(w.nominal_spec, w.truth_spec) = gen_random_world(derive_seed(w.seed, {0}), config.world);
    w.nominal = build_grid(w.nominal_spec);
    w.truth = build_grid(w.truth_spec);
    return w;
}

std::uint64_t demo_seed(const World& world, int n_demos) {
    return derive_seed(world.seed, {1, static_cast<std::uint64_t>(n_demos)});
}

std::vector<Trajectory> world_demonstrations(const World& world, int n_demos) {
    const Policy expert = greedy_policy(value_iteration(world.truth));
    return sample_trajectories(world.truth, expert, n_demos, demo_seed(world, n_demos));
}

DemoRun learn_from_demos(const ExperimentConfig& config, const World& world, int n_demos) {
    DemoRun run;
    run.n_demos = n_demos;
    run.demos = world_demonstrations(world, n_demos);
    run.model = mesc_irl_learn(world.nominal, run.demos, config.irl, &run.trace);
    run.estimate = estimate_constraints(world.nominal, run.model);
    return run;
}

std::vector<ResultRow> recovery_rows(const ExperimentConfig& config, const World& world, const DemoRun& run) {
    const int num_constraints = static_cast<int>(world.truth_spec.constrained_cells.size());
    const ConstraintGroundTruth truth = cell_ground_truth(world.nominal, world.truth, num_constraints);
    const std::vector<double> predicted = cell_predictions(world.nominal, run.estimate);

    const TabularMDP learned = apply_residual(world.nominal, run.model.omega_r);
    const Policy learned_policy = greedy_policy(value_iteration(learned));
    const auto rollouts = sample_trajectories(world.truth, learned_policy, run.n_demos, demo_seed(world, run.n_demos));
    const double kl = trajectory_kl(run.demos, rollouts);
    const double js = trajectory_js(run.demos, rollouts);

    std::vector<ResultRow> rows;
    for (double chi : config.chi_values) {
        ResultRow r = base_row(world, "mesc_irl");
        r.n_demos = run.n_demos;
        r.chi = chi;
        r.fp = soft_fp_rate(predicted, truth, chi);
        r.fn = soft_fn_rate(predicted, truth, chi);
        r.kl = kl;
        r.js = js;
        rows.push_back(std::move(r));
    }
    ConstraintGroundTruth hard = truth;
    for (std::size_t i = 0; i < hard.zeta.size(); ++i) hard.zeta[i] = hard.cost[i] != 0.0 ? 1.0 : 0.0;
    for (double cutoff : config.zeta_cutoffs) {
        ResultRow r = base_row(world, "mesc_irl_hard");
        r.n_demos = run.n_demos;
        r.chi = cutoff;
        r.fp = hard_fp_rate(predicted, hard, cutoff);
        r.fn = hard_fn_rate(predicted, hard, cutoff);
        r.kl = kl;
        r.js = js;
        rows.push_back(std::move(r));
    }
    return rows;
}

SweepSetup make_sweep_setup(const ExperimentConfig& config, const World& world, const DemoRun& run) {
    QTable q_n = value_iteration(world.nominal);
    QTable q_c = value_iteration(apply_residual(world.nominal, run.model.omega_r));
    ScoreTable scores(q_n, q_c, config.temperature);
    return {std::move(q_n), std::move(q_c), std::move(scores), demo_seed(world, run.n_demos),
            shortest_path_length(world.nominal, world.nominal.start(), world.nominal.goal())};
}

std::vector<ResultRow> sweep_rows(const ExperimentConfig& config, const World& world, const DemoRun& run) {
    const SweepSetup setup = make_sweep_setup(config, world, run);
    const TabularMDP& env = world.truth;

    const auto nominal = sample_trajectories(env, softmax_policy(setup.q_nominal, config.temperature), config.rollouts,
                                             setup.rollout_seed);
    const auto constrained = sample_trajectories(env, softmax_policy(setup.q_constrained, config.temperature),
                                                 config.rollouts, setup.rollout_seed);
    const double ref_penalty = mean_penalty(constrained, env);

    std::vector<ResultRow> rows;
    auto emit = [&](std::string method, std::optional<double> w_n, const std::vector<Trajectory>& trajs) {
        ResultRow r = base_row(world, std::move(method));
        r.w_n = w_n;
        r.n_demos = run.n_demos;
        r.kl = trajectory_kl(run.demos, trajs);
        r.js = trajectory_js(run.demos, trajs);
        fill_quality(r, trajectory_quality(trajs, env, setup.shortest_len, ref_penalty));
        rows.push_back(std::move(r));
    };

    emit("nominal", std::nullopt, nominal);
    emit("constrained", std::nullopt, constrained);
    for (auto kind : config.orchestrators) {
        if (kind != OrchestratorKind::greedy) continue;
        emit("greedy", std::nullopt, run_agent(env, setup.scores, OrchestratorConfig::with_weight(kind, 0.5),
                                                config.rollouts, setup.rollout_seed));
    }
    for (double w_n : config.weight_grid()) {
        for (auto kind : config.orchestrators) {
            if (kind == OrchestratorKind::greedy) continue;
            OrchestratorConfig oc = OrchestratorConfig::with_weight(kind, w_n);
            oc.mdft_steps = config.mdft_steps;
            oc.feedback = config.feedback;
            emit(kind_name(kind), w_n, run_agent(env, setup.scores, oc, config.rollouts, setup.rollout_seed));
        }
    }
    return rows;
}

WorldResult run_world(const ExperimentConfig& config, int index) {
    WorldResult out{make_world(config, index), {}, {}};
    const int sweep_n = config.effective_sweep_demos();
    for (int n : config.demos_per_world) {
        out.runs.push_back(learn_from_demos(config, out.world, n));
        auto rows = recovery_rows(config, out.world, out.runs.back());
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    }
    if (config.run_sweep) {
        const auto it = std::find_if(out.runs.begin(), out.runs.end(), [&](const DemoRun& r) { return r.n_demos == sweep_n; });
        auto rows = sweep_rows(config, out.world, *it);
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    }
    return out;
}

PipelineOutcome cmd_pipeline(const ExperimentConfig& config) {
    config.validate();
    namespace fs = std::filesystem;
    const fs::path out = config.out_dir;
    fs::create_directories(out / "grids");
    fs::create_directories(out / "demos");
    fs::create_directories(out / "models");

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int workers = std::max(1, std::min(config.n_worlds, config.workers > 0 ? config.workers : static_cast<int>(hw)));

    std::vector<std::optional<WorldResult>> results(config.n_worlds);
    std::vector<std::string> errors(config.n_worlds);
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next.fetch_add(1); i < config.n_worlds; i = next.fetch_add(1)) {
            try {
                results[i] = run_world(config, i);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    PipelineOutcome outcome;
    std::ofstream csv(out / "results.csv", std::ios::binary);
    write_results_header(csv);
    nlohmann::json worlds = nlohmann::json::array();
    for (int i = 0; i < config.n_worlds; ++i) {
        const std::string tag = "world_" + pad(i, 3);
        if (!results[i]) {
            outcome.failures.push_back({i, errors[i]});
            worlds.push_back({{"world_id", i}, {"status", "failed"}, {"error", errors[i]}});
            continue;
        }
        const WorldResult& wr = *results[i];
        for (const auto& row : wr.rows) write_result_row(csv, row);
        outcome.rows.insert(outcome.rows.end(), wr.rows.begin(), wr.rows.end());

        std::ofstream(out / "grids" / (tag + "_nominal.json")) << nlohmann::json(wr.world.nominal_spec).dump(2) << '\n';
        std::ofstream(out / "grids" / (tag + "_truth.json")) << nlohmann::json(wr.world.truth_spec).dump(2) << '\n';
        for (const auto& run : wr.runs) {
            const std::string stem = tag + "_n" + pad(run.n_demos, 4);
            std::ofstream demos(out / "demos" / (stem + ".jsonl"));
            write_trajectories(demos, run.demos);
            std::ofstream(out / "models" / (stem + ".json")) << nlohmann::json(run.model).dump() << '\n';
        }
        worlds.push_back({{"world_id", i}, {"status", "ok"}, {"seed", wr.world.seed}});
    }
    if (!outcome.failures.empty()) {
        std::ofstream fail(out / "failures.csv");
        fail << "world_id,error\n";
        for (const auto& f : outcome.failures) {
            std::string msg = f.message;
            std::replace(msg.begin(), msg.end(), ',', ';');
            fail << f.world_id << ',' << msg << '\n';
        }
    }

    nlohmann::json manifest{{"version", kVersion},
                            {"config", config},
                            {"worlds", worlds},
                            {"demo_sets", "resampled independently for every demo count"},
                            {"results_schema", kResultsHeader}};
    std::ofstream(out / "manifest.json") << manifest.dump(2) << '\n';
    return outcome;
}

SummaryStat summarize(const std::vector<double>& values) {
    SummaryStat s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / s.count;
    if (s.count > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        s.se = std::sqrt(sq / (s.count - 1)) / std::sqrt(static_cast<double>(s.count));
    }
    return s;
}

void SummaryTable::write_csv(std::ostream& out) const {
    for (const auto& k : key_columns) out << k << ',';
    for (std::size_t i = 0; i < value_columns.size(); ++i)
        out << value_columns[i] << "_mean," << value_columns[i] << "_se" << (i + 1 < value_columns.size() ? "," : "");
    out << ",count\n";
    for (const auto& [key, stats] : cells) {
        for (const auto& k : key) out << k << ',';
        int count = 0;
        for (const auto& s : stats) {
            out << format_double(s.mean) << ',' << format_double(s.se) << ',';
            count = std::max(count, s.count);
        }
        out << count << '\n';
    }
}

namespace {

using Getter = std::optional<double> ResultRow::*;

SummaryTable aggregate(const std::vector<ResultRow>& rows, std::vector<std::string> key_columns,
                       const std::function<std::optional<std::vector<std::string>>(const ResultRow&)>& key_of,
                       std::vector<std::pair<std::string, Getter>> values) {
    SummaryTable table;
    table.key_columns = std::move(key_columns);
    for (const auto& v : values) table.value_columns.push_back(v.first);
    std::map<std::vector<std::string>, std::vector<std::vector<double>>> raw;
    for (const auto& r : rows) {
        const auto key = key_of(r);
        if (!key) continue;
        auto& slot = raw[*key];
        slot.resize(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            if (const auto& v = r.*(values[i].second)) slot[i].push_back(*v);
    }
    for (const auto& [key, cols] : raw) {
        std::vector<SummaryStat> stats;
        for (const auto& c : cols) stats.push_back(summarize(c));
        table.cells[key] = std::move(stats);
    }
    return table;
}

std::string weight_key(const std::optional<double>& w) { return w ? format_double(*w) : std::string{}; }

}  // namespace

Report build_report(const std::vector<ResultRow>& rows) {
    Report rep;
    rep.constraint_recovery = aggregate(
        rows, {"method", "n_demos", "chi"},
        [](const ResultRow& r) -> std::optional<std::vector<std::string>> {
            if (!r.n_demos || !r.chi || !r.fp) return std::nullopt;
            return std::vector<std::string>{r.method, pad(*r.n_demos, 5), format_double(*r.chi)};
        },
        {{"fp", &ResultRow::fp}, {"fn", &ResultRow::fn}, {"kl", &ResultRow::kl}, {"js", &ResultRow::js}});
    auto sweep_key = [](const ResultRow& r) -> std::optional<std::vector<std::string>> {
        if (!r.norm_len) return std::nullopt;
        return std::vector<std::string>{r.method, weight_key(r.w_n)};
    };
    rep.trajectory_quality = aggregate(rows, {"method", "w_n"}, sweep_key,
                                       {{"norm_len", &ResultRow::norm_len},
                                        {"norm_penalty", &ResultRow::norm_penalty},
                                        {"violations", &ResultRow::violations}});
    rep.policy_divergence =
        aggregate(rows, {"method", "w_n"}, sweep_key, {{"js", &ResultRow::js}, {"kl", &ResultRow::kl}});
    return rep;
}

Report cmd_report(const std::filesystem::path& results_path, const std::filesystem::path& out_dir) {
    std::ifstream in(results_path);
    if (!in) throw std::runtime_error("cannot open " + results_path.string());
    const Report rep = build_report(read_results(in));
    const auto dir = out_dir.empty() ? results_path.parent_path() : out_dir;
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream(dir / "fig3_constraint_recovery.csv") << [&] {
        std::ostringstream os;
        rep.constraint_recovery.write_csv(os);
        return os.str();
    }();
    std::ofstream(dir / "fig4_trajectory_quality.csv") << [&] {
        std::ostringstream os;
        rep.trajectory_quality.write_csv(os);
        return os.str();
    }();
    std::ofstream(dir / "fig5_policy_divergence.csv") << [&] {
        std::ostringstream os;
        rep.policy_divergence.write_csv(os);
        return os.str();
    }();
    return rep;
}

}  // namespace mesc
