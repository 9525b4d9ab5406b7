// mesc_cli: soft-constraint learning and policy orchestration experiments.

#include "mesc/constraint_prob.hpp"
#include "mesc/eval_metrics.hpp"
#include "mesc/experiment.hpp"
#include "mesc/mdp.hpp"
#include "mesc/mesc_irl.hpp"
#include "mesc/orchestrators.hpp"
#include "mesc/planner.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(p.string() + ": " + e.what());
    }
}

void write_json(const fs::path& p, const json& j) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream(p) << j.dump(2) << '\n';
}

std::vector<mesc::Trajectory> load_trajectories(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    return mesc::read_trajectories(in);
}

void save_trajectories(const fs::path& p, const std::vector<mesc::Trajectory>& trajs) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    mesc::write_trajectories(out, trajs);
}

mesc::GridSpec load_grid(const fs::path& p) { return read_json(p).get<mesc::GridSpec>(); }

mesc::ResidualModel load_model(const fs::path& p) { return read_json(p).get<mesc::ResidualModel>(); }

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::string config_path;

    mesc::ExperimentConfig config() const {
        mesc::ExperimentConfig c;
        if (!config_path.empty()) c = read_json(config_path).get<mesc::ExperimentConfig>();
        if (seed) c.seed = *seed;
        c.out_dir = out;
        return c;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Soft-constraint learning and policy orchestration on grid worlds"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Base random seed");
    app.add_option("--out", g.out, "Output path (directory or file, per subcommand)");
    app.add_option("--config", g.config_path, "Experiment configuration JSON")->check(CLI::ExistingFile);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a random nominal/ground-truth world pair");
    int world_index = 0;
    gen->add_option("--world", world_index, "World index under the base seed")->check(CLI::NonNegativeNumber);

    // demos
    auto* demos = app.add_subcommand("demos", "Sample expert demonstrations in a world");
    std::string demos_grid;
    int demos_n = 100;
    std::string demos_policy = "greedy";
    demos->add_option("--grid", demos_grid, "Ground-truth GridSpec JSON")->required()->check(CLI::ExistingFile);
    demos->add_option("-n,--count", demos_n, "Number of demonstrations")->check(CLI::PositiveNumber);
    demos->add_option("--policy", demos_policy, "Expert policy")->check(CLI::IsMember({"greedy", "softmax"}));

    // learn
    auto* learn = app.add_subcommand("learn", "Learn a residual penalty model from demonstrations");
    std::string learn_grid, learn_demos;
    learn->add_option("--grid", learn_grid, "Nominal GridSpec JSON")->required()->check(CLI::ExistingFile);
    learn->add_option("--demos", learn_demos, "Demonstrations JSONL")->required()->check(CLI::ExistingFile);

    // zeta
    auto* zeta = app.add_subcommand("zeta", "Convert a learned model into constraint probabilities");
    std::string zeta_grid, zeta_model;
    zeta->add_option("--grid", zeta_grid, "Nominal GridSpec JSON")->required()->check(CLI::ExistingFile);
    zeta->add_option("--model", zeta_model, "ResidualModel JSON")->required()->check(CLI::ExistingFile);

    // orchestrate
    auto* orch = app.add_subcommand("orchestrate", "Roll out an orchestrated agent");
    std::string orch_grid, orch_env, orch_model, orch_kind = "mdft";
    double orch_wn = 0.5;
    int orch_episodes = 200;
    orch->add_option("--grid", orch_grid, "Nominal GridSpec JSON")->required()->check(CLI::ExistingFile);
    orch->add_option("--env", orch_env, "GridSpec used to simulate (defaults to --grid)")->check(CLI::ExistingFile);
    orch->add_option("--model", orch_model, "ResidualModel JSON")->required()->check(CLI::ExistingFile);
    orch->add_option("--kind", orch_kind, "greedy, wa or mdft")->check(CLI::IsMember({"greedy", "wa", "mdft"}));
    orch->add_option("--w-n", orch_wn, "Weight of the nominal policy")->check(CLI::Range(0.0, 1.0));
    orch->add_option("--episodes", orch_episodes, "Number of episodes")->check(CLI::PositiveNumber);

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Constraint-recovery and trajectory metrics");
    std::string met_grid, met_truth, met_model, met_demos, met_trajs;
    metrics->add_option("--grid", met_grid, "Nominal GridSpec JSON")->required()->check(CLI::ExistingFile);
    metrics->add_option("--truth", met_truth, "Ground-truth GridSpec JSON")->required()->check(CLI::ExistingFile);
    metrics->add_option("--model", met_model, "ResidualModel JSON")->check(CLI::ExistingFile);
    metrics->add_option("--demos", met_demos, "Demonstrations JSONL")->check(CLI::ExistingFile);
    metrics->add_option("--trajectories", met_trajs, "Agent trajectories JSONL")->check(CLI::ExistingFile);

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "Run the full multi-world experiment");
    std::optional<int> pipe_worlds, pipe_workers;
    pipeline->add_option("--worlds", pipe_worlds, "Number of worlds")->check(CLI::PositiveNumber);
    pipeline->add_option("--workers", pipe_workers, "Worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);

    // report
    auto* report = app.add_subcommand("report", "Aggregate results.csv into per-figure summaries");
    std::string rep_results;
    report->add_option("--results", rep_results, "results.csv (defaults to <out>/results.csv)");

    CLI11_PARSE(app, argc, argv);

    try {
        const mesc::ExperimentConfig cfg = g.config();
        const fs::path out = g.out;

        if (*gen) {
            cfg.validate();
            const mesc::World w = mesc::make_world(cfg, world_index);
            write_json(out / "nominal.json", w.nominal_spec);
            write_json(out / "truth.json", w.truth_spec);
            std::cout << "world " << world_index << " seed " << w.seed << " -> " << out.string() << '\n';
        } else if (*demos) {
            const mesc::TabularMDP truth = mesc::build_grid(load_grid(demos_grid));
            const mesc::QTable q = mesc::value_iteration(truth);
            const mesc::Policy pi =
                demos_policy == "greedy" ? mesc::greedy_policy(q) : mesc::softmax_policy(q, cfg.temperature);
            save_trajectories(out, mesc::sample_trajectories(truth, pi, demos_n, cfg.seed));
            std::cout << demos_n << " demonstrations -> " << out.string() << '\n';
        } else if (*learn) {
            cfg.irl.validate();
            const mesc::TabularMDP nominal = mesc::build_grid(load_grid(learn_grid));
            mesc::LearnTrace trace;
            const auto model = mesc::mesc_irl_learn(nominal, load_trajectories(learn_demos), cfg.irl, &trace);
            write_json(out, model);
            std::cout << "iterations " << trace.iterations << " gradient norm " << trace.final_gradient_norm
                      << (trace.converged ? " (converged)" : "") << " -> " << out.string() << '\n';
        } else if (*zeta) {
            const mesc::TabularMDP nominal = mesc::build_grid(load_grid(zeta_grid));
            const auto est = mesc::estimate_constraints(nominal, load_model(zeta_model));
            fs::create_directories(out);
            std::ofstream t(out / "zeta_transitions.csv");
            mesc::write_transition_zeta_csv(t, nominal, est);
            std::ofstream f(out / "zeta_features.csv");
            mesc::write_feature_zeta_csv(f, est);
            std::cout << "sigma_pooled " << est.sigma_pooled << " -> " << out.string() << '\n';
        } else if (*orch) {
            const mesc::TabularMDP nominal = mesc::build_grid(load_grid(orch_grid));
            const mesc::TabularMDP env = orch_env.empty() ? nominal : mesc::build_grid(load_grid(orch_env));
            const auto model = load_model(orch_model);
            const mesc::QTable qn = mesc::value_iteration(nominal);
            const mesc::QTable qc = mesc::value_iteration(mesc::apply_residual(nominal, model.omega_r));
            const mesc::ScoreTable scores(qn, qc, cfg.temperature);
            auto oc = mesc::OrchestratorConfig::with_weight(mesc::kind_from_name(orch_kind), orch_wn);
            oc.mdft_steps = cfg.mdft_steps;
            oc.feedback = cfg.feedback;
            save_trajectories(out, mesc::run_agent(env, scores, oc, orch_episodes, cfg.seed));
            std::cout << orch_episodes << " episodes -> " << out.string() << '\n';
        } else if (*metrics) {
            const mesc::GridSpec truth_spec = load_grid(met_truth);
            const mesc::TabularMDP nominal = mesc::build_grid(load_grid(met_grid));
            const mesc::TabularMDP truth = mesc::build_grid(truth_spec);
            json result;
            if (!met_model.empty()) {
                const auto est = mesc::estimate_constraints(nominal, load_model(met_model));
                const int n_constraints = std::max<int>(1, static_cast<int>(truth_spec.constrained_cells.size()));
                const auto gt = mesc::cell_ground_truth(nominal, truth, n_constraints);
                const auto pred = mesc::cell_predictions(nominal, est);
                for (double chi : cfg.chi_values)
                    result["recovery"].push_back({{"chi", chi},
                                                  {"fp", mesc::soft_fp_rate(pred, gt, chi)},
                                                  {"fn", mesc::soft_fn_rate(pred, gt, chi)}});
            }
            if (!met_trajs.empty()) {
                const auto trajs = load_trajectories(met_trajs);
                const int len = mesc::shortest_path_length(nominal, nominal.start(), nominal.goal());
                // without a reference set the penalty is reported raw
                const auto q = mesc::trajectory_quality(trajs, truth, std::max(1, len), 0.0);
                result["quality"] = {{"norm_len", q.avg_norm_length},
                                     {"penalty", q.avg_norm_penalty},
                                     {"violations", q.avg_violations}};
                if (!met_demos.empty()) {
                    const auto demos_set = load_trajectories(met_demos);
                    result["divergence"] = {{"kl", mesc::trajectory_kl(demos_set, trajs)},
                                            {"js", mesc::trajectory_js(demos_set, trajs)}};
                }
            }
            if (result.is_null()) throw std::invalid_argument("metrics: pass --model and/or --trajectories");
            write_json(out, result);
            std::cout << result.dump(2) << '\n';
        } else if (*pipeline) {
            mesc::ExperimentConfig pc = cfg;
            if (pipe_worlds) pc.n_worlds = *pipe_worlds;
            if (pipe_workers) pc.workers = *pipe_workers;
            const auto outcome = mesc::cmd_pipeline(pc);
            std::cout << outcome.rows.size() << " rows -> " << (out / "results.csv").string() << '\n';
            for (const auto& f : outcome.failures)
                std::cerr << "world " << f.world_id << " failed: " << f.message << '\n';
            return outcome.failures.empty() ? 0 : 2;
        } else if (*report) {
            const fs::path results = rep_results.empty() ? out / "results.csv" : fs::path(rep_results);
            const auto rep = mesc::cmd_report(results, out);
            std::cout << rep.constraint_recovery.cells.size() << " recovery cells, "
                      << rep.trajectory_quality.cells.size() << " sweep cells -> " << out.string() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
