#pragma once

// Random-world experiment protocol: world generation, demonstrations,
// residual learning, constraint-recovery metrics and orchestrator sweeps.

#include "mesc/constraint_prob.hpp"
#include "mesc/eval_metrics.hpp"
#include "mesc/mdp.hpp"
#include "mesc/mesc_irl.hpp"
#include "mesc/orchestrators.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mesc {

struct WorldParams {
    int width = 9;
    int height = 9;
    int min_distance = 8;
    int num_blue = 6;
    int num_green = 6;
    int num_constrained = 6;
    double constraint_cost = -50.0;
    double slip_prob = 0.1;
    double discount = 0.99;
    int horizon = 50;
    int max_attempts = 1000;
};

void to_json(nlohmann::json& j, const WorldParams& p);
void from_json(const nlohmann::json& j, WorldParams& p);

/// (nominal, ground truth). Throws std::runtime_error when no start/goal pair
/// at least `min_distance` moves apart is found within the attempt budget.
std::pair<GridSpec, GridSpec> gen_random_world(std::uint64_t seed, const WorldParams& params = {});

struct ExperimentConfig {
    int n_worlds = 10;
    std::vector<int> demos_per_world{10, 25, 50, 100, 200};
    std::uint64_t seed = 1;
    std::vector<double> chi_values{0.0, 0.1, 0.2, 0.3};
    std::vector<double> zeta_cutoffs{0.5, 0.6, 0.7};
    double weight_step = 0.1;
    std::vector<OrchestratorKind> orchestrators{OrchestratorKind::greedy, OrchestratorKind::weighted_average,
                                                OrchestratorKind::mdft};
    int rollouts = 200;
    /// Demo count whose learned world feeds the orchestrator sweep; 0 = largest.
    int sweep_demos = 0;
    bool run_sweep = true;
    double temperature = 1.0;
    int mdft_steps = 25;
    FeedbackParams feedback{};
    IrlHyperparams irl{};
    WorldParams world{};
    int workers = 0;
    std::string out_dir = "results";

    void validate() const;
    int effective_sweep_demos() const;
    std::vector<double> weight_grid() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

struct ResultRow {
    int world_id = 0;
    std::string method;
    std::optional<double> w_n;
    std::optional<int> n_demos;
    std::optional<double> chi;
    std::optional<double> fp;
    std::optional<double> fn;
    std::optional<double> kl;
    std::optional<double> js;
    std::optional<double> norm_len;
    std::optional<double> norm_penalty;
    std::optional<double> violations;
    std::uint64_t seed = 0;
    std::string flag;
};

inline constexpr const char* kResultsHeader =
    "world_id,method,w_n,n_demos,chi,fp,fn,kl,js,norm_len,norm_penalty,violations,seed,flag";

void write_results_header(std::ostream& out);
void write_result_row(std::ostream& out, const ResultRow& row);
/// Throws std::runtime_error naming the offending line on malformed input.
std::vector<ResultRow> read_results(std::istream& in);

struct World {
    int index = 0;
    std::uint64_t seed = 0;
    GridSpec nominal_spec;
    GridSpec truth_spec;
    TabularMDP nominal;
    TabularMDP truth;
};

World make_world(const ExperimentConfig& config, int index);

struct DemoRun {
    int n_demos = 0;
    std::vector<Trajectory> demos;
    ResidualModel model;
    LearnTrace trace;
    ConstraintEstimate estimate;
};

/// Seed of the demonstration set of size n_demos. Evaluation rollouts reuse it
/// so that episode i of every agent sees the same environment noise as demo i.
std::uint64_t demo_seed(const World& world, int n_demos);
std::vector<Trajectory> world_demonstrations(const World& world, int n_demos);
DemoRun learn_from_demos(const ExperimentConfig& config, const World& world, int n_demos);

/// Soft (and hard-threshold) recovery metrics plus divergence from the demos of
/// as many learned-policy rollouts, paired with the demos' environment streams.
std::vector<ResultRow> recovery_rows(const ExperimentConfig& config, const World& world, const DemoRun& run);

/// Everything the orchestrator sweep needs from a learned world.
struct SweepSetup {
    QTable q_nominal;
    QTable q_constrained;
    ScoreTable scores;
    std::uint64_t rollout_seed;
    int shortest_len;
};

SweepSetup make_sweep_setup(const ExperimentConfig& config, const World& world, const DemoRun& run);
std::vector<ResultRow> sweep_rows(const ExperimentConfig& config, const World& world, const DemoRun& run);

struct WorldResult {
    World world;
    std::vector<DemoRun> runs;
    std::vector<ResultRow> rows;
};

WorldResult run_world(const ExperimentConfig& config, int index);

struct PipelineFailure {
    int world_id;
    std::string message;
};

struct PipelineOutcome {
    std::vector<ResultRow> rows;
    std::vector<PipelineFailure> failures;
};

/// Runs every world with a bounded worker pool and writes results.csv,
/// manifest.json, grids/, demos/ and models/ under config.out_dir.
PipelineOutcome cmd_pipeline(const ExperimentConfig& config);

struct SummaryStat {
    double mean = 0.0;
    double se = 0.0;
    int count = 0;
};

SummaryStat summarize(const std::vector<double>& values);

struct SummaryTable {
    std::vector<std::string> key_columns;
    std::vector<std::string> value_columns;
    /// key tuple (as text) -> per value column statistics
    std::map<std::vector<std::string>, std::vector<SummaryStat>> cells;

    void write_csv(std::ostream& out) const;
};

struct Report {
    SummaryTable constraint_recovery;  // fp, fn, kl, js by (method, n_demos, chi)
    SummaryTable trajectory_quality;   // norm_len, norm_penalty, violations by (method, w_n)
    SummaryTable policy_divergence;    // js, kl by (method, w_n)
};

Report build_report(const std::vector<ResultRow>& rows);
/// Reads results.csv and writes fig3_*.csv, fig4_*.csv, fig5_*.csv next to it (or into out_dir).
Report cmd_report(const std::filesystem::path& results_path, const std::filesystem::path& out_dir = {});

}  // namespace mesc
