#include "mesc/experiment.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace mesc;
namespace fs = std::filesystem;

namespace {

int chebyshev(Cell a, Cell b) { return std::max(std::abs(a.row - b.row), std::abs(a.col - b.col)); }

ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig c;
    c.n_worlds = 2;
    c.demos_per_world = {8, 16};
    c.rollouts = 12;
    c.weight_step = 0.5;
    c.irl.iterations = 40;
    c.irl.horizon = 15;
    c.world.width = 5;
    c.world.height = 5;
    c.world.min_distance = 4;
    c.world.num_blue = 2;
    c.world.num_green = 2;
    c.world.num_constrained = 2;
    c.world.horizon = 15;
    c.out_dir = out.string();
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mesc_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("random worlds respect their invariants") {
    const WorldParams params;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto [nominal, truth] = gen_random_world(seed, params);
        CHECK(chebyshev(nominal.start, nominal.goal) >= params.min_distance);
        CHECK(nominal.constrained_cells.empty());
        CHECK(truth.constrained_cells.size() == 6u);
        CHECK(nominal.colors.size() == 12u);
        CHECK(truth.colors == nominal.colors);
        std::set<Cell> colored, constrained;
        int blue = 0;
        for (const auto& [cell, color] : nominal.colors) {
            colored.insert(cell);
            blue += color == Color::blue;
            CHECK(cell != nominal.start);
            CHECK(cell != nominal.goal);
        }
        CHECK(colored.size() == 12u);
        CHECK(blue == 6);
        for (const auto& cell : truth.constrained_cells) {
            constrained.insert(cell);
            CHECK(cell != truth.start);
            CHECK(cell != truth.goal);
        }
        CHECK(constrained.size() == 6u);
        CHECK_NOTHROW(nominal.validate());
        CHECK_NOTHROW(truth.validate());
    }
    const auto a = gen_random_world(42, params);
    const auto b = gen_random_world(42, params);
    CHECK(nlohmann::json(a.second) == nlohmann::json(b.second));
    CHECK(nlohmann::json(gen_random_world(43, params).second) != nlohmann::json(a.second));
}

TEST_CASE("random world generation fails loudly") {
    WorldParams far;
    far.min_distance = 9;  // impossible on a 9 x 9 grid
    far.max_attempts = 50;
    CHECK_THROWS_AS(gen_random_world(1, far), std::runtime_error);
    WorldParams crowded;
    crowded.width = 3;
    crowded.height = 3;
    crowded.min_distance = 1;
    crowded.num_blue = 5;
    crowded.num_green = 5;
    CHECK_THROWS_AS(gen_random_world(1, crowded), std::invalid_argument);
}

TEST_CASE("experiment configuration") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.effective_sweep_demos() == 200);
    const auto grid = c.weight_grid();
    REQUIRE(grid.size() == 11u);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 1.0);

    auto broken = [](auto edit) {
        ExperimentConfig x;
        edit(x);
        return x;
    };
    CHECK_THROWS_AS(broken([](auto& x) { x.n_worlds = 0; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](auto& x) { x.demos_per_world.clear(); }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](auto& x) { x.chi_values = {1.2}; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](auto& x) { x.weight_step = 0.3; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](auto& x) { x.sweep_demos = 7; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](auto& x) { x.temperature = 0.0; }).validate(), std::invalid_argument);

    ExperimentConfig custom = small_config("x");
    custom.seed = 99;
    custom.orchestrators = {OrchestratorKind::mdft};
    const nlohmann::json j = custom;
    const auto back = j.get<ExperimentConfig>();
    CHECK(nlohmann::json(back) == j);
    CHECK(back.world.width == 5);
    CHECK(back.orchestrators.size() == 1u);
}

TEST_CASE("results CSV round trip") {
    ResultRow a;
    a.world_id = 3;
    a.method = "mesc_irl";
    a.n_demos = 50;
    a.chi = 0.2;
    a.fp = 1.0 / 3.0;
    a.fn = 0.0;
    a.seed = 123456789012345ULL;
    ResultRow b;
    b.world_id = 4;
    b.method = "wa";
    b.w_n = 0.7;
    b.norm_len = 1.25;
    b.flag = "raw_penalty";

    std::stringstream ss;
    write_results_header(ss);
    write_result_row(ss, a);
    write_result_row(ss, b);
    const auto rows = read_results(ss);
    REQUIRE(rows.size() == 2u);
    CHECK(rows[0].fp.value() == doctest::Approx(1.0 / 3.0).epsilon(1e-11));
    CHECK(rows[0].seed == a.seed);
    CHECK_FALSE(rows[0].w_n.has_value());
    CHECK(rows[1].w_n.value() == 0.7);
    CHECK(rows[1].flag == "raw_penalty");
    CHECK_FALSE(rows[1].fp.has_value());

    std::stringstream bad;
    write_results_header(bad);
    write_result_row(bad, a);
    bad << "1,wa,0.5\n";
    try {
        read_results(bad);
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::stringstream header("world,method\n");
    CHECK_THROWS_AS(read_results(header), std::runtime_error);
    ResultRow comma = a;
    comma.method = "a,b";
    CHECK_THROWS_AS(write_result_row(ss, comma), std::invalid_argument);
}

TEST_CASE("report aggregates") {
    std::vector<ResultRow> rows;
    const double fps[] = {0.1, 0.3, 0.8};
    for (int w = 0; w < 3; ++w) {
        ResultRow r;
        r.world_id = w;
        r.method = "mesc_irl";
        r.n_demos = 10;
        r.chi = 0.2;
        r.fp = fps[w];
        r.fn = 0.5;
        rows.push_back(r);
        ResultRow q;
        q.world_id = w;
        q.method = "mdft";
        q.w_n = 0.5;
        q.norm_len = 1.0 + w;
        q.norm_penalty = 0.5;
        q.violations = 0.0;
        q.js = 0.1;
        rows.push_back(q);
    }
    const Report rep = build_report(rows);
    REQUIRE(rep.constraint_recovery.cells.size() == 1u);
    const auto& stats = rep.constraint_recovery.cells.begin()->second;
    const double mean = (0.1 + 0.3 + 0.8) / 3.0;
    double ss = 0.0;
    for (double v : fps) ss += (v - mean) * (v - mean);
    CHECK(stats[0].mean == doctest::Approx(mean));
    CHECK(stats[0].se == doctest::Approx(std::sqrt(ss / 2.0) / std::sqrt(3.0)));
    CHECK(stats[1].se == doctest::Approx(0.0));
    CHECK(stats[2].count == 0);

    const auto& tq = rep.trajectory_quality.cells.at({"mdft", "0.5"});
    CHECK(tq[0].mean == doctest::Approx(2.0));
    CHECK(rep.policy_divergence.cells.at({"mdft", "0.5"})[0].mean == doctest::Approx(0.1));

    const Report empty = build_report({});
    CHECK(empty.constraint_recovery.cells.empty());
    std::ostringstream os;
    empty.trajectory_quality.write_csv(os);
    CHECK(os.str() == "method,w_n,norm_len_mean,norm_len_se,norm_penalty_mean,norm_penalty_se,violations_mean,violations_se,count\n");

    const SummaryStat one = summarize({4.0});
    CHECK(one.mean == 4.0);
    CHECK(one.se == 0.0);
}

TEST_CASE("small pipeline end to end") {
    const fs::path a = scratch("pipe_a");
    const fs::path b = scratch("pipe_b");
    ExperimentConfig c = small_config(a);
    c.workers = 1;
    const PipelineOutcome out = cmd_pipeline(c);
    CHECK(out.failures.empty());
    CHECK(fs::exists(a / "manifest.json"));
    CHECK(fs::exists(a / "grids" / "world_001_truth.json"));
    CHECK(fs::exists(a / "demos" / "world_000_n0016.jsonl"));
    CHECK(fs::exists(a / "models" / "world_001_n0008.json"));
    CHECK_FALSE(fs::exists(a / "failures.csv"));

    std::set<std::string> methods;
    for (const auto& r : out.rows) methods.insert(r.method);
    CHECK(methods == std::set<std::string>{"mesc_irl", "mesc_irl_hard", "nominal", "constrained", "greedy", "wa", "mdft"});
    for (const auto& r : out.rows) {
        if (r.fp) CHECK(*r.fp >= 0.0);
        if (r.js) CHECK(*r.js <= std::log(2.0) + 1e-12);
    }

    c.out_dir = b.string();
    c.workers = 2;
    cmd_pipeline(c);
    CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
    CHECK(slurp(a / "models" / "world_001_n0016.json") == slurp(b / "models" / "world_001_n0016.json"));

    const Report rep = cmd_report(a / "results.csv");
    CHECK(fs::exists(a / "fig3_constraint_recovery.csv"));
    CHECK(fs::exists(a / "fig4_trajectory_quality.csv"));
    CHECK(fs::exists(a / "fig5_policy_divergence.csv"));
    CHECK(rep.constraint_recovery.cells.count({"mesc_irl", "00008", "0.2"}) == 1u);
    CHECK(rep.trajectory_quality.cells.count({"wa", "0.5"}) == 1u);

    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("pipeline records failing worlds") {
    const fs::path dir = scratch("pipe_fail");
    ExperimentConfig c = small_config(dir);
    c.world.min_distance = 6;  // unreachable on 5 x 5
    c.world.max_attempts = 10;
    c.n_worlds = 1;
    const PipelineOutcome out = cmd_pipeline(c);
    REQUIRE(out.failures.size() == 1u);
    CHECK(out.rows.empty());
    CHECK(fs::exists(dir / "failures.csv"));
    fs::remove_all(dir);
}
