#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adfll/bench.hpp"
#include "adfll/errors.hpp"

using namespace adfll;

namespace {

// Brute force over every sign pattern, straight from the definition.
double brute_force_p(const std::vector<double>& d) {
    auto t_of = [](const std::vector<double>& v) {
        const double n = static_cast<double>(v.size());
        double m = 0.0;
        for (double x : v) m += x;
        m /= n;
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        const double sd = std::sqrt(ss / (n - 1));
        return sd == 0.0 ? INFINITY : std::fabs(m / (sd / std::sqrt(n)));
    };
    const double observed = t_of(d);
    const std::size_t n = d.size();
    std::size_t hits = 0;
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        std::vector<double> f(d);
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) f[i] = -f[i];
        const double t = t_of(f);
        hits += t >= observed * (1 - 1e-12);
    }
    return static_cast<double>(hits) / static_cast<double>(1ULL << n);
}

ExperimentConfig suite_for(std::vector<std::string> tasks) {
    ExperimentConfig suite;
    suite.eval_tasks = std::move(tasks);
    suite.eval.episodes_per_env = 10;
    return suite;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("constant difference over 8 pairs") {
    std::vector<double> y{3, 1, 4, 1, 5, 9, 2, 6};
    std::vector<double> x(y);
    for (auto& v : x) v += 1.0;
    auto res = paired_test(x, y);
    CHECK(res.n == 8);
    CHECK(res.exact);
    CHECK(std::isinf(res.t_statistic));
    CHECK(res.t_statistic > 0);
    CHECK(res.p_two_sided == doctest::Approx(2.0 / 256).epsilon(1e-12));
    CHECK(brute_force_p(std::vector<double>(8, 1.0)) == doctest::Approx(2.0 / 256));
}

TEST_CASE("a single nonzero difference") {
    std::vector<double> y{1, 2, 3, 4, 5};
    std::vector<double> x(y);
    x[2] += 0.5;
    auto res = paired_test(x, y);
    // mean 0.1, sd = sqrt(0.05): t = 1.
    CHECK(res.t_statistic == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.p_two_sided == 1.0);
}

TEST_CASE("antisymmetric differences") {
    std::vector<double> y(8, 0.0);
    std::vector<double> x{1, -1, 1, -1, 1, -1, 1, -1};
    auto res = paired_test(x, y);
    CHECK(res.t_statistic == 0.0);
    CHECK(res.p_two_sided == 1.0);
}

TEST_CASE("degenerate and malformed input") {
    CHECK_THROWS_AS(paired_test({1, 2, 3}, {1, 2, 3}), DegenerateInputError);
    CHECK_THROWS_AS(paired_test({1, 2, 3}, {1, 2}), ConfigError);
    CHECK_THROWS_AS(paired_test({1}, {2}), ConfigError);
}

TEST_CASE("enumeration agrees with brute force and Monte Carlo") {
    Pcg32 rng(31, 7);
    for (std::size_t n = 2; n <= 10; ++n) {
        std::vector<double> x(n), y(n), d(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform() * 4.0;
            y[i] = x[i] - (rng.uniform() - 0.3);
            d[i] = x[i] - y[i];
        }
        const double p = paired_test(x, y).p_two_sided;
        CHECK(p == doctest::Approx(brute_force_p(d)).epsilon(1e-12));
        CHECK(std::fabs(p - paired_test_monte_carlo(x, y, 1000000, 99 + n)) <= 0.005);
    }
}

TEST_CASE("large samples fall back to seeded Monte Carlo") {
    std::vector<double> x(24), y(24, 0.0);
    for (std::size_t i = 0; i < 24; ++i) x[i] = (i % 3 == 0) ? -0.5 : 1.0 + 0.01 * static_cast<double>(i);
    auto a = paired_test(x, y);
    auto b = paired_test(x, y);
    CHECK_FALSE(a.exact);
    CHECK(a.p_two_sided == b.p_two_sided);
    CHECK(a.p_two_sided < 0.05);
}

TEST_CASE("report means and csv determinism") {
    std::vector<ReportRow> rows{
        {"A1", {{"T1", 1.0}, {"T2", 2.0}, {"T3", 4.5}}},
        {"A2", {{"T1", 0.1}, {"T2", 0.2}, {"T3", 0.3}}},
        {"B", {{"T1", 1.0}, {"T2", 2.0}, {"T3", 4.5}}},
    };
    std::vector<RoundRow> rounds{{1, 3, 2.5}, {2, 3, 1.5}};
    auto rep = build_report(rows, rounds);
    REQUIRE(rep.agents.size() == 3);
    for (std::size_t i = 0; i < rep.agents.size(); ++i) {
        double sum = 0.0;
        for (double v : rep.matrix[i]) sum += v;
        CHECK(std::fabs(rep.means[i] - sum / static_cast<double>(rep.matrix[i].size())) <= 1e-12);
    }
    CHECK(rep.mean_of("A1") == doctest::Approx(7.5 / 3));
    CHECK(rep.table_csv().rfind("agent,T1,T2,T3,mean\n", 0) == 0);
    CHECK(rep.rounds_csv() == "round,agents,mean_error\n1,3,2.500000\n2,3,1.500000\n");

    // Identical rows surface as "no difference".
    bool saw_identical = false;
    for (const auto& pw : rep.pairwise)
        if ((pw.a == "A1" && pw.b == "B") || (pw.a == "B" && pw.b == "A1")) {
            saw_identical = true;
            CHECK_FALSE(pw.test.has_value());
        }
    CHECK(saw_identical);
    CHECK(rep.pairwise_csv().find("no difference") != std::string::npos);

    auto again = build_report(rows, rounds);
    CHECK(again.table_csv() == rep.table_csv());
    CHECK(again.pairwise_csv() == rep.pairwise_csv());

    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "adfll_bench_report";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_report(rep, (dir / "table_fig5.csv").string());
    CHECK(slurp(dir / "table_fig5.csv") == rep.table_csv());
    CHECK(slurp(dir / "rounds_fig10_11.csv") == rep.rounds_csv());
    CHECK(slurp(dir / "pairwise.csv") == rep.pairwise_csv());
    fs::remove_all(dir);
}

TEST_CASE("suite mismatch is rejected") {
    std::vector<ReportRow> rows{{"A", {{"T1", 1.0}, {"T2", 2.0}}}, {"B", {{"T1", 1.0}}}};
    CHECK_THROWS_AS(build_report(rows, {}), ConfigError);
}

TEST_CASE("report from metrics csv") {
    const std::string csv = "phase,round,agent_id,task_id,mean_error\n"
                            "round,1,A1,T1,4.000000\nround,1,A1,T2,2.000000\n"
                            "round,1,A2,T1,6.000000\nround,1,A2,T2,4.000000\n"
                            "final,1,A1,T1,4.000000\nfinal,1,A1,T2,2.000000\n"
                            "baseline,1,Y,T1,8.000000\nbaseline,1,Y,T2,9.000000\n";
    auto rep = report_from_metrics(csv);
    CHECK(rep.agents == std::vector<std::string>{"A1", "Y"});
    REQUIRE(rep.rounds.size() == 1);
    CHECK(rep.rounds[0].agents == 2);
    CHECK(rep.rounds[0].mean_error == doctest::Approx(4.0));
}

TEST_CASE("baselines") {
    const std::string own = "P0-S0-AXIAL";
    const std::string inverted = "P0-S1-AXIAL";
    auto suite = suite_for({own, inverted});
    TrainConfig cfg;

    SUBCASE("PARTIAL beats the zero policy on its task and degrades on the inverted one") {
        Pcg32 rng(5, 1);
        auto y = run_baseline(BaselineKind::Partial, {own}, cfg, rng, suite);
        CHECK(y.rounds == 1);

        const auto catalog = environment_catalog(suite.environment);
        auto env = make_environment(catalog.at(own));
        const TaskEnvironment* envs[] = {&env};
        auto zero = evaluate(QFunction::make(cfg.backend, cfg.observation_length()), envs, suite.eval, cfg);
        MESSAGE("PARTIAL on-task " << y.evaluation.mean_error.at(own) << ", zero policy "
                                   << zero.mean_error.at(own) << ", inverted " << y.evaluation.mean_error.at(inverted));
        CHECK(zero.start_digest != 0);
        CHECK(y.evaluation.mean_error.at(own) < zero.mean_error.at(own));
        CHECK(y.evaluation.mean_error.at(inverted) > y.evaluation.mean_error.at(own));
    }
    SUBCASE("SEQUENTIAL_LL runs one round per task") {
        cfg.episodes_per_round = 10;
        Pcg32 rng(5, 2);
        auto m = run_baseline(BaselineKind::SequentialLL, {own, inverted, "P1-S2-CORONAL"}, cfg, rng, suite);
        CHECK(m.rounds == 3);
    }
    SUBCASE("ALL_KNOWING is a single round") {
        cfg.episodes_per_round = 10;
        Pcg32 rng(5, 3);
        auto x = run_baseline(BaselineKind::AllKnowing, {own, inverted}, cfg, rng, suite);
        CHECK(x.rounds == 1);
        CHECK(x.evaluation.mean_error.size() == 2);
    }
    SUBCASE("argument errors") {
        Pcg32 rng(5, 4);
        CHECK_THROWS_AS(run_baseline(BaselineKind::Partial, {own, inverted}, cfg, rng, suite), ConfigError);
        CHECK_THROWS_AS(run_baseline(BaselineKind::AllKnowing, {}, cfg, rng, suite), ConfigError);
    }
    SUBCASE("every baseline sees the same evaluation starts") {
        cfg.episodes_per_round = 5;
        Pcg32 r1(1, 1), r2(2, 2);
        auto a = run_baseline(BaselineKind::Partial, {own}, cfg, r1, suite);
        auto b = run_baseline(BaselineKind::SequentialLL, {inverted}, cfg, r2, suite);
        CHECK(a.evaluation.start_digest == b.evaluation.start_digest);
    }
}

TEST_CASE("preset reports have one row per lockstep round") {
    for (auto [cfg, expected] : {std::pair{preset_addition(), 4}, std::pair{preset_deletion(), 5}}) {
        cfg.train.episodes_per_round = 3;
        cfg.train.max_steps_per_episode = 20;
        cfg.eval.episodes_per_env = 1;
        cfg.eval.max_steps = 10;
        cfg.eval_tasks = {"P0-S0-AXIAL", "P1-S3-CORONAL"};
        auto rep = report_from_metrics(run_simulation(cfg).metrics_csv());
        CHECK(rep.rounds.size() == static_cast<std::size_t>(expected));
    }
}
