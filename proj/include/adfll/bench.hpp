#pragma once

// Reference agents, paired comparison and report tables.
//
// ALL_KNOWING trains one round over every task at once, PARTIAL trains one
// round on a single task, SEQUENTIAL_LL trains one round per task in order
// while replaying its own earlier buffers.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adfll/learner.hpp"
#include "adfll/orchestrator.hpp"

namespace adfll {

enum class BaselineKind : std::uint8_t { AllKnowing, Partial, SequentialLL };

std::string to_string(BaselineKind k);
// Short agent label used in reports: X, Y, M.
std::string baseline_label(BaselineKind k);

struct BaselineResult {
    BaselineKind kind = BaselineKind::Partial;
    int rounds = 0;
    Evaluation evaluation;
    QFunction qf = QFunction::tabular(1);
};

// Trains with `cfg` on `tasks` and evaluates on `suite.eval_tasks` with
// `suite.eval`, using the environments of `suite.environment`.
// Throws ConfigError for an empty task list or a PARTIAL run with more than
// one task.
BaselineResult run_baseline(BaselineKind kind, const std::vector<std::string>& tasks, const TrainConfig& cfg,
                            Pcg32& rng, const ExperimentConfig& suite);

struct PairedTestResult {
    double t_statistic = 0.0;
    double p_two_sided = 1.0;
    std::size_t n = 0;
    // False when the sign-flip distribution was sampled instead of enumerated.
    bool exact = true;
};

// Paired sign-flip permutation test on d = x - y. Exact for n <= 20,
// otherwise 10^6 seeded Monte Carlo flips. Throws ConfigError for unequal or
// too-short inputs and DegenerateInputError when every difference is zero.
PairedTestResult paired_test(const std::vector<double>& x, const std::vector<double>& y);

// Monte Carlo version of the same p-value, used to cross-check enumeration.
double paired_test_monte_carlo(const std::vector<double>& x, const std::vector<double>& y, std::uint64_t draws,
                               std::uint64_t seed);

struct ReportRow {
    std::string agent;
    std::map<std::string, double> errors;  // task_id -> mean error
};

struct RoundRow {
    int round = 0;
    std::size_t agents = 0;
    double mean_error = 0.0;
};

struct PairwiseRow {
    std::string a;
    std::string b;
    std::optional<PairedTestResult> test;  // empty when there is no difference
};

struct ComparisonReport {
    std::vector<std::string> tasks;
    std::vector<std::string> agents;
    std::vector<std::vector<double>> matrix;  // [agent][task]
    std::vector<double> means;
    std::vector<RoundRow> rounds;
    std::vector<PairwiseRow> pairwise;

    [[nodiscard]] double mean_of(const std::string& agent) const;
    [[nodiscard]] std::string table_csv() const;
    [[nodiscard]] std::string rounds_csv() const;
    [[nodiscard]] std::string pairwise_csv() const;
};

// Throws ConfigError when the rows do not all cover the same tasks.
ComparisonReport build_report(const std::vector<ReportRow>& rows, const std::vector<RoundRow>& rounds);

// Rows from a metrics.csv: "final" and "baseline" phases become table rows,
// "round" rows are averaged per round across agents.
ComparisonReport report_from_metrics(const std::string& metrics_csv);

// Writes table_fig5.csv, rounds_fig10_11.csv and pairwise.csv; `table_path`
// names the first and the others go next to it.
void write_report(const ComparisonReport& report, const std::string& table_path);

// Metrics rows for a baseline: "baseline,<rounds>,<label>,<task>,<error>".
std::string baseline_metrics_rows(const BaselineResult& result);

} // namespace adfll
