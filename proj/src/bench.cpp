#include "adfll/bench.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "adfll/errors.hpp"

namespace adfll {

std::string to_string(BaselineKind k) {
    switch (k) {
    case BaselineKind::AllKnowing: return "ALL_KNOWING";
    case BaselineKind::Partial: return "PARTIAL";
    case BaselineKind::SequentialLL: return "SEQUENTIAL_LL";
    }
    return "UNKNOWN";
}

std::string baseline_label(BaselineKind k) {
    switch (k) {
    case BaselineKind::AllKnowing: return "X";
    case BaselineKind::Partial: return "Y";
    case BaselineKind::SequentialLL: return "M";
    }
    return "?";
}

BaselineResult run_baseline(BaselineKind kind, const std::vector<std::string>& tasks, const TrainConfig& cfg,
                            Pcg32& rng, const ExperimentConfig& suite) {
    if (tasks.empty()) throw ConfigError("baseline needs at least one task");
    if (kind == BaselineKind::Partial && tasks.size() != 1)
        throw ConfigError("PARTIAL baseline trains on exactly one task");
    cfg.validate();

    const auto catalog = environment_catalog(suite.environment);
    std::map<std::string, TaskEnvironment> envs;
    auto env = [&](const std::string& id) -> const TaskEnvironment& {
        auto it = envs.find(id);
        if (it != envs.end()) return it->second;
        auto spec = catalog.find(id);
        if (spec == catalog.end()) throw ConfigError("unresolvable task_id: " + id);
        return envs.emplace(id, make_environment(spec->second)).first->second;
    };

    BaselineResult out;
    out.kind = kind;
    out.qf = QFunction::make(cfg.backend, cfg.observation_length());
    const std::string label = baseline_label(kind);

    switch (kind) {
    case BaselineKind::AllKnowing: {
        std::vector<const TaskEnvironment*> train_envs;
        for (const auto& id : tasks) train_envs.push_back(&env(id));
        TrainConfig all = cfg;
        all.episodes_per_round = cfg.episodes_per_round * static_cast<int>(tasks.size());
        train_round_multi(out.qf, train_envs, {}, {}, all, rng, {label, "", 0, 0});
        out.rounds = 1;
        break;
    }
    case BaselineKind::Partial: {
        train_round(out.qf, env(tasks.front()), {}, {}, cfg, rng, {label, tasks.front(), 0, 0});
        out.rounds = 1;
        break;
    }
    case BaselineKind::SequentialLL: {
        TrainConfig seq = cfg;
        seq.mix = {0.5, 0.5, 0.0};
        std::vector<PublishedErb> personal;
        for (std::size_t r = 0; r < tasks.size(); ++r) {
            ErbMeta meta{label, tasks[r], static_cast<std::uint32_t>(r), r};
            RoundResult rr = train_round(out.qf, env(tasks[r]), personal, {}, seq, rng, meta);
            personal.push_back(PublishedErb::publish(std::move(rr.published_erb)));
        }
        out.rounds = static_cast<int>(tasks.size());
        break;
    }
    }

    std::vector<const TaskEnvironment*> eval_envs;
    for (const auto& id : suite.eval_tasks) eval_envs.push_back(&env(id));
    out.evaluation = evaluate(out.qf, eval_envs, suite.eval, cfg);
    return out;
}

namespace {

std::vector<double> differences(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ConfigError("paired test needs equal-length samples");
    if (x.size() < 2) throw ConfigError("paired test needs at least two pairs");
    std::vector<double> d(x.size());
    bool any = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        d[i] = x[i] - y[i];
        any = any || d[i] != 0.0;
    }
    if (!any) throw DegenerateInputError("all paired differences are zero");
    return d;
}

double t_statistic(const std::vector<double>& d) {
    const double n = static_cast<double>(d.size());
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd == 0.0) return mean > 0 ? INFINITY : -INFINITY;
    return mean / (sd / std::sqrt(n));
}

// With the sum of squares fixed under sign flips, |t| grows with |sum d|, so
// flips are ranked by their absolute sum.
struct FlipRanker {
    explicit FlipRanker(const std::vector<double>& d) : d_(d) {
        double abs_total = 0.0;
        for (double v : d) {
            observed_ += v;
            abs_total += std::fabs(v);
        }
        observed_ = std::fabs(observed_);
        tolerance_ = 1e-12 * abs_total;
    }
    [[nodiscard]] bool at_least_as_extreme(double flipped_sum) const {
        return std::fabs(flipped_sum) >= observed_ - tolerance_;
    }
    const std::vector<double>& d_;
    double observed_ = 0.0;
    double tolerance_ = 0.0;
};

double monte_carlo_p(const std::vector<double>& d, std::uint64_t draws, Pcg32& rng) {
    FlipRanker rank(d);
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < draws; ++i) {
        double sum = 0.0;
        std::uint32_t bits = 0;
        for (std::size_t j = 0; j < d.size(); ++j) {
            if (j % 32 == 0) bits = rng.next_u32();
            sum += (bits & 1u) ? -d[j] : d[j];
            bits >>= 1;
        }
        if (rank.at_least_as_extreme(sum)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(draws);
}

} // namespace

PairedTestResult paired_test(const std::vector<double>& x, const std::vector<double>& y) {
    const auto d = differences(x, y);
    PairedTestResult out;
    out.n = d.size();
    out.t_statistic = t_statistic(d);
    if (d.size() <= 20) {
        FlipRanker rank(d);
        const std::uint64_t total = std::uint64_t{1} << d.size();
        std::uint64_t hits = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double sum = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) sum += (mask >> j & 1u) ? -d[j] : d[j];
            if (rank.at_least_as_extreme(sum)) ++hits;
        }
        out.p_two_sided = static_cast<double>(hits) / static_cast<double>(total);
        out.exact = true;
    } else {
        Pcg32 rng = derive_rng(0x5eed, "paired-test");
        out.p_two_sided = monte_carlo_p(d, 1'000'000, rng);
        out.exact = false;
    }
    return out;
}

double paired_test_monte_carlo(const std::vector<double>& x, const std::vector<double>& y, std::uint64_t draws,
                               std::uint64_t seed) {
    const auto d = differences(x, y);
    Pcg32 rng = derive_rng(seed, "paired-test-mc");
    return monte_carlo_p(d, draws, rng);
}

// ---- report ----

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string num_full(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

double ComparisonReport::mean_of(const std::string& agent) const {
    for (std::size_t i = 0; i < agents.size(); ++i)
        if (agents[i] == agent) return means[i];
    throw ConfigError("agent not in report: " + agent);
}

std::string ComparisonReport::table_csv() const {
    std::string out = "agent";
    for (const auto& t : tasks) out += "," + t;
    out += ",mean\n";
    for (std::size_t i = 0; i < agents.size(); ++i) {
        out += agents[i];
        for (double v : matrix[i]) out += "," + num(v);
        out += "," + num(means[i]) + "\n";
    }
    return out;
}

std::string ComparisonReport::rounds_csv() const {
    std::string out = "round,agents,mean_error\n";
    for (const auto& r : rounds) out += std::to_string(r.round) + "," + std::to_string(r.agents) + "," + num(r.mean_error) + "\n";
    return out;
}

std::string ComparisonReport::pairwise_csv() const {
    std::string out = "agent_a,agent_b,n,t_statistic,p_two_sided,exact,note\n";
    for (const auto& p : pairwise) {
        out += p.a + "," + p.b + ",";
        if (p.test) {
            out += std::to_string(p.test->n) + "," + num_full(p.test->t_statistic) + "," + num_full(p.test->p_two_sided) +
                   "," + (p.test->exact ? "1" : "0") + ",\n";
        } else {
            out += std::to_string(tasks.size()) + ",,,,no difference\n";
        }
    }
    return out;
}

ComparisonReport build_report(const std::vector<ReportRow>& rows, const std::vector<RoundRow>& rounds) {
    ComparisonReport rep;
    rep.rounds = rounds;
    if (rows.empty()) return rep;
    for (const auto& [task, err] : rows.front().errors) rep.tasks.push_back(task);
    for (const auto& row : rows) {
        if (row.errors.size() != rep.tasks.size()) throw ConfigError("evaluation suite mismatch for " + row.agent);
        std::vector<double> values;
        double sum = 0.0;
        for (const auto& task : rep.tasks) {
            auto it = row.errors.find(task);
            if (it == row.errors.end()) throw ConfigError("evaluation suite mismatch for " + row.agent);
            values.push_back(it->second);
            sum += it->second;
        }
        rep.agents.push_back(row.agent);
        rep.means.push_back(sum / static_cast<double>(values.size()));
        rep.matrix.push_back(std::move(values));
    }
    for (std::size_t i = 0; i < rep.agents.size(); ++i) {
        for (std::size_t j = i + 1; j < rep.agents.size(); ++j) {
            PairwiseRow p{rep.agents[i], rep.agents[j], std::nullopt};
            if (rep.tasks.size() >= 2) {
                try {
                    p.test = paired_test(rep.matrix[i], rep.matrix[j]);
                } catch (const DegenerateInputError&) {
                    p.test.reset();
                }
            }
            rep.pairwise.push_back(std::move(p));
        }
    }
    return rep;
}

ComparisonReport report_from_metrics(const std::string& metrics_csv) {
    std::istringstream in(metrics_csv);
    std::string line;
    if (!std::getline(in, line) || split(line, ',') != std::vector<std::string>{"phase", "round", "agent_id", "task_id", "mean_error"})
        throw ConfigError("metrics file has an unexpected header");

    std::vector<std::string> order;
    std::map<std::string, ReportRow> table;
    // round -> agent -> (sum, count)
    std::map<int, std::map<std::string, std::pair<double, int>>> per_round;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = split(line, ',');
        if (f.size() != 5) throw ConfigError("metrics line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields");
        double err = 0.0;
        int round = 0;
        try {
            err = std::stod(f[4]);
            round = std::stoi(f[1]);
        } catch (const std::exception&) {
            throw ConfigError("metrics line " + std::to_string(line_no) + " is not numeric");
        }
        if (f[0] == "final" || f[0] == "baseline") {
            if (!table.contains(f[2])) {
                order.push_back(f[2]);
                table[f[2]].agent = f[2];
            }
            table[f[2]].errors[f[3]] = err;
        } else if (f[0] == "round") {
            auto& acc = per_round[round][f[2]];
            acc.first += err;
            acc.second += 1;
        } else {
            throw ConfigError("metrics line " + std::to_string(line_no) + " has unknown phase " + f[0]);
        }
    }
    std::vector<ReportRow> rows;
    for (const auto& a : order) rows.push_back(table.at(a));
    std::vector<RoundRow> rounds;
    for (const auto& [r, agents] : per_round) {
        double sum = 0.0;
        for (const auto& [agent, acc] : agents) sum += acc.first / acc.second;
        rounds.push_back({r, agents.size(), sum / static_cast<double>(agents.size())});
    }
    return build_report(rows, rounds);
}

void write_report(const ComparisonReport& report, const std::string& table_path) {
    namespace fs = std::filesystem;
    const fs::path table(table_path);
    const fs::path dir = table.has_parent_path() ? table.parent_path() : fs::path(".");
    fs::create_directories(dir);
    auto write = [](const fs::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw ConfigError("cannot write " + p.string());
        f << text;
    };
    write(table, report.table_csv());
    write(dir / "rounds_fig10_11.csv", report.rounds_csv());
    write(dir / "pairwise.csv", report.pairwise_csv());
}

std::string baseline_metrics_rows(const BaselineResult& result) {
    std::string out;
    for (const auto& [task, err] : result.evaluation.mean_error)
        out += "baseline," + std::to_string(result.rounds) + "," + baseline_label(result.kind) + "," + task + "," + num(err) + "\n";
    return out;
}

} // namespace adfll
