#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>

#include "adfll/errors.hpp"
#include "adfll/learner.hpp"

using namespace adfll;

namespace {

Observation obs_of(std::initializer_list<int> levels) {
    Observation o;
    for (int l : levels) o.push_back(static_cast<std::uint8_t>(l));
    return o;
}

Observation ramp27(int offset) {
    Observation o(27);
    for (std::size_t i = 0; i < 27; ++i) o[i] = static_cast<std::uint8_t>((i + static_cast<std::size_t>(offset)) % 8);
    return o;
}

EnvSpec line_spec(int length, int landmark_x) {
    EnvSpec s;
    s.dims = {length, 1, 1};
    s.landmark = {landmark_x, 0, 0};
    s.sequence = Sequence::S0;
    s.pathology = Pathology::P0;
    s.seed = 3;
    return s;
}

} // namespace

TEST_CASE("fresh q-functions are zero") {
    for (auto b : {Backend::Tabular, Backend::Linear}) {
        auto qf = QFunction::make(b, 27);
        for (double v : q_values(qf, ramp27(3))) CHECK(v == 0.0);
    }
}

TEST_CASE("tabular single update") {
    auto qf = QFunction::tabular(27);
    TrainConfig cfg;
    cfg.alpha = 1.0;
    cfg.gamma = 0.9;
    Transition t{ramp27(0), Action::PosX, 1.0, ramp27(1), true};
    td_update(qf, std::span<const Transition>(&t, 1), cfg);
    auto q = q_values(qf, ramp27(0));
    CHECK(q[0] == 1.0);
    for (std::size_t a = 1; a < 6; ++a) CHECK(q[a] == 0.0);

    SUBCASE("bootstrap from an all-zero next state") {
        auto fresh = QFunction::tabular(27);
        Transition u{ramp27(0), Action::NegY, 1.0, ramp27(1), false};
        td_update(fresh, std::span<const Transition>(&u, 1), cfg);
        CHECK(q_values(fresh, ramp27(0))[3] == 1.0);
    }
    SUBCASE("terminal transitions do not bootstrap") {
        auto fresh = QFunction::tabular(27);
        fresh.adjust(ramp27(1), Action::PosX, 50.0);
        Transition u{ramp27(0), Action::PosZ, 2.0, ramp27(1), true};
        td_update(fresh, std::span<const Transition>(&u, 1), cfg);
        CHECK(q_values(fresh, ramp27(0))[4] == 2.0);
    }
}

TEST_CASE("linear dot product") {
    auto qf = QFunction::linear(27);
    for (double& w : qf.weights()) w = 0.01;
    for (double v : q_values(qf, ramp27(5))) CHECK(v == doctest::Approx(0.27).epsilon(1e-12));
}

TEST_CASE("linear two-feature toy step by hand") {
    auto qf = QFunction::linear(2);
    const auto s = obs_of({3, 6});
    const auto s2 = obs_of({1, 1});
    // Q(s, NEG_X) = w[1][0*8+3] + w[1][1*8+6]
    qf.weights()[1 * 16 + 3] = 0.2;
    qf.weights()[1 * 16 + 14] = -0.1;
    qf.weights()[4 * 16 + 1] = 0.3;  // max over s2 is 0.3 + 0.3 at POS_Z
    qf.weights()[4 * 16 + 9] = 0.3;
    TrainConfig cfg;
    cfg.alpha = 0.5;
    cfg.gamma = 0.9;
    Transition t{s, Action::NegX, 1.0, s2, false};
    td_update(qf, std::span<const Transition>(&t, 1), cfg);
    const double q = 0.1;
    const double target = 1.0 + 0.9 * 0.6;
    const double delta = 0.5 * (target - q);
    CHECK(qf.weights()[1 * 16 + 3] == doctest::Approx(0.2 + delta).epsilon(1e-12));
    CHECK(qf.weights()[1 * 16 + 14] == doctest::Approx(-0.1 + delta).epsilon(1e-12));
    CHECK(qf.weights()[4 * 16 + 1] == 0.3);
}

TEST_CASE("linear update equals finite-difference gradient step") {
    Pcg32 rng(31, 4);
    auto qf = QFunction::linear(27);
    for (double& w : qf.weights()) w = rng.uniform() - 0.5;
    const Transition t{ramp27(2), Action::PosY, 0.7, ramp27(6), false};
    TrainConfig cfg;
    cfg.alpha = 0.05;
    cfg.gamma = 0.9;

    const auto next = q_values(qf, t.next_state);
    const double target = t.reward + cfg.gamma * *std::max_element(next.begin(), next.end());
    auto loss = [&](const QFunction& f) {
        const double q = q_values(f, t.state)[static_cast<std::size_t>(t.action)];
        return 0.5 * (target - q) * (target - q);
    };

    auto updated = qf;
    td_update(updated, std::span<const Transition>(&t, 1), cfg);

    const double h = 1e-6;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < qf.weights().size(); ++i) {
        auto plus = qf;
        auto minus = qf;
        plus.weights()[i] += h;
        minus.weights()[i] -= h;
        const double grad = (loss(plus) - loss(minus)) / (2 * h);
        const double expected = -cfg.alpha * grad;
        const double actual = updated.weights()[i] - qf.weights()[i];
        if (expected == 0.0 && actual == 0.0) continue;
        ++checked;
        CHECK(std::fabs(actual - expected) <= 1e-6 * std::max(std::fabs(expected), 1e-12));
    }
    CHECK(checked == 27);
}

TEST_CASE("non-finite targets are reported with their index") {
    auto qf = QFunction::tabular(27);
    TrainConfig cfg;
    std::vector<Transition> batch{{ramp27(0), Action::PosX, 1.0, ramp27(1), false},
                                  {ramp27(1), Action::PosX, std::numeric_limits<double>::infinity(), ramp27(2), false}};
    try {
        td_update(qf, std::span<const Transition>(batch), cfg);
        FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
        CHECK(e.transition_index() == 1);
    }
}

TEST_CASE("epsilon-greedy") {
    auto qf = QFunction::tabular(27);
    Pcg32 rng(1, 1);
    CHECK(select_action(qf, ramp27(0), 0.0, rng) == Action::PosX);
    qf.adjust(ramp27(0), Action::NegX, 1.0);
    CHECK(select_action(qf, ramp27(0), 0.0, rng) == Action::NegX);

    std::array<int, 6> counts{};
    for (int i = 0; i < 60000; ++i) ++counts[static_cast<std::size_t>(select_action(qf, ramp27(0), 1.0, rng))];
    for (int c : counts) CHECK(std::fabs(c / 60000.0 - 1.0 / 6.0) <= 0.01);
}

TEST_CASE("tabular greedy policy on a 5-voxel chain matches value iteration") {
    // Chain x = 0..4 with the landmark at x = 4. Moves off the x axis are
    // clamped in place. Value iteration over the hand-written dynamics.
    const double gamma = 0.9;
    const int n = 5;
    const int goal = 4;
    auto next_x = [&](int x, int a) { return a == 0 ? std::min(x + 1, n - 1) : a == 1 ? std::max(x - 1, 0) : x; };
    auto dist = [&](int x) { return std::fabs(static_cast<double>(goal - x)); };
    std::array<std::array<double, 6>, 5> q{};
    for (int iter = 0; iter < 500; ++iter) {
        auto nq = q;
        for (int x = 0; x < n; ++x)
            for (int a = 0; a < 6; ++a) {
                const int y = next_x(x, a);
                const bool terminal = dist(y) <= 1.0;
                const double best = *std::max_element(q[static_cast<std::size_t>(y)].begin(), q[static_cast<std::size_t>(y)].end());
                nq[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)] = dist(x) - dist(y) + (terminal ? 0.0 : gamma * best);
            }
        q = nq;
    }

    auto env = make_environment(line_spec(n, goal));
    TrainConfig cfg;
    cfg.alpha = 0.5;
    cfg.gamma = gamma;
    cfg.episodes_per_round = 300;
    cfg.max_steps_per_episode = 40;
    Pcg32 rng(5, 5);
    auto qf = QFunction::tabular(27);
    train_round(qf, env, {}, {}, cfg, rng, {"chain", env.task_id(), 0, 0});

    for (int x = 0; x < n; ++x) {
        if (dist(x) <= 1.0) continue;
        const auto& row = q[static_cast<std::size_t>(x)];
        const auto oracle = static_cast<Action>(std::max_element(row.begin(), row.end()) - row.begin());
        const Action learned = greedy_action(q_values(qf, observe(env, {{x, 0, 0}, 1})));
        CHECK(learned == oracle);
        CHECK(env.distance(step(env, {{x, 0, 0}, 1}, learned).box.center) < env.distance({x, 0, 0}));
    }
}

TEST_CASE("vacuous and repeated rounds") {
    EnvSpec spec;
    spec.dims = {16, 16, 16};
    spec.landmark = {6, 9, 8};
    auto env = make_environment(spec);
    TrainConfig cfg;
    cfg.episodes_per_round = 0;
    auto qf = QFunction::tabular(27);
    Pcg32 rng(1, 1);
    auto r = train_round(qf, env, {}, {}, cfg, rng, {"a", env.task_id(), 0, 0});
    CHECK(r.published_erb.empty());
    CHECK(qf == QFunction::tabular(27));

    cfg.episodes_per_round = 20;
    for (auto backend : {Backend::Tabular, Backend::Linear}) {
        cfg.backend = backend;
        cfg.alpha = backend == Backend::Linear ? 0.01 : 0.05;
        auto q1 = QFunction::make(backend, 27);
        auto q2 = QFunction::make(backend, 27);
        Pcg32 r1(9, 9);
        Pcg32 r2(9, 9);
        auto a = train_round(q1, env, {}, {}, cfg, r1, {"a", env.task_id(), 0, 0});
        auto b = train_round(q2, env, {}, {}, cfg, r2, {"a", env.task_id(), 0, 0});
        CHECK(same_content(a.published_erb, b.published_erb));
        CHECK(q1 == q2);
        CHECK(q1.checkpoint() == q2.checkpoint());
        CHECK(q1.all_finite());
    }
}

TEST_CASE("single-task learnability") {
    // Threshold frozen from the reference run of this configuration.
    EnvSpec spec;
    spec.dims = {16, 16, 16};
    spec.landmark = {6, 9, 8};
    auto env = make_environment(spec);
    TrainConfig cfg;
    auto qf = QFunction::tabular(27);
    Pcg32 rng(1, 1);
    train_round(qf, env, {}, {}, cfg, rng, {"a", env.task_id(), 0, 0});
    EvalConfig ev;
    ev.episodes_per_env = 100;
    const TaskEnvironment* envs[] = {&env};
    auto result = evaluate(qf, envs, ev, cfg);
    int reached = 0;
    for (double e : result.episode_errors.at(env.task_id())) reached += e <= env.dynamics().terminal_radius;
    MESSAGE("terminal from " << reached << " of 100 starts");
    CHECK(reached >= 80);
}

TEST_CASE("evaluation") {
    SUBCASE("policy that walks straight onto the landmark") {
        EnvSpec spec = line_spec(12, 11);
        auto env = make_environment(spec, Dynamics{1, 0.0});
        auto qf = QFunction::tabular(27);  // all ties: always POS_X
        EvalConfig ev;
        ev.episodes_per_env = 10;
        const TaskEnvironment* envs[] = {&env};
        auto result = evaluate(qf, envs, ev, TrainConfig{});
        CHECK(result.mean_error.at(env.task_id()) == 0.0);
    }
    SUBCASE("zero policy error in closed form") {
        EnvSpec spec;
        spec.dims = {16, 16, 16};
        spec.landmark = {6, 9, 8};
        auto env = make_environment(spec);
        EvalConfig ev;
        ev.episodes_per_env = 30;
        ev.max_steps = 200;
        auto starts = evaluation_starts(env, ev, 1);
        double total = 0.0;
        for (const auto& s : starts) {
            // POS_X until x hits the wall or the landmark comes within 1 voxel.
            int x = s.center.x;
            for (int i = 0; i < ev.max_steps && x < 15; ++i) {
                ++x;
                if (distance_error({x, s.center.y, s.center.z}, {6, 9, 8}) <= 1.0) break;
            }
            total += distance_error({x, s.center.y, s.center.z}, {6, 9, 8});
        }
        const TaskEnvironment* envs[] = {&env};
        auto result = evaluate(QFunction::tabular(27), envs, ev, TrainConfig{});
        CHECK(result.mean_error.at(env.task_id()) == doctest::Approx(total / 30).epsilon(1e-12));
    }
    SUBCASE("identical seeds give identical results and start digests") {
        EnvSpec spec;
        spec.dims = {16, 16, 16};
        spec.landmark = {6, 9, 8};
        auto env = make_environment(spec);
        const TaskEnvironment* envs[] = {&env};
        auto qf = QFunction::tabular(27);
        qf.adjust(observe(env, {{3, 3, 3}, 1}), Action::NegZ, 1.0);
        auto a = evaluate(qf, envs, EvalConfig{}, TrainConfig{});
        auto b = evaluate(qf, envs, EvalConfig{}, TrainConfig{});
        CHECK(a.mean_error == b.mean_error);
        CHECK(a.start_digest == b.start_digest);
    }
}

TEST_CASE("checkpoints round-trip") {
    auto tab = QFunction::tabular(27);
    tab.adjust(ramp27(1), Action::PosZ, 0.25);
    tab.adjust(ramp27(4), Action::NegX, -3.0);
    CHECK(QFunction::from_checkpoint(tab.checkpoint()) == tab);

    auto lin = QFunction::linear(27);
    Pcg32 rng(3, 3);
    for (double& w : lin.weights()) w = rng.uniform();
    CHECK(QFunction::from_checkpoint(lin.checkpoint()) == lin);
    CHECK(QFunction::from_checkpoint(lin.checkpoint()).checkpoint() == lin.checkpoint());
}

TEST_CASE("history concatenates patches") {
    EnvSpec spec;
    spec.dims = {16, 16, 16};
    spec.landmark = {6, 9, 8};
    auto env = make_environment(spec);
    StateTracker tracker(env, {{2, 2, 2}, 1}, 2);
    CHECK(tracker.state().size() == 54);
    const auto first = observe(env, {{2, 2, 2}, 1});
    tracker.advance({{3, 2, 2}, 1});
    const auto second = observe(env, {{3, 2, 2}, 1});
    CHECK(std::equal(first.begin(), first.end(), tracker.state().begin()));
    CHECK(std::equal(second.begin(), second.end(), tracker.state().begin() + 27));
}
