#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mrsched/io.hpp"
#include "mrsched/verify.hpp"
#include "support/random_instances.hpp"

using namespace mrsched;

namespace {

Task make_task(std::string id, double d, std::vector<std::string> deps = {}, CapabilitySet caps = {}) {
    Task t;
    t.id = std::move(id);
    t.duration = d;
    t.dependencies = std::move(deps);
    t.required_capabilities = std::move(caps);
    return t;
}

RobotProfile make_robot(std::string id, CapabilitySet caps = {}) {
    RobotProfile r;
    r.id = std::move(id);
    r.capabilities = std::move(caps);
    return r;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an mrsched::Error";
    return ErrorKind::InvalidValue;
}

// Same view of a schedule as a hand-written file: cached fields derived from the entries.
Schedule as_file(const std::vector<ScheduleEntry>& entries) {
    return schedule_from_json(schedule_to_json(Schedule{entries, 0.0, {}, 0.0, {}}));
}

} // namespace

TEST(Validate, ChainSumsBigM) {
    InstanceSpec spec;
    spec.robots = {make_robot("A")};
    spec.tasks = {make_task("a", 3), make_task("b", 4, {"a"}), make_task("c", 5, {"b"})};
    auto inst = validate_instance(spec);
    EXPECT_DOUBLE_EQ(inst.big_m(), 12.0);
    ASSERT_EQ(inst.edges().size(), 2u);
    EXPECT_EQ(inst.edges()[0], std::make_pair(std::size_t{0}, std::size_t{1}));
    EXPECT_EQ(inst.edges()[1], std::make_pair(std::size_t{1}, std::size_t{2}));
    EXPECT_EQ(inst.topological_order(), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Validate, ClampsNonPositiveDuration) {
    InstanceSpec spec;
    spec.robots = {make_robot("A")};
    spec.tasks = {make_task("a", 0.0), make_task("b", -2.0)};
    ValidationOptions opt;
    opt.duration_floor = 0.001;
    auto inst = validate_instance(spec, opt);
    EXPECT_DOUBLE_EQ(inst.task(0).duration, 0.001);
    EXPECT_DOUBLE_EQ(inst.task(1).duration, 0.001);
}

TEST(Validate, MissingCapabilityNamesTaskAndCapability) {
    InstanceSpec spec;
    spec.robots = {make_robot("A", {"rgb"}), make_robot("B", {"arm"})};
    spec.tasks = {make_task("inspect", 2, {}, {"thermal_qa"})};
    try {
        validate_instance(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoFeasibleRobot);
        EXPECT_NE(std::string(e.what()).find("inspect"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("thermal_qa"), std::string::npos);
    }
}

TEST(Validate, CycleIsNamed) {
    InstanceSpec spec;
    spec.robots = {make_robot("A")};
    spec.tasks = {make_task("a", 1, {"c"}), make_task("b", 1, {"a"}), make_task("c", 1, {"b"}), make_task("d", 1)};
    try {
        validate_instance(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CyclicDependency);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("a -> b -> c -> a"), std::string::npos) << msg;
        EXPECT_EQ(msg.find("d"), msg.find("dependency")) << msg;
    }
}

TEST(Validate, Errors) {
    InstanceSpec spec;
    spec.robots = {make_robot("A")};
    spec.tasks = {make_task("a", 1, {"zzz"})};
    EXPECT_EQ(kind_of([&] { validate_instance(spec); }), ErrorKind::UnknownDependency);

    spec.tasks = {make_task("a", 1), make_task("a", 2)};
    EXPECT_EQ(kind_of([&] { validate_instance(spec); }), ErrorKind::DuplicateId);

    spec.tasks = {make_task("a", 1)};
    spec.robots = {make_robot("A"), make_robot("A")};
    EXPECT_EQ(kind_of([&] { validate_instance(spec); }), ErrorKind::DuplicateId);

    spec.robots = {make_robot("A")};
    spec.fitness = Grid<double>(2, 1, 0.5);
    EXPECT_EQ(kind_of([&] { validate_instance(spec); }), ErrorKind::DimensionMismatch);

    spec.fitness = Grid<double>(1, 1, 1.5);
    EXPECT_EQ(kind_of([&] { validate_instance(spec); }), ErrorKind::InvalidValue);

    spec.fitness.reset();
    spec.tasks[0].time_window = TimeWindow{5.0, 5.5};
    EXPECT_EQ(kind_of([&] { validate_instance(spec); }), ErrorKind::InvalidValue);
}

TEST(Validate, DefaultsToUniformFitness) {
    InstanceSpec spec;
    spec.robots = {make_robot("A"), make_robot("B")};
    spec.tasks = {make_task("a", 1)};
    auto inst = validate_instance(spec);
    EXPECT_DOUBLE_EQ(inst.fitness()(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(inst.fitness()(1, 0), 1.0);
}

TEST(Validate, UnavailableRobotIsMasked) {
    InstanceSpec spec;
    spec.robots = {make_robot("A"), make_robot("B")};
    spec.robots[0].available = false;
    spec.tasks = {make_task("a", 1)};
    auto inst = validate_instance(spec);
    EXPECT_FALSE(inst.feasible(0, 0));
    EXPECT_TRUE(inst.feasible(1, 0));
}

TEST(Fitness, MinMaxColumns) {
    Grid<double> raw(2, 2);
    raw(0, 0) = 0.2;
    raw(1, 0) = 0.8;
    raw(0, 1) = 0.5;
    raw(1, 1) = 0.5;
    auto f = normalize_fitness(raw);
    EXPECT_DOUBLE_EQ(f(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(f(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(f(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(f(1, 1), 0.5);
}

TEST(Fitness, ThreeRobotColumn) {
    Grid<double> raw(3, 1);
    raw(0, 0) = 1;
    raw(1, 0) = 2;
    raw(2, 0) = 4;
    auto f = normalize_fitness(raw);
    // (v - 1) / 3 by hand
    EXPECT_NEAR(f(0, 0), 0.0, 1e-15);
    EXPECT_NEAR(f(1, 0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(f(2, 0), 1.0, 1e-15);
}

TEST(Fitness, RejectsNonFinite) {
    Grid<double> raw(2, 1);
    raw(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_EQ(kind_of([&] { normalize_fitness(raw); }), ErrorKind::NonFiniteInput);
}

TEST(Fitness, IdempotentOnNormalizedColumns) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        Grid<double> raw(3, 4);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 4; ++j) raw(i, j) = u(rng);
        auto once = normalize_fitness(raw);
        auto twice = normalize_fitness(once);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(once(i, j), twice(i, j), 1e-12);
    }
}

TEST(Cost, Examples) {
    CostParams p;
    p.gamma = 1;
    p.tau = 0;
    EXPECT_DOUBLE_EQ(assignment_cost(0.0, 0.0, p), 1.0);
    EXPECT_DOUBLE_EQ(assignment_cost(1.0, 0.0, p), 0.5);
    p.gamma = 2;
    p.tau = 0.1;
    // 1/(1+1) + 0.1*3
    EXPECT_NEAR(assignment_cost(0.5, 3.0, p), 0.8, 1e-12);
}

TEST(Cost, Monotone) {
    CostParams p;
    p.gamma = 1.5;
    p.tau = 0.3;
    double prev = kInfinity;
    for (double f = 0.0; f <= 1.0; f += 0.05) {
        const double c = assignment_cost(f, 1.0, p);
        EXPECT_LT(c, prev);
        prev = c;
    }
    prev = -kInfinity;
    for (double t = 0.0; t <= 5.0; t += 0.5) {
        const double c = assignment_cost(0.3, t, p);
        EXPECT_GE(c, prev);
        prev = c;
    }
}

TEST(Objective, Examples) {
    InstanceSpec spec;
    spec.robots = {make_robot("A")};
    spec.tasks = {make_task("a", 2)};
    spec.weights = {1, 0, 0};
    auto inst = validate_instance(spec);
    Schedule s;
    s.entries = {{"a", "A", 0, 2, {}}};
    EXPECT_DOUBLE_EQ(objective_value(s, inst), 2.0);

    InstanceSpec two;
    two.robots = {make_robot("A"), make_robot("B")};
    two.tasks = {make_task("a", 5), make_task("b", 5)};
    two.weights = {1, 1, 0};
    auto inst2 = validate_instance(two);
    Schedule s2;
    s2.entries = {{"a", "A", 0, 5, {}}, {"b", "B", 0, 5, {}}};
    EXPECT_DOUBLE_EQ(objective_value(s2, inst2), 15.0);

    two.weights = {1, 0, 0};
    auto inst3 = validate_instance(two);
    s2.makespan = 123;  // cached fields are ignored
    EXPECT_DOUBLE_EQ(objective_value(s2, inst3), 5.0);
}

TEST(Objective, Errors) {
    InstanceSpec spec;
    spec.robots = {make_robot("A")};
    spec.tasks = {make_task("a", 2), make_task("b", 1)};
    auto inst = validate_instance(spec);
    Schedule s;
    s.entries = {{"a", "A", 0, 2, {}}};
    EXPECT_EQ(kind_of([&] { objective_value(s, inst); }), ErrorKind::UnassignedTask);
    s.entries = {{"a", "A", 0, 2, {}}, {"a", "A", 2, 4, {}}, {"b", "A", 4, 5, {}}};
    EXPECT_EQ(kind_of([&] { objective_value(s, inst); }), ErrorKind::DoubleAssignment);
}

TEST(Objective, PermutationInvariant) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        testsupport::RandomOptions opt;
        opt.n = 3;
        opt.m = 6;
        auto inst = validate_instance(testsupport::random_spec(seed, opt));
        std::vector<std::size_t> robot_of(6);
        std::vector<double> start(6);
        for (std::size_t j = 0; j < 6; ++j) {
            robot_of[j] = j % 3;
            start[j] = double(j);
        }
        auto s = schedule_from_assignment(inst, robot_of, start, "test");
        const double v = objective_value(s, inst);
        std::mt19937_64 rng(seed);
        for (int k = 0; k < 5; ++k) {
            std::shuffle(s.entries.begin(), s.entries.end(), rng);
            EXPECT_DOUBLE_EQ(objective_value(s, inst), v);
        }
    }
}

TEST(Verify, OverlapNamesBothTasks) {
    InstanceSpec spec;
    spec.robots = {make_robot("A")};
    spec.tasks = {make_task("p", 5), make_task("q", 5)};
    auto inst = validate_instance(spec);
    auto s = as_file({{"p", "A", 0, 5, {}}, {"q", "A", 3, 8, {}}});
    auto v = check_schedule(s, inst);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].family, ConstraintFamily::Overlap);
    EXPECT_EQ(v[0].ids, (std::vector<std::string>{"p", "q", "A"}));
}

TEST(Verify, PrecedenceSlack) {
    InstanceSpec spec;
    spec.robots = {make_robot("A"), make_robot("B")};
    spec.tasks = {make_task("a", 2), make_task("b", 1, {"a"})};
    auto inst = validate_instance(spec);
    auto s = as_file({{"a", "A", 0, 2, {}}, {"b", "B", 1, 2, {}}});
    auto v = check_schedule(s, inst);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].family, ConstraintFamily::Precedence);
    EXPECT_DOUBLE_EQ(v[0].slack, -1.0);
}

TEST(Verify, EachFamily) {
    InstanceSpec spec;
    spec.robots = {make_robot("A", {"x"}), make_robot("B")};
    spec.tasks = {make_task("a", 2, {}, {"x"}), make_task("b", 1)};
    spec.tasks[1].time_window = TimeWindow{1.0, 10.0};
    auto inst = validate_instance(spec);
    auto families = [&](const Schedule& s) {
        std::set<ConstraintFamily> f;
        for (const auto& v : check_schedule(s, inst)) f.insert(v.family);
        return f;
    };
    auto ok = as_file({{"a", "A", 0, 2, {}}, {"b", "B", 1, 2, {}}});
    EXPECT_TRUE(check_schedule(ok, inst).empty());

    auto missing = as_file({{"a", "A", 0, 2, {}}});
    EXPECT_EQ(families(missing), std::set{ConstraintFamily::Assignment});

    auto infeasible = as_file({{"a", "B", 0, 2, {}}, {"b", "B", 2, 3, {}}});
    EXPECT_EQ(families(infeasible), std::set{ConstraintFamily::Feasibility});

    auto wrong_end = as_file({{"a", "A", 0, 2.5, {}}, {"b", "B", 1, 2, {}}});
    EXPECT_EQ(families(wrong_end), std::set{ConstraintFamily::Completion});

    auto early = as_file({{"a", "A", 0, 2, {}}, {"b", "B", 0.5, 1.5, {}}});
    EXPECT_EQ(families(early), std::set{ConstraintFamily::TimeWindow});

    Schedule bad_cache = finalize_schedule(ok, inst);
    bad_cache.makespan = 7.0;
    EXPECT_EQ(families(bad_cache), std::set{ConstraintFamily::Completion});
}

TEST(Io, RoundTrip) {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto inst = validate_instance(testsupport::oracle_spec(seed));
        auto text = instance_spec_to_json(inst.spec()).dump();
        auto again = validate_instance(instance_spec_from_json(json::parse(text)));
        EXPECT_EQ(inst, again) << "seed " << seed;
    }
}

TEST(Io, ScheduleRoundTrip) {
    auto inst = validate_instance(testsupport::oracle_spec(4));
    std::vector<std::size_t> robot_of(inst.num_tasks());
    std::vector<double> start(inst.num_tasks());
    double t = 0;
    for (std::size_t j : inst.topological_order()) {
        for (std::size_t i = 0; i < inst.num_robots(); ++i)
            if (inst.feasible(i, j)) robot_of[j] = i;
        start[j] = std::max(t, inst.release(j));
        t = start[j] + inst.duration(robot_of[j], j);
    }
    auto s = schedule_from_assignment(inst, robot_of, start, "serial");
    auto back = schedule_from_json(json::parse(schedule_to_json(s).dump()));
    back.metadata = s.metadata;
    back.objective = s.objective;
    EXPECT_EQ(finalize_schedule(back, inst), s);
}

TEST(Io, ParseErrors) {
    EXPECT_EQ(kind_of([] { instance_spec_from_json(json::parse(R"({"robots": []})")); }), ErrorKind::ParseError);
    EXPECT_EQ(kind_of([] { instance_spec_from_json(json::parse(R"({"robots": [], "tasks": [{"id": "a"}]})")); }),
              ErrorKind::ParseError);
}
