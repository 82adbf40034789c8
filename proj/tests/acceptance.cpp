// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mrsched/bench.hpp"
#include "mrsched/cli.hpp"
#include "mrsched/lp_format.hpp"
#include "mrsched/milp_model.hpp"
#include "mrsched/sim.hpp"
#include "oracle/brute_force.hpp"
#include "support/random_instances.hpp"

using namespace mrsched;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

SolveConfig exact_config() {
    SolveConfig c;
    c.gap_rel = 0.0;
    return c;
}

Schedule solve_optimal(const ProblemInstance& inst) {
    auto r = solve_exact(inst, exact_config());
    if (!r.schedule || r.status != SolveStatus::Optimal) throw std::runtime_error("solver did not prove optimality");
    return *r.schedule;
}

fs::path scratch_dir() {
    auto dir = fs::temp_directory_path() / "mrsched_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun invoke(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ------------------------------------------------------------------ 1

Outcome oracle_equivalence() {
    Outcome o;
    std::size_t agree = 0;
    std::size_t leaves = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto inst = validate_instance(testsupport::oracle_spec(seed));
        const auto bf = oracle::brute_force(inst);
        leaves += bf.leaves;
        const auto r = solve_exact(inst, exact_config());
        const double got = r.schedule ? r.objective : kInfinity;
        const bool same = (!std::isfinite(bf.objective) && !r.schedule) || std::abs(got - bf.objective) <= 1e-6;
        if (same) {
            ++agree;
        } else if (o.pass) {
            o.pass = false;
            o.detail = "seed " + std::to_string(seed) + ": solver " + std::to_string(got) + " vs oracle " +
                       std::to_string(bf.objective) + "; ";
        }
    }
    o.detail += std::to_string(agree) + "/200 instances agree (" + std::to_string(leaves) + " oracle leaves)";
    return o;
}

// ------------------------------------------------------------------ 2

/// Two capable robots plus one with no capabilities; every task needs "base".
InstanceSpec mutation_instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 31 + 7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    InstanceSpec spec;
    for (const char* id : {"r0", "r1"}) {
        RobotProfile r;
        r.id = id;
        r.capabilities = {"base"};
        spec.robots.push_back(r);
    }
    RobotProfile spare;
    spare.id = "rx";
    spec.robots.push_back(spare);
    const std::size_t m = 5;
    for (std::size_t j = 0; j < m; ++j) {
        Task t;
        t.id = "t" + std::to_string(j);
        t.duration = static_cast<double>(1 + rng() % 6);
        t.required_capabilities = {"base"};
        if (j > 0 && unit(rng) < 0.6) t.dependencies.push_back("t" + std::to_string(rng() % j));
        spec.tasks.push_back(t);
    }
    if (spec.tasks[1].dependencies.empty()) spec.tasks[1].dependencies = {"t0"};
    Grid<double> fit(3, m);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < m; ++j) fit(i, j) = unit(rng);
    spec.fitness = fit;
    return spec;
}

struct Mutation {
    std::string family;
    std::function<std::optional<std::pair<InstanceSpec, std::vector<ScheduleEntry>>>(
        const InstanceSpec&, const std::vector<ScheduleEntry>&)>
        apply;
};

double task_duration(const InstanceSpec& spec, const std::string& id) {
    for (const auto& t : spec.tasks)
        if (t.id == id) return t.duration;
    return 0.0;
}

std::vector<std::string> successors_of(const InstanceSpec& spec, const std::string& id) {
    std::vector<std::string> out;
    for (const auto& t : spec.tasks)
        for (const auto& d : t.dependencies)
            if (d == id) out.push_back(t.id);
    return out;
}

const ScheduleEntry& entry_of(const std::vector<ScheduleEntry>& es, const std::string& id) {
    for (const auto& e : es)
        if (e.task_id == id) return e;
    throw std::runtime_error("missing entry " + id);
}

bool robot_free(const std::vector<ScheduleEntry>& es, const std::string& robot, double a, double b,
                const std::string& except) {
    for (const auto& e : es)
        if (e.robot_id == robot && e.task_id != except && e.start < b - 1e-9 && a < e.end - 1e-9) return false;
    return true;
}

std::vector<Mutation> mutations() {
    using Result = std::optional<std::pair<InstanceSpec, std::vector<ScheduleEntry>>>;
    std::vector<Mutation> ms;
    ms.push_back({"Assignment", [](const InstanceSpec& spec, const std::vector<ScheduleEntry>& es) -> Result {
                      for (auto it = spec.tasks.rbegin(); it != spec.tasks.rend(); ++it) {
                          if (!successors_of(spec, it->id).empty()) continue;
                          auto out = es;
                          out.erase(std::remove_if(out.begin(), out.end(),
                                                   [&](const ScheduleEntry& e) { return e.task_id == it->id; }),
                                    out.end());
                          return std::make_pair(spec, out);
                      }
                      return std::nullopt;
                  }});
    ms.push_back({"Feasibility", [](const InstanceSpec& spec, const std::vector<ScheduleEntry>& es) -> Result {
                      auto out = es;
                      out.front().robot_id = "rx";
                      return std::make_pair(spec, out);
                  }});
    ms.push_back({"Precedence", [](const InstanceSpec& spec, const std::vector<ScheduleEntry>& es) -> Result {
                      for (const auto& t : spec.tasks) {
                          for (const auto& k : t.dependencies) {
                              const auto& ek = entry_of(es, k);
                              const double d = t.duration;
                              for (double s : {ek.start, ek.end - 0.5, std::max(0.0, ek.end - d), 0.0}) {
                                  if (s < 0.0 || s > ek.end - 1e-3) continue;
                                  bool succ_ok = true;
                                  for (const auto& q : successors_of(spec, t.id))
                                      succ_ok &= entry_of(es, q).start >= s + d - 1e-9;
                                  if (!succ_ok) continue;
                                  for (const char* robot : {"r0", "r1"}) {
                                      if (!robot_free(es, robot, s, s + d, t.id)) continue;
                                      auto out = es;
                                      for (auto& e : out)
                                          if (e.task_id == t.id) e = {t.id, robot, s, s + d, {}};
                                      return std::make_pair(spec, out);
                                  }
                              }
                          }
                      }
                      return std::nullopt;
                  }});
    ms.push_back({"Overlap", [](const InstanceSpec& spec, const std::vector<ScheduleEntry>& es) -> Result {
                      for (const auto& e : es) {
                          const std::string other = e.robot_id == "r0" ? "r1" : "r0";
                          if (robot_free(es, other, e.start, e.end, e.task_id)) continue;
                          auto out = es;
                          for (auto& x : out)
                              if (x.task_id == e.task_id) x.robot_id = other;
                          return std::make_pair(spec, out);
                      }
                      return std::nullopt;
                  }});
    ms.push_back({"Completion", [](const InstanceSpec& spec, const std::vector<ScheduleEntry>& es) -> Result {
                      for (const auto& e : es) {
                          bool last = true;
                          for (const auto& x : es)
                              if (x.robot_id == e.robot_id && x.start > e.start) last = false;
                          bool succ_ok = true;
                          for (const auto& q : successors_of(spec, e.task_id))
                              succ_ok &= entry_of(es, q).start >= e.end + 1.0 - 1e-9;
                          if (!last || !succ_ok) continue;
                          auto out = es;
                          for (auto& x : out)
                              if (x.task_id == e.task_id) x.end += 1.0;
                          return std::make_pair(spec, out);
                      }
                      return std::nullopt;
                  }});
    ms.push_back({"TimeWindow", [](const InstanceSpec& spec, const std::vector<ScheduleEntry>& es) -> Result {
                      auto mutated = spec;
                      auto& t = mutated.tasks.back();
                      const auto& e = entry_of(es, t.id);
                      const double d = task_duration(spec, t.id);
                      t.time_window = TimeWindow{e.start + 0.5 * d, e.start + 1.5 * d + 1.0};
                      return std::make_pair(mutated, es);
                  }});
    return ms;
}

Outcome verifier_completeness(const fs::path& dir) {
    Outcome o;
    std::map<std::string, std::size_t> passed;
    std::size_t tries = 0;
    const auto ms = mutations();
    for (const auto& mut : ms) {
        for (std::uint64_t seed = 0; passed[mut.family] < 20 && seed < 400; ++seed) {
            ++tries;
            const auto spec = mutation_instance(seed);
            const auto inst = validate_instance(spec);
            const auto optimal = solve_optimal(inst);
            auto mutated = mut.apply(spec, optimal.entries);
            if (!mutated) continue;
            Schedule s;
            s.entries = mutated->second;
            write_text_file((dir / "inst.json").string(), instance_spec_to_json(mutated->first).dump());
            write_text_file((dir / "sched.json").string(), schedule_to_json(s).dump());
            auto r = invoke({"check", (dir / "inst.json").string(), (dir / "sched.json").string()});
            std::set<std::string> families;
            std::istringstream lines(r.out);
            std::string line;
            while (std::getline(lines, line))
                if (line.rfind("ok:", 0) != 0) families.insert(line.substr(0, line.find(':')));
            if (r.code == 3 && families == std::set<std::string>{mut.family}) {
                ++passed[mut.family];
            } else {
                o.pass = false;
                std::string got;
                for (const auto& f : families) got += f + " ";
                o.detail += mut.family + " seed " + std::to_string(seed) + " reported {" + got + "}; ";
                ++passed[mut.family];
            }
        }
    }
    std::string summary;
    for (const auto& mut : ms) {
        summary += mut.family + "=" + std::to_string(passed[mut.family]) + " ";
        if (passed[mut.family] < 20) {
            o.pass = false;
            o.detail += mut.family + " found only " + std::to_string(passed[mut.family]) + " applicable seeds; ";
        }
    }
    o.detail += "cases per family: " + summary + "(" + std::to_string(tries) + " seeds tried)";
    return o;
}

// ------------------------------------------------------------------ 3

Outcome anytime_progress() {
    Outcome o;
    const std::vector<double> limits{1e-4, 1e-2, 1.0, 120.0};
    std::size_t checked = 0;
    std::size_t fallbacks = 0;
    std::size_t improved = 0;
    for (std::size_t k = 0; k < 50; ++k) {
        testsupport::RandomOptions opt;
        opt.m = 4 + k % 9;
        opt.n = k % 3 == 0 ? 3 : 2;
        opt.mix = static_cast<testsupport::Mix>(k % 3);
        opt.windows = k % 4 == 1;
        opt.integer_durations = opt.m >= 9 || k % 2 == 0;
        const auto inst = validate_instance(testsupport::random_spec(9000 + k, opt));
        double prev = kInfinity;
        for (double limit : limits) {
            SolveConfig cfg;
            cfg.time_limit = limit;
            cfg.gap_rel = 0.0;
            auto r = anytime_solve(inst, cfg, [](const ProblemInstance& p) { return fallback_allocate(p, {}); });
            ++checked;
            if (r.metadata.count("fallback")) ++fallbacks;
            if (!r.schedule) {
                o.pass = false;
                o.detail += "instance " + std::to_string(k) + " returned no schedule; ";
                continue;
            }
            if (!check_schedule(*r.schedule, inst).empty()) {
                o.pass = false;
                o.detail += "instance " + std::to_string(k) + " limit " + std::to_string(limit) + " has violations; ";
            }
            const double obj = objective_value(*r.schedule, inst);
            if (objective_less(prev, obj)) {
                o.pass = false;
                o.detail += "instance " + std::to_string(k) + " objective rose at limit " + std::to_string(limit) + "; ";
            }
            if (objective_less(obj, prev) && std::isfinite(prev)) ++improved;
            prev = obj;
        }
    }
    o.detail += std::to_string(checked) + " runs verified, " + std::to_string(fallbacks) + " used the fallback, " +
                std::to_string(improved) + " improved with a longer limit";
    return o;
}

// ------------------------------------------------------------------ 4

Outcome auction_bound() {
    Outcome o;
    std::size_t checked = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t n = 2 + seed % 4;
        std::mt19937_64 rng(seed + 424242);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        InstanceSpec spec;
        for (std::size_t i = 0; i < n; ++i) spec.robots.push_back({"r" + std::to_string(i), {}, {}, {}, true});
        for (std::size_t j = 0; j < n; ++j) {
            Task t;
            t.id = "t" + std::to_string(j);
            t.duration = 1.0;
            spec.tasks.push_back(t);
        }
        Grid<double> fit(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) fit(i, j) = unit(rng);
        spec.fitness = fit;
        const auto inst = validate_instance(spec);
        const double opt = oracle::optimal_assignment_cost(inst.costs());
        for (double eps : {0.001, 0.01, 0.1}) {
            AuctionConfig cfg;
            cfg.epsilon = eps;
            const auto s = auction_allocate(inst, cfg);
            ++checked;
            const double cost = assignment_cost_total(s, inst);
            worst = std::max(worst, (cost - opt) / (static_cast<double>(n) * eps));
            if (cost > opt + static_cast<double>(n) * eps + 1e-9 || !check_schedule(s, inst).empty()) {
                o.pass = false;
                o.detail += "seed " + std::to_string(seed) + " eps " + std::to_string(eps) + "; ";
            }
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu runs, worst (cost-opt)/(n*eps) = %.4f", checked, worst);
    o.detail += buf;
    return o;
}

// ------------------------------------------------------------------ 5

Outcome ablation_direction() {
    Outcome o;
    auto grid = bench::grid_from_json(read_json_file("samples/grid_ablation.json"));
    const auto records = bench::run_grid(grid);
    std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> planned;
    std::map<std::string, std::pair<double, std::size_t>> hetero_cost;
    std::size_t errors = 0;
    for (const auto& r : records) {
        if (!r.error.empty()) ++errors;
        auto& p = planned[{r.family, r.arm}];
        p.first += r.planned_makespan;
        ++p.second;
        if (r.family == "Heterogeneous") {
            auto& c = hetero_cost[r.arm];
            c.first += r.assignment_cost;
            ++c.second;
        }
    }
    auto mean = [](const std::pair<double, std::size_t>& p) { return p.first / static_cast<double>(p.second); };
    char buf[256];
    for (const char* fam : {"ConstraintFree", "Temporal", "Heterogeneous"}) {
        const double base = mean(planned[{fam, "Base"}]);
        const double milp = mean(planned[{fam, "MilpOnly"}]);
        const double auc = mean(planned[{fam, "AuctionFitness"}]);
        const double mf = mean(planned[{fam, "MilpFitness"}]);
        const bool ok = mf <= auc + 1e-9 && mf <= milp + 1e-9 && milp <= base + 1e-9;
        o.pass &= ok;
        std::snprintf(buf, sizeof buf, "%s: MF %.3f AF %.3f MO %.3f B %.3f%s; ", fam, mf, auc, milp, base,
                      ok ? "" : " (order broken)");
        o.detail += buf;
    }
    const double mf_cost = mean(hetero_cost["MilpFitness"]);
    const double mo_cost = mean(hetero_cost["MilpOnly"]);
    const bool strict = mf_cost < mo_cost;
    o.pass &= strict && errors == 0;
    std::snprintf(buf, sizeof buf, "heterogeneous cost MF %.4f < MO %.4f; %zu cells, %zu errors", mf_cost, mo_cost,
                  records.size(), errors);
    o.detail += buf;
    return o;
}

// ------------------------------------------------------------------ 6

Outcome replanning_stability() {
    Outcome o;
    std::size_t noiseless = 0;
    std::size_t successes = 0;
    std::size_t plans = 0;
    for (std::uint64_t k = 0; k < 30; ++k) {
        testsupport::RandomOptions opt;
        opt.n = k % 2 == 0 ? 3 : 2;
        opt.m = 4 + k % 4;
        opt.mix = k % 3 == 2 ? testsupport::Mix::Heterogeneous : (k % 3 == 1 ? testsupport::Mix::Temporal
                                                                              : testsupport::Mix::ConstraintFree);
        opt.integer_durations = true;
        const auto inst = validate_instance(testsupport::random_spec(7000 + k, opt));
        PlanOptions allocator;
        allocator.kind = AllocatorKind::Milp;
        allocator.solve.gap_rel = 0.0;
        const auto initial = plan(inst, allocator).schedule;
        SimConfig cfg;
        cfg.rng_seed = k;
        const bool noisy = k % 3 == 1;
        if (noisy) {
            cfg.duration_noise = 0.4;
            cfg.delay_threshold = 0.2;
        }
        const double t1 = std::floor(initial.makespan / 3.0) + 0.5;
        const std::string victim = opt.n == 3 ? "r1" : "r0";
        if (k % 2 == 0 || k % 5 == 0) cfg.script.push_back({t1, ScriptKind::RobotFailure, victim, {}, {}});
        if (k % 2 == 1 || k % 3 == 0) {
            ScriptedEvent ev;
            ev.time = t1 + 1.0;
            ev.kind = ScriptKind::Discovery;
            Task t;
            t.id = "found" + std::to_string(k);
            t.duration = 2.0;
            t.required_capabilities = {"base"};
            t.dependencies = {"t0"};
            ev.task = t;
            cfg.script.push_back(ev);
        }
        if (k % 4 == 3) cfg.script.push_back({t1 + 0.25, ScriptKind::Contradiction, {}, "t" + std::to_string(opt.m - 1), {}});

        const auto r = run_episode(inst, initial, cfg, allocator);
        if (r.metrics.success) ++successes;
        plans += r.plans.size();
        const std::string tag = "scenario " + std::to_string(k) + ": ";
        for (const auto& p : r.plans) {
            const auto pi = validate_instance(p.spec);
            if (!check_schedule(p.schedule, pi).empty()) {
                o.pass = false;
                o.detail += tag + "plan at t=" + std::to_string(p.time) + " fails verification; ";
            }
        }
        std::map<std::string, std::size_t> completions;
        for (const auto& line : r.trace) {
            auto j = json::parse(line);
            if (j["event"] == "complete") ++completions[j["task"].get<std::string>()];
        }
        for (const auto& done : r.realized.entries) {
            if (completions[done.task_id] != 1) {
                o.pass = false;
                o.detail += tag + done.task_id + " completed more than once; ";
            }
            for (const auto& p : r.plans) {
                if (p.time < done.end - 1e-9) continue;
                const ScheduleEntry* e = nullptr;
                for (const auto& x : p.schedule.entries)
                    if (x.task_id == done.task_id) e = &x;
                if (!e || e->robot_id != done.robot_id || std::abs(e->start - done.start) > 1e-6 ||
                    std::abs(e->end - done.end) > 1e-6) {
                    o.pass = false;
                    o.detail += tag + done.task_id + " moved after completion; ";
                }
            }
        }
        if (noisy) continue;
        ++noiseless;
        for (const auto& done : r.realized.entries) {
            const AdoptedPlan* in_force = nullptr;
            for (const auto& p : r.plans)
                if (p.time <= done.start + 1e-9) in_force = &p;
            const ScheduleEntry* e = nullptr;
            if (in_force)
                for (const auto& x : in_force->schedule.entries)
                    if (x.task_id == done.task_id) e = &x;
            if (!e || std::abs(e->start - done.start) > 1e-6 || std::abs(e->end - done.end) > 1e-6) {
                o.pass = false;
                o.detail += tag + done.task_id + " deviates from its plan; ";
            }
        }
    }
    o.detail += "30 scenarios (" + std::to_string(noiseless) + " noiseless), " + std::to_string(plans) +
                " adopted plans verified, " + std::to_string(successes) + " episodes succeeded";
    return o;
}

// ------------------------------------------------------------------ 7

Outcome big_m_insensitivity() {
    Outcome o;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto inst = validate_instance(testsupport::oracle_spec(seed));
        const auto bf = oracle::brute_force(inst);
        const auto best = solve_optimal(inst);
        const auto base = milp::build_model(inst);
        const auto scaled = milp::build_model(inst, 10.0 * inst.big_m());
        const auto ev1 = base.evaluate(milp::point_from_schedule(base, inst, best));
        const auto ev10 = scaled.evaluate(milp::point_from_schedule(scaled, inst, best));
        const double diff = std::max(std::abs(ev10.objective - ev1.objective), std::abs(ev10.objective - bf.objective));
        worst = std::max(worst, diff);
        if (!ev1.violated.empty() || !ev10.violated.empty() || diff > 1e-6) {
            o.pass = false;
            o.detail += "seed " + std::to_string(seed) + "; ";
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "200 instances, max objective change %.3g under 10x big-M", worst);
    o.detail += buf;
    return o;
}

// ------------------------------------------------------------------ 8

Outcome lp_round_trip() {
    Outcome o;
    for (std::uint64_t seed = 300; seed < 320; ++seed) {
        const auto inst = validate_instance(testsupport::oracle_spec(seed));
        const std::size_t n = inst.num_robots();
        const std::size_t m = inst.num_tasks();
        const auto model = milp::build_model(inst);
        const auto text = milp::export_lp(model);
        const auto lp = lp::parse_lp(text);
        const bool duration_travel =
            inst.cost_params().travel && inst.cost_params().travel_mode == TravelMode::Duration;
        std::size_t deadline_rows = 0;
        if (duration_travel)
            for (std::size_t j = 0; j < m; ++j) deadline_rows += std::isfinite(inst.deadline(j)) ? 1 : 0;
        const std::size_t vars = n * m + n * m * (m - 1) / 2 + m + n + 1;
        const std::size_t rows = m + inst.edges().size() + n * m * (m - 1) + n * m + m + deadline_rows;
        const std::size_t bins = n * m + n * m * (m - 1) / 2;
        bool ok = lp.variables.size() == vars && model.variables().size() == vars && lp.rows.size() == rows &&
                  model.row_counts().total() == rows && lp.binaries.size() == bins;
        const auto best = solve_optimal(inst);
        const auto point = milp::point_from_schedule(model, inst, best);
        std::map<std::string, double> named;
        for (std::size_t v = 0; v < point.size(); ++v) named[model.variables()[v].name] = point[v];
        const auto [obj, excess] = lp.evaluate(named);
        ok &= std::abs(obj - model.evaluate(point).objective) <= 1e-6 && excess <= 1e-6;
        if (!ok) {
            o.pass = false;
            o.detail += "seed " + std::to_string(seed) + " (vars " + std::to_string(lp.variables.size()) + "/" +
                        std::to_string(vars) + ", rows " + std::to_string(lp.rows.size()) + "/" + std::to_string(rows) +
                        "); ";
        }
    }
    o.detail += "20 exported models parsed; counts match closed forms; objective agrees at the optimum";
    return o;
}

// ------------------------------------------------------------------ 9

Outcome determinism(const fs::path& dir) {
    Outcome o;
    auto p = [&](const std::string& name) { return (dir / name).string(); };
    auto twice = [&](const std::string& what, const std::vector<std::string>& args,
                     const std::function<std::string(const CliRun&)>& artifact) {
        const auto a = invoke(args);
        const auto first = artifact(a);
        const auto b = invoke(args);
        const auto second = artifact(b);
        if (a.code != 0 || b.code != 0 || first.empty() || first != second) {
            o.pass = false;
            o.detail += what + " differs or failed (" + a.err + "); ";
        }
    };
    const auto out = [](const CliRun& r) { return r.out; };
    twice("plan", {"plan", "samples/instance.json"}, out);
    invoke({"plan", "samples/instance.json", "--out", p("s.json")});
    twice("plan --out", {"plan", "samples/instance.json", "--out", p("s2.json")},
          [&](const CliRun&) { return slurp(p("s2.json")); });
    twice("check", {"check", "samples/instance.json", p("s.json")}, out);
    twice("simulate", {"simulate", "samples/scenario.json", "--out", p("trace.jsonl")},
          [&](const CliRun&) { return slurp(p("trace.jsonl")); });
    twice("simulate stdout", {"simulate", "samples/scenario.json", "--seed", "99"}, out);
    twice("bench", {"bench", "samples/grid_small.json"}, out);
    invoke({"bench", "samples/grid_small.json", "--out", p("report")});
    twice("render", {"render", p("report.csv")}, out);
    if (invoke({"render", p("report.csv")}).out != slurp(p("report.md"))) {
        o.pass = false;
        o.detail += "render from CSV differs from bench markdown; ";
    }
    twice("export-lp", {"export-lp", "samples/instance.json"}, out);
    twice("gantt svg", {"gantt", p("s.json"), "--format", "svg", "--out", p("g.svg")},
          [&](const CliRun&) { return slurp(p("g.svg")); });
    twice("gantt ascii", {"gantt", p("s.json")}, out);
    twice("compose", {"compose", "samples/compose_request.json"}, out);
    o.detail += "plan, check, simulate, bench, render, export-lp, gantt and compose outputs are byte-identical across runs";
    return o;
}

} // namespace

int main() {
    const auto dir = scratch_dir();
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"1 oracle equivalence", oracle_equivalence},
        {"2 verifier completeness", [&] { return verifier_completeness(dir); }},
        {"3 anytime progress", anytime_progress},
        {"4 epsilon-auction bound", auction_bound},
        {"5 ablation direction", ablation_direction},
        {"6 replanning stability", replanning_stability},
        {"7 big-M insensitivity", big_m_insensitivity},
        {"8 LP export round-trip", lp_round_trip},
        {"9 determinism", [&] { return determinism(dir); }},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    fs::remove_all(dir);
    return failures == 0 ? 0 : 1;
}
