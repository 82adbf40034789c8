#pragma once

#include <chrono>
#include <cstdio>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mrsched/allocator.hpp"
#include "mrsched/frontend.hpp"
#include "mrsched/sim.hpp"

namespace mrsched::bench {

enum class Category { ConstraintFree, Temporal, Heterogeneous };
enum class Arm { Base, MilpOnly, AuctionFitness, MilpFitness };

constexpr std::string_view to_string(Category c) {
    switch (c) {
    case Category::ConstraintFree: return "ConstraintFree";
    case Category::Temporal: return "Temporal";
    case Category::Heterogeneous: return "Heterogeneous";
    }
    return "Unknown";
}

constexpr std::string_view to_string(Arm a) {
    switch (a) {
    case Arm::Base: return "Base";
    case Arm::MilpOnly: return "MilpOnly";
    case Arm::AuctionFitness: return "AuctionFitness";
    case Arm::MilpFitness: return "MilpFitness";
    }
    return "Unknown";
}

inline Category parse_category(const std::string& s) {
    for (auto c : {Category::ConstraintFree, Category::Temporal, Category::Heterogeneous})
        if (s == to_string(c)) return c;
    throw Error(ErrorKind::SpecInvalid, "unknown family category '" + s + "'");
}

inline Arm parse_arm(const std::string& s) {
    for (auto a : {Arm::Base, Arm::MilpOnly, Arm::AuctionFitness, Arm::MilpFitness})
        if (s == to_string(a)) return a;
    throw Error(ErrorKind::SpecInvalid, "unknown ablation arm '" + s + "'");
}

inline AllocatorKind arm_allocator(Arm a) {
    switch (a) {
    case Arm::Base: return AllocatorKind::Greedy;
    case Arm::AuctionFitness: return AllocatorKind::Auction;
    default: return AllocatorKind::Milp;
    }
}

inline bool arm_uses_provider(Arm a) { return a == Arm::AuctionFitness || a == Arm::MilpFitness; }

struct FamilySpec {
    Category category = Category::ConstraintFree;
    std::size_t n_robots = 2;
    std::size_t n_tasks = 8;
    std::uint64_t seed = 0;
    /// Number of instances; instance k uses seed + k.
    std::size_t count = 1;
    double duration_min = 1.0;
    double duration_max = 6.0;
    bool integer_durations = true;
    /// Temporal: probability that task j hangs off task j-1; otherwise it
    /// gets a random earlier parent or none with equal odds.
    double chain_density = 0.5;
    /// Heterogeneous: extra capabilities per robot. Empty = one specialty each.
    std::vector<std::vector<std::string>> capability_partition;
    double hard_fraction = 0.25;
    double soft_fraction = 0.5;
    /// Heterogeneous instances also carry light precedence.
    double hetero_chain_density = 0.25;
};

namespace detail {

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::vector<std::vector<std::string>> partition_of(const FamilySpec& f) {
    if (!f.capability_partition.empty()) return f.capability_partition;
    std::vector<std::vector<std::string>> p;
    for (std::size_t i = 0; i < f.n_robots; ++i) p.push_back({"spec" + std::to_string(i)});
    return p;
}

/// Capabilities held by exactly one robot, with that robot's index.
inline std::vector<std::pair<std::string, std::size_t>> unique_capabilities(
    const std::vector<std::vector<std::string>>& part) {
    std::map<std::string, std::vector<std::size_t>> holders;
    for (std::size_t i = 0; i < part.size(); ++i)
        for (const auto& c : part[i]) holders[c].push_back(i);
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& [c, h] : holders)
        if (h.size() == 1) out.emplace_back(c, h.front());
    return out;
}

inline void add_forest_edges(std::vector<Task>& tasks, double density, std::mt19937_64& rng, bool require_edge) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    bool any = false;
    for (std::size_t j = 1; j < tasks.size(); ++j) {
        const double u = unit(rng);
        const double v = unit(rng);
        std::uniform_int_distribution<std::size_t> pick(0, j - 1);
        const std::size_t p = pick(rng);
        if (u < density) {
            tasks[j].dependencies = {tasks[j - 1].id};
        } else if (v < 0.5) {
            tasks[j].dependencies = {tasks[p].id};
        } else {
            continue;
        }
        any = true;
    }
    if (require_edge && !any && tasks.size() >= 2) tasks[1].dependencies = {tasks[0].id};
}

} // namespace detail

inline void validate_family(const FamilySpec& f) {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::SpecInvalid, m); };
    if (f.n_robots == 0) bad("n_robots must be positive");
    if (f.n_tasks == 0) bad("n_tasks must be positive");
    if (!(f.duration_min > 0.0) || !(f.duration_max >= f.duration_min)) bad("duration range must satisfy 0 < min <= max");
    if (f.integer_durations && std::floor(f.duration_max) < std::ceil(f.duration_min))
        bad("duration range contains no integer");
    for (double p : {f.chain_density, f.hard_fraction, f.soft_fraction, f.hetero_chain_density})
        if (!(p >= 0.0 && p <= 1.0)) bad("probabilities must lie in [0,1]");
    if (f.category == Category::Temporal && f.n_tasks < 2) bad("Temporal family needs at least 2 tasks");
    if (f.category == Category::Heterogeneous) {
        const auto part = detail::partition_of(f);
        if (part.size() != f.n_robots) bad("capability_partition needs one entry per robot");
        if (detail::unique_capabilities(part).empty()) bad("capability_partition has no uniquely held capability");
    }
}

/// Mock fitness rules that reward each specialty holder on tasks tagged with it.
inline std::vector<FitnessRule> family_fitness_rules(const FamilySpec& f) {
    std::vector<FitnessRule> rules;
    if (f.category != Category::Heterogeneous) return rules;
    std::set<std::string> seen;
    for (const auto& caps : detail::partition_of(f))
        for (const auto& c : caps) {
            if (!seen.insert(c).second) continue;
            rules.push_back({c, c, 0.5});
            if (detail::lower(c) != c) rules.push_back({detail::lower(c), c, 0.5});
        }
    return rules;
}

inline ProblemInstance generate_instance(const FamilySpec& f, std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(f.category) + 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto duration = [&]() {
        if (f.integer_durations) {
            std::uniform_int_distribution<int> d(static_cast<int>(std::ceil(f.duration_min)),
                                                 static_cast<int>(std::floor(f.duration_max)));
            return static_cast<double>(d(rng));
        }
        return f.duration_min + (f.duration_max - f.duration_min) * unit(rng);
    };
    InstanceSpec spec;
    const auto part = detail::partition_of(f);
    for (std::size_t i = 0; i < f.n_robots; ++i) {
        RobotProfile r;
        r.id = "r" + std::to_string(i);
        if (f.category == Category::Heterogeneous) r.capabilities.insert(part[i].begin(), part[i].end());
        spec.robots.push_back(std::move(r));
    }
    for (std::size_t j = 0; j < f.n_tasks; ++j) {
        Task t;
        t.id = "t" + std::to_string(j);
        t.duration = duration();
        t.description = "task " + std::to_string(j);
        spec.tasks.push_back(std::move(t));
    }
    if (f.category == Category::Temporal) detail::add_forest_edges(spec.tasks, f.chain_density, rng, true);
    if (f.category == Category::Heterogeneous) {
        const auto uniq = detail::unique_capabilities(part);
        std::set<std::string> all_caps;
        for (const auto& caps : part) all_caps.insert(caps.begin(), caps.end());
        std::vector<std::string> caps(all_caps.begin(), all_caps.end());
        bool any_hard = false;
        for (auto& t : spec.tasks) {
            const double u = unit(rng);
            std::uniform_int_distribution<std::size_t> pu(0, uniq.size() - 1);
            std::uniform_int_distribution<std::size_t> pc(0, caps.size() - 1);
            const auto& hard = uniq[pu(rng)];
            const auto& soft = caps[pc(rng)];
            if (u < f.hard_fraction) {
                t.required_capabilities = {hard.first};
                t.description += " needs " + hard.first;
                any_hard = true;
            } else if (u < f.hard_fraction + f.soft_fraction) {
                t.description += " best with " + detail::lower(soft);
            }
        }
        if (!any_hard) {
            spec.tasks.front().required_capabilities = {uniq.front().first};
            spec.tasks.front().description += " needs " + uniq.front().first;
        }
        detail::add_forest_edges(spec.tasks, f.hetero_chain_density, rng, false);
    }
    return validate_instance(std::move(spec));
}

/// Seeded instances for a family; instance k uses seed + k.
inline std::vector<ProblemInstance> generate_family(const FamilySpec& f) {
    validate_family(f);
    std::vector<ProblemInstance> out;
    for (std::size_t k = 0; k < f.count; ++k) out.push_back(generate_instance(f, f.seed + k));
    return out;
}

/// The instance with provider-scored (mock) fitness attached.
inline ProblemInstance with_provider_fitness(const ProblemInstance& inst, const std::vector<FitnessRule>& rules) {
    InstanceSpec spec = inst.spec();
    spec.fitness = mock_fitness(spec.robots, spec.tasks, rules);
    spec.fitness_raw = true;
    return validate_instance(std::move(spec));
}

struct GridSpec {
    std::vector<FamilySpec> families;
    std::vector<Arm> arms;
    std::size_t repetitions = 1;
    SimConfig sim;
    SolveConfig solve;
    AuctionConfig auction;
    /// Success needs realized makespan within this multiple of the optimum.
    double deadline_factor = 1.5;
    unsigned threads = 1;
};

struct CellRecord {
    std::string family;
    std::string arm;
    std::uint64_t seed = 0;
    bool success = false;
    double planned_makespan = 0.0;
    double realized_makespan = 0.0;
    double idle_total = 0.0;
    std::size_t replans = 0;
    std::string solver_status;
    double wall_time = 0.0;
    // Not part of the CSV.
    double assignment_cost = 0.0;
    double optimal_makespan = 0.0;
    std::string error;
};

namespace detail {

inline double optimal_makespan(const ProblemInstance& inst, SolveConfig cfg) {
    InstanceSpec spec = inst.spec();
    spec.weights = {1.0, 0.0, 0.0};
    auto pure = validate_instance(std::move(spec));
    cfg.gap_rel = 0.0;
    cfg.warm_start.reset();
    cfg.telemetry = nullptr;
    auto r = solve_exact(pure, cfg);
    if (!r.schedule) throw Error(ErrorKind::Infeasible, "no feasible schedule");
    return r.schedule->makespan;
}

inline CellRecord run_cell(const FamilySpec& fam, Arm arm, std::uint64_t seed, const ProblemInstance& base,
                           double opt, const GridSpec& grid) {
    CellRecord rec;
    rec.family = std::string(to_string(fam.category));
    rec.arm = std::string(to_string(arm));
    rec.seed = seed;
    rec.optimal_makespan = opt;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto rules = family_fitness_rules(fam);
        const auto scored = with_provider_fitness(base, rules);
        const auto& inst = arm_uses_provider(arm) ? scored : base;
        PlanOptions opts;
        opts.kind = arm_allocator(arm);
        opts.solve = grid.solve;
        if (opts.kind == AllocatorKind::Milp) opts.solve.gap_rel = 0.0;
        opts.auction = grid.auction;
        auto outcome = plan(inst, opts);
        rec.solver_status = outcome.status;
        rec.planned_makespan = outcome.schedule.makespan;
        rec.assignment_cost = assignment_cost_total(outcome.schedule, scored);
        if (!check_schedule(outcome.schedule, inst).empty()) throw Error(ErrorKind::Infeasible, "plan fails verification");
        SimConfig sim = grid.sim;
        sim.rng_seed = grid.sim.rng_seed ^ (seed * 0x2545F4914F6CDD1DULL);
        MockFitness provider(rules);
        UniformFitness uniform;
        const FitnessProvider* rescorer = arm_uses_provider(arm) ? static_cast<const FitnessProvider*>(&provider)
                                                                  : static_cast<const FitnessProvider*>(&uniform);
        auto ep = run_episode(inst, outcome.schedule, sim, opts, rescorer);
        rec.realized_makespan = ep.metrics.realized_makespan;
        rec.idle_total = ep.metrics.total_idle_time;
        rec.replans = ep.metrics.replan_count;
        rec.success = ep.metrics.success && rec.realized_makespan <= grid.deadline_factor * opt + kTimeTol;
    } catch (const Error& e) {
        rec.success = false;
        rec.solver_status = "Error:" + std::string(to_string(e.kind()));
        rec.error = e.what();
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

} // namespace detail

/// Runs every (family, seed, arm) cell. Cell failures are recorded, never thrown.
/// Records come back in family, seed, arm order regardless of threading.
inline std::vector<CellRecord> run_grid(const GridSpec& grid) {
    if (grid.families.empty()) throw Error(ErrorKind::SpecInvalid, "grid needs at least one family");
    if (grid.arms.empty()) throw Error(ErrorKind::SpecInvalid, "grid needs at least one arm");
    for (const auto& f : grid.families) validate_family(f);

    struct Job {
        std::size_t family;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t f = 0; f < grid.families.size(); ++f)
        for (std::size_t r = 0; r < grid.repetitions; ++r) jobs.push_back({f, grid.families[f].seed + r});

    std::vector<std::vector<CellRecord>> out(jobs.size());
    auto work = [&](std::size_t k) {
        const auto& fam = grid.families[jobs[k].family];
        const auto seed = jobs[k].seed;
        std::vector<CellRecord> cells;
        try {
            auto inst = generate_instance(fam, seed);
            const double opt = detail::optimal_makespan(inst, grid.solve);
            for (auto arm : grid.arms) cells.push_back(detail::run_cell(fam, arm, seed, inst, opt, grid));
        } catch (const Error& e) {
            for (auto arm : grid.arms) {
                CellRecord rec;
                rec.family = std::string(to_string(fam.category));
                rec.arm = std::string(to_string(arm));
                rec.seed = seed;
                rec.solver_status = "Error:" + std::string(to_string(e.kind()));
                rec.error = e.what();
                cells.push_back(rec);
            }
        }
        out[k] = std::move(cells);
    };
    const unsigned threads = std::max(1u, grid.threads);
    if (threads == 1) {
        for (std::size_t k = 0; k < jobs.size(); ++k) work(k);
    } else {
        std::mutex mu;
        std::size_t next = 0;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t k;
                    {
                        std::lock_guard lock(mu);
                        if (next >= jobs.size()) return;
                        k = next++;
                    }
                    work(k);
                }
            });
        for (auto& th : pool) th.join();
    }
    std::vector<CellRecord> flat;
    for (auto& v : out)
        for (auto& r : v) flat.push_back(std::move(r));
    return flat;
}

// ---------------------------------------------------------------- reports

inline const char* kCsvHeader =
    "family,arm,seed,success,planned_makespan,realized_makespan,idle_total,replans,solver_status,wall_time";

namespace detail {

inline std::string num(double v) { return json(v).dump(); }

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

inline std::string to_csv(const std::vector<CellRecord>& records) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : records) {
        out += r.family + "," + r.arm + "," + std::to_string(r.seed) + "," + (r.success ? "1" : "0") + "," +
               detail::num(r.planned_makespan) + "," + detail::num(r.realized_makespan) + "," +
               detail::num(r.idle_total) + "," + std::to_string(r.replans) + "," + r.solver_status + "," +
               detail::num(r.wall_time) + "\n";
    }
    return out;
}

inline std::vector<CellRecord> from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw Error(ErrorKind::ParseError, "unexpected CSV header");
    std::vector<CellRecord> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto f = detail::split_csv(line);
        if (f.size() != 10) throw Error(ErrorKind::ParseError, "CSV row " + std::to_string(row) + " has wrong arity");
        try {
            CellRecord r;
            r.family = f[0];
            r.arm = f[1];
            r.seed = std::stoull(f[2]);
            r.success = f[3] == "1";
            r.planned_makespan = std::stod(f[4]);
            r.realized_makespan = std::stod(f[5]);
            r.idle_total = std::stod(f[6]);
            r.replans = std::stoul(f[7]);
            r.solver_status = f[8];
            r.wall_time = std::stod(f[9]);
            out.push_back(std::move(r));
        } catch (const std::exception&) {
            throw Error(ErrorKind::ParseError, "CSV row " + std::to_string(row) + " is malformed");
        }
    }
    return out;
}

struct Summary {
    std::size_t cells = 0;
    double success_rate = 0.0;
    double mean_planned = 0.0;
    double mean_realized = 0.0;
    double mean_idle = 0.0;
};

/// Per (arm, family) aggregates, keyed in first-appearance order of the records.
struct Aggregate {
    std::vector<std::string> arms;
    std::vector<std::string> families;
    std::map<std::pair<std::string, std::string>, Summary> cells;
};

inline Aggregate aggregate(const std::vector<CellRecord>& records) {
    Aggregate a;
    auto note = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };
    for (const auto& r : records) {
        note(a.arms, r.arm);
        note(a.families, r.family);
        auto& s = a.cells[{r.arm, r.family}];
        ++s.cells;
        s.success_rate += r.success ? 1.0 : 0.0;
        s.mean_planned += r.planned_makespan;
        s.mean_realized += r.realized_makespan;
        s.mean_idle += r.idle_total;
    }
    for (auto& [k, s] : a.cells) {
        const double n = static_cast<double>(s.cells);
        s.success_rate /= n;
        s.mean_planned /= n;
        s.mean_realized /= n;
        s.mean_idle /= n;
    }
    return a;
}

/// Markdown tables (rows = arms, columns = families + macro average) built
/// from CSV fields only, so re-rendering stored results is byte-identical.
inline std::string to_markdown(const std::vector<CellRecord>& records) {
    const auto a = aggregate(records);
    auto fmt = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    std::string out;
    auto table = [&](const std::string& title, double Summary::*field) {
        out += "### " + title + "\n\n| Arm |";
        for (const auto& f : a.families) out += " " + f + " |";
        out += " Avg |\n|---|";
        for (std::size_t k = 0; k <= a.families.size(); ++k) out += "---:|";
        out += "\n";
        for (const auto& arm : a.arms) {
            out += "| " + arm + " |";
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& f : a.families) {
                auto it = a.cells.find({arm, f});
                if (it == a.cells.end()) {
                    out += " - |";
                    continue;
                }
                out += " " + fmt(it->second.*field) + " |";
                sum += it->second.*field;
                ++n;
            }
            out += " " + (n ? fmt(sum / static_cast<double>(n)) : std::string("-")) + " |\n";
        }
        out += "\n";
    };
    table("Success rate", &Summary::success_rate);
    table("Mean planned makespan", &Summary::mean_planned);
    table("Mean realized makespan", &Summary::mean_realized);
    table("Mean idle time", &Summary::mean_idle);
    return out;
}

// ---------------------------------------------------------------- grid files

inline FamilySpec family_from_json(const json& j) {
    FamilySpec f;
    f.category = parse_category(j.at("category").get<std::string>());
    f.n_robots = j.value("n_robots", f.n_robots);
    f.n_tasks = j.value("n_tasks", f.n_tasks);
    f.seed = j.value("seed", f.seed);
    f.count = j.value("count", f.count);
    f.duration_min = j.value("duration_min", f.duration_min);
    f.duration_max = j.value("duration_max", f.duration_max);
    f.integer_durations = j.value("integer_durations", f.integer_durations);
    f.chain_density = j.value("chain_density", f.chain_density);
    if (j.contains("capability_partition"))
        f.capability_partition = j.at("capability_partition").get<std::vector<std::vector<std::string>>>();
    f.hard_fraction = j.value("hard_fraction", f.hard_fraction);
    f.soft_fraction = j.value("soft_fraction", f.soft_fraction);
    f.hetero_chain_density = j.value("hetero_chain_density", f.hetero_chain_density);
    return f;
}

/// {"families": [...], "arms": [...], "repetitions": k, "sim_config": {...},
///  "time_limit": s, "deadline_factor": x, "threads": t}
inline GridSpec grid_from_json(const json& j) {
    try {
        GridSpec g;
        for (const auto& f : j.at("families")) g.families.push_back(family_from_json(f));
        if (j.contains("arms"))
            for (const auto& a : j.at("arms")) g.arms.push_back(parse_arm(a.get<std::string>()));
        else
            g.arms = {Arm::Base, Arm::MilpOnly, Arm::AuctionFitness, Arm::MilpFitness};
        g.repetitions = j.value("repetitions", g.repetitions);
        if (j.contains("sim_config")) g.sim = sim_config_from_json(j.at("sim_config"));
        g.solve.time_limit = j.value("time_limit", g.solve.time_limit);
        g.deadline_factor = j.value("deadline_factor", g.deadline_factor);
        g.threads = j.value("threads", g.threads);
        return g;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SpecInvalid, std::string("grid spec: ") + e.what());
    }
}

} // namespace mrsched::bench
