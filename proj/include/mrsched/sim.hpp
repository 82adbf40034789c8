#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mrsched/allocator.hpp"
#include "mrsched/frontend.hpp"
#include "mrsched/io.hpp"
#include "mrsched/verify.hpp"

namespace mrsched {

enum class TaskState { Pending, Running, Completed, Failed, Invalidated };
enum class RobotState { Idle, Busy, Failed };
enum class TriggerKind { Completion, DelayExceeded, PerceptionContradiction, NewDiscovery };

constexpr std::string_view to_string(TaskState s) {
    switch (s) {
    case TaskState::Pending: return "Pending";
    case TaskState::Running: return "Running";
    case TaskState::Completed: return "Completed";
    case TaskState::Failed: return "Failed";
    case TaskState::Invalidated: return "Invalidated";
    }
    return "Unknown";
}

constexpr std::string_view to_string(RobotState s) {
    switch (s) {
    case RobotState::Idle: return "Idle";
    case RobotState::Busy: return "Busy";
    case RobotState::Failed: return "Failed";
    }
    return "Unknown";
}

constexpr std::string_view to_string(TriggerKind k) {
    switch (k) {
    case TriggerKind::Completion: return "Completion";
    case TriggerKind::DelayExceeded: return "DelayExceeded";
    case TriggerKind::PerceptionContradiction: return "PerceptionContradiction";
    case TriggerKind::NewDiscovery: return "NewDiscovery";
    }
    return "Unknown";
}

struct TriggerEvent {
    TriggerKind kind;
    std::vector<std::string> subjects;
    double time = 0.0;

    friend bool operator==(const TriggerEvent&, const TriggerEvent&) = default;
};

enum class ScriptKind { RobotFailure, Contradiction, Discovery };

/// A scripted world change. Failures and contradictions stand in for sensing.
struct ScriptedEvent {
    double time = 0.0;
    ScriptKind kind = ScriptKind::Contradiction;
    std::string robot_id;          // RobotFailure
    std::string task_id;           // Contradiction
    std::optional<Task> task;      // Discovery
};

struct SimConfig {
    std::uint64_t rng_seed = 0;
    /// Sigma of the multiplicative lognormal duration noise; 0 = exact durations.
    double duration_noise = 0.0;
    /// DelayExceeded fires when a task runs past planned * (1 + threshold).
    double delay_threshold = 0.5;
    double failure_prob = 0.0;
    std::size_t max_attempts = 3;
    std::vector<ScriptedEvent> script;
    /// Replan on every completion instead of only releasing successors.
    bool replan_on_completion = false;
    std::size_t max_events = 100000;
};

struct RobotStatus {
    RobotState state = RobotState::Idle;
    std::string task;  // held task when Busy
};

struct Detection {
    double time = 0.0;
    std::string kind;
    std::string subject;
};

/// Execution record of one task.
struct TaskRun {
    std::string robot;
    double start = 0.0;
    double end = 0.0;        // realized end of the current attempt
    double planned = 0.0;    // planned duration of the current attempt
    std::size_t attempts = 0;
    std::uint64_t token = 0; // invalidates stale queue events
};

struct WorldModel {
    std::map<std::string, TaskState> task_states;
    std::map<std::string, RobotStatus> robot_states;
    double clock = 0.0;
    std::vector<Detection> detections;
    std::map<std::string, TaskRun> runs;
    std::set<std::string> completion_reported;
    std::set<std::string> delay_reported;
    std::size_t script_cursor = 0;
    /// Scripted events consumed since the last trigger detection.
    std::vector<ScriptedEvent> fired;
};

struct EpisodeMetrics {
    double planned_makespan = 0.0;
    double realized_makespan = 0.0;
    double total_idle_time = 0.0;
    std::size_t replan_count = 0;
    bool success = false;
    std::map<std::string, std::size_t> trigger_counts;
    std::string failure_cause;
};

struct AdoptedPlan {
    double time = 0.0;
    InstanceSpec spec;
    Schedule schedule;
};

struct EpisodeResult {
    EpisodeMetrics metrics;
    std::vector<std::string> trace;
    std::vector<AdoptedPlan> plans;
    /// Realized entries of completed tasks.
    Schedule realized;
    WorldModel world;

    std::string trace_text() const {
        std::string out;
        for (const auto& l : trace) out += l + '\n';
        return out;
    }
};

/// Emits triggers for the current world state and marks them reported:
/// Completion for newly finished tasks, DelayExceeded for running tasks at or
/// past planned * (1 + threshold) (once per task), and the scripted
/// contradictions and discoveries consumed since the last call.
inline std::vector<TriggerEvent> detect_triggers(WorldModel& world, const Schedule& /*active*/,
                                                 const SimConfig& config) {
    std::vector<TriggerEvent> out;
    for (const auto& [id, st] : world.task_states) {
        if (st == TaskState::Completed && world.completion_reported.insert(id).second)
            out.push_back({TriggerKind::Completion, {id}, world.clock});
    }
    for (const auto& [id, st] : world.task_states) {
        if (st != TaskState::Running || world.delay_reported.count(id)) continue;
        const auto& run = world.runs.at(id);
        const double limit = run.planned * (1.0 + config.delay_threshold);
        if (world.clock - run.start >= limit - 1e-12) {
            world.delay_reported.insert(id);
            out.push_back({TriggerKind::DelayExceeded, {id}, world.clock});
        }
    }
    for (const auto& ev : world.fired) {
        switch (ev.kind) {
        case ScriptKind::RobotFailure:
            out.push_back({TriggerKind::PerceptionContradiction, {ev.robot_id}, world.clock});
            break;
        case ScriptKind::Contradiction:
            out.push_back({TriggerKind::PerceptionContradiction, {ev.task_id}, world.clock});
            break;
        case ScriptKind::Discovery:
            out.push_back({TriggerKind::NewDiscovery, {ev.task ? ev.task->id : std::string{}}, world.clock});
            break;
        }
    }
    world.fired.clear();
    return out;
}

/// Per-robot idle seconds: gaps between consecutive busy intervals within the
/// robot's first start and last end, read from a trace. Robots that never ran
/// a task have no active window and count as 0.
inline std::map<std::string, double> idle_time(const std::vector<std::string>& trace) {
    std::map<std::string, std::vector<std::pair<double, double>>> busy;
    std::map<std::string, std::map<std::string, double>> open;  // robot -> task -> start
    for (const auto& line : trace) {
        auto j = json::parse(line);
        const std::string ev = j.value("event", "");
        if (ev == "start") {
            open[j["robot"]][j["task"]] = j["t"].get<double>();
            busy.try_emplace(j["robot"]);
        } else if (ev == "complete" || ev == "attempt_failed" || ev == "interrupted") {
            auto& o = open[j["robot"]];
            auto it = o.find(j["task"]);
            if (it == o.end()) continue;
            busy[j["robot"]].emplace_back(it->second, j["t"].get<double>());
            o.erase(it);
        }
    }
    std::map<std::string, double> out;
    for (auto& [robot, iv] : busy) {
        std::sort(iv.begin(), iv.end());
        double idle = 0.0;
        double reach = iv.empty() ? 0.0 : iv.front().second;
        for (std::size_t k = 1; k < iv.size(); ++k) {
            if (iv[k].first > reach) idle += iv[k].first - reach;
            reach = std::max(reach, iv[k].second);
        }
        out[robot] = idle;
    }
    return out;
}

inline double total_idle(const std::map<std::string, double>& per_robot) {
    double t = 0.0;
    for (const auto& [r, v] : per_robot) t += v;
    return t;
}

namespace detail {

enum class QueueKind { Completion = 0, DelayCheck = 1, Scripted = 2, Wakeup = 3 };

struct QueuedEvent {
    double time;
    QueueKind kind;
    std::string subject;
    std::uint64_t seq;
    std::uint64_t token;

    bool operator>(const QueuedEvent& o) const {
        return std::tie(time, kind, subject, seq) > std::tie(o.time, o.kind, o.subject, o.seq);
    }
};

class Simulator {
public:
    Simulator(const ProblemInstance& inst, const Schedule& initial, const SimConfig& config, const PlanOptions& allocator,
              const FitnessProvider* rescorer)
        : config_(config), allocator_(allocator), rescorer_(rescorer), rng_(config.rng_seed), master_(inst.spec()) {
        master_.frozen.clear();
        master_.fitness = inst.fitness();
        master_.fitness_raw = false;
        current_ = inst;
        active_ = initial;
        if (auto v = check_schedule(initial, inst); !v.empty())
            throw Error(ErrorKind::InvalidValue, "initial schedule fails verification: " + v.front().message);
        for (const auto& t : master_.tasks) world_.task_states[t.id] = TaskState::Pending;
        for (const auto& r : master_.robots)
            world_.robot_states[r.id].state = r.available ? RobotState::Idle : RobotState::Failed;
        result_.plans.push_back({0.0, current_.spec(), active_});
        result_.metrics.planned_makespan = initial.makespan;
        for (std::size_t k = 0; k < config.script.size(); ++k)
            push(config.script[k].time, QueueKind::Scripted, std::to_string(k), 0);
    }

    EpisodeResult run() {
        log("episode_start", {{"tasks", master_.tasks.size()}, {"robots", master_.robots.size()}});
        log_plan("initial");
        dispatch();
        std::size_t processed = 0;
        while (!queue_.empty() && !finished_) {
            if (all_terminal()) break;
            if (++processed > config_.max_events) {
                fail("event cap reached");
                break;
            }
            const QueuedEvent ev = queue_.top();
            queue_.pop();
            world_.clock = std::max(world_.clock, ev.time);
            switch (ev.kind) {
            case QueueKind::Completion: on_completion(ev); break;
            case QueueKind::DelayCheck: break;
            case QueueKind::Scripted: on_script(std::stoul(ev.subject)); break;
            case QueueKind::Wakeup: break;
            }
            // Events sharing this instant are applied before the world is inspected.
            if (!queue_.empty() && queue_.top().time <= world_.clock && queue_.top().kind <= QueueKind::Scripted &&
                ev.kind <= QueueKind::Scripted)
                continue;
            react();
            if (!finished_) dispatch();
        }
        finish();
        return std::move(result_);
    }

private:
    // ------------------------------------------------------------ bookkeeping

    void push(double t, QueueKind k, std::string subject, std::uint64_t token) {
        queue_.push({t, k, std::move(subject), seq_++, token});
    }

    void log(const std::string& event, json fields) {
        fields["v"] = 1;
        fields["seq"] = result_.trace.size();
        fields["t"] = world_.clock;
        fields["event"] = event;
        result_.trace.push_back(fields.dump());
    }

    void log_plan(const std::string& reason) {
        json entries = json::array();
        for (const auto& e : active_.entries)
            entries.push_back({{"task", e.task_id}, {"robot", e.robot_id}, {"start", e.start}, {"end", e.end}});
        log("plan", {{"reason", reason},
                     {"makespan", active_.makespan},
                     {"objective", active_.objective},
                     {"status", active_.metadata.count("status") ? active_.metadata.at("status") : std::string("given")},
                     {"entries", std::move(entries)}});
    }

    bool all_terminal() const {
        for (const auto& [id, st] : world_.task_states)
            if (st == TaskState::Pending || st == TaskState::Running) return false;
        return true;
    }

    void fail(const std::string& cause) {
        if (finished_) return;
        finished_ = true;
        result_.metrics.failure_cause = cause;
        log("episode_abort", {{"cause", cause}});
    }

    const Task& master_task(const std::string& id) const {
        for (const auto& t : master_.tasks)
            if (t.id == id) return t;
        throw Error(ErrorKind::InvalidValue, "unknown task '" + id + "'");
    }

    std::size_t master_task_index(const std::string& id) const {
        for (std::size_t j = 0; j < master_.tasks.size(); ++j)
            if (master_.tasks[j].id == id) return j;
        throw Error(ErrorKind::InvalidValue, "unknown task '" + id + "'");
    }

    bool predecessors_done(const std::string& id) const {
        for (const auto& d : master_task(id).dependencies) {
            const auto st = world_.task_states.at(d);
            if (st != TaskState::Completed && st != TaskState::Invalidated) return false;
        }
        return true;
    }

    /// Marks the task and everything downstream of it as Failed.
    void fail_downstream(const std::string& id, const std::string& cause) {
        std::vector<std::string> stack{id};
        while (!stack.empty()) {
            const auto cur = stack.back();
            stack.pop_back();
            auto& st = world_.task_states.at(cur);
            if (st == TaskState::Failed || st == TaskState::Completed || st == TaskState::Invalidated) {
                if (cur != id) continue;
            }
            if (st == TaskState::Running) continue;
            st = TaskState::Failed;
            log("task_failed", {{"task", cur}, {"cause", cur == id ? cause : "predecessor '" + id + "' failed"}});
            for (const auto& t : master_.tasks)
                for (const auto& d : t.dependencies)
                    if (d == cur) stack.push_back(t.id);
        }
    }

    // ------------------------------------------------------------ execution

    void start_task(const std::string& task, const std::string& robot, double planned) {
        auto& run = world_.runs[task];
        run.robot = robot;
        run.start = world_.clock;
        run.planned = planned;
        ++run.attempts;
        ++run.token;
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double z = normal(rng_);
        const double u = unit(rng_);
        const double factor = config_.duration_noise > 0.0 ? std::exp(config_.duration_noise * z) : 1.0;
        run.end = run.start + planned * factor;
        attempt_fails_[task] = u < config_.failure_prob;
        world_.task_states[task] = TaskState::Running;
        world_.robot_states[robot] = {RobotState::Busy, task};
        log("start", {{"task", task}, {"robot", robot}, {"planned_duration", planned}, {"attempt", run.attempts}});
        push(run.end, QueueKind::Completion, task, run.token);
        if (!world_.delay_reported.count(task))
            push(run.start + planned * (1.0 + config_.delay_threshold), QueueKind::DelayCheck, task, run.token);
    }

    void on_completion(const QueuedEvent& ev) {
        auto it = world_.runs.find(ev.subject);
        if (it == world_.runs.end() || it->second.token != ev.token) return;
        if (world_.task_states.at(ev.subject) != TaskState::Running) return;
        auto& run = it->second;
        world_.robot_states[run.robot] = {RobotState::Idle, {}};
        if (attempt_fails_[ev.subject]) {
            log("attempt_failed", {{"task", ev.subject}, {"robot", run.robot}, {"attempt", run.attempts}});
            world_.task_states[ev.subject] = TaskState::Pending;
            if (run.attempts >= config_.max_attempts) fail_downstream(ev.subject, "attempts exhausted");
            return;
        }
        world_.task_states[ev.subject] = TaskState::Completed;
        log("complete", {{"task", ev.subject}, {"robot", run.robot}});
    }

    void on_script(std::size_t k) {
        const auto& ev = config_.script[k];
        world_.fired.push_back(ev);
        ++world_.script_cursor;
        switch (ev.kind) {
        case ScriptKind::RobotFailure: {
            auto it = world_.robot_states.find(ev.robot_id);
            if (it == world_.robot_states.end() || it->second.state == RobotState::Failed) {
                world_.fired.pop_back();
                return;
            }
            const std::string held = it->second.task;
            it->second = {RobotState::Failed, {}};
            world_.detections.push_back({world_.clock, "robot_failure", ev.robot_id});
            log("robot_failed", {{"robot", ev.robot_id}});
            if (!held.empty() && world_.task_states.at(held) == TaskState::Running) {
                world_.task_states[held] = TaskState::Pending;
                ++world_.runs[held].token;
                log("interrupted", {{"task", held}, {"robot", ev.robot_id}});
            }
            failed_since_replan_.insert(ev.robot_id);
            break;
        }
        case ScriptKind::Contradiction: {
            auto it = world_.task_states.find(ev.task_id);
            if (it == world_.task_states.end() || it->second == TaskState::Completed ||
                it->second == TaskState::Invalidated || it->second == TaskState::Failed) {
                world_.fired.pop_back();
                return;
            }
            if (it->second == TaskState::Running) {
                const auto& run = world_.runs[ev.task_id];
                world_.robot_states[run.robot] = {RobotState::Idle, {}};
                ++world_.runs[ev.task_id].token;
                log("interrupted", {{"task", ev.task_id}, {"robot", run.robot}});
            }
            it->second = TaskState::Invalidated;
            world_.detections.push_back({world_.clock, "contradiction", ev.task_id});
            log("invalidated", {{"task", ev.task_id}});
            break;
        }
        case ScriptKind::Discovery: {
            if (!ev.task || world_.task_states.count(ev.task->id)) {
                world_.fired.pop_back();
                log("discovery_ignored", {{"task", ev.task ? ev.task->id : std::string{}}});
                return;
            }
            Task t = *ev.task;
            master_.tasks.push_back(t);
            const std::size_t n = master_.robots.size();
            const std::size_t m = master_.tasks.size();
            Grid<double> f(n, m, 1.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j + 1 < m; ++j) f(i, j) = (*master_.fitness)(i, j);
            master_.fitness = f;
            if (master_.cost_params.travel) {
                Grid<double> tr(n, m, 0.0);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j + 1 < m; ++j) tr(i, j) = (*master_.cost_params.travel)(i, j);
                master_.cost_params.travel = tr;
            }
            world_.task_states[t.id] = TaskState::Pending;
            world_.detections.push_back({world_.clock, "discovery", t.id});
            discovered_since_replan_.insert(t.id);
            log("discovery", {{"task", t.id}, {"task_spec", task_to_json(t)}});
            break;
        }
        }
    }

    /// Starts every robot whose next planned task is ready; schedules wakeups
    /// for planned starts in the future.
    void dispatch() {
        std::map<std::string, std::vector<const ScheduleEntry*>> queues;
        for (const auto& e : active_.entries) {
            auto st = world_.task_states.find(e.task_id);
            if (st != world_.task_states.end() && st->second == TaskState::Pending) queues[e.robot_id].push_back(&e);
        }
        for (auto& [robot, list] : queues) {
            auto rs = world_.robot_states.find(robot);
            if (rs == world_.robot_states.end() || rs->second.state != RobotState::Idle) continue;
            std::sort(list.begin(), list.end(), [](const ScheduleEntry* a, const ScheduleEntry* b) {
                return a->start != b->start ? a->start < b->start : a->task_id < b->task_id;
            });
            const ScheduleEntry& next = *list.front();
            if (next.start > world_.clock + kTimeTol) {
                push(next.start, QueueKind::Wakeup, robot, 0);
                continue;
            }
            if (!predecessors_done(next.task_id)) continue;
            start_task(next.task_id, robot, next.end - next.start);
        }
    }

    // ------------------------------------------------------------ replanning

    void react() {
        auto triggers = detect_triggers(world_, active_, config_);
        bool replan_needed = false;
        for (const auto& t : triggers) {
            ++result_.metrics.trigger_counts[std::string(to_string(t.kind))];
            log("trigger", {{"kind", std::string(to_string(t.kind))}, {"subjects", t.subjects}});
            if (t.kind != TriggerKind::Completion || config_.replan_on_completion) replan_needed = true;
        }
        if (replan_needed && !all_terminal()) replan();
    }

    /// The instance as seen now: finished and running work frozen, pending
    /// work released no earlier than the clock, dropped tasks removed.
    InstanceSpec replan_spec() const {
        InstanceSpec spec;
        spec.robots = master_.robots;
        for (auto& r : spec.robots) r.available = world_.robot_states.at(r.id).state != RobotState::Failed;
        spec.cost_params = master_.cost_params;
        spec.weights = master_.weights;
        const std::size_t n = master_.robots.size();
        std::vector<std::size_t> keep;
        std::set<std::string> dropped;
        for (std::size_t j = 0; j < master_.tasks.size(); ++j) {
            const auto st = world_.task_states.at(master_.tasks[j].id);
            if (st == TaskState::Invalidated || st == TaskState::Failed) dropped.insert(master_.tasks[j].id);
            else keep.push_back(j);
        }
        Grid<double> fit(n, keep.size());
        std::optional<Grid<double>> travel;
        if (master_.cost_params.travel) travel = Grid<double>(n, keep.size());
        const bool duration_mode = master_.cost_params.travel_mode == TravelMode::Duration;
        for (std::size_t c = 0; c < keep.size(); ++c) {
            const std::size_t j = keep[c];
            Task t = master_.tasks[j];
            std::vector<std::string> deps;
            for (const auto& d : t.dependencies)
                if (!dropped.count(d)) deps.push_back(d);
            t.dependencies = deps;
            for (std::size_t i = 0; i < n; ++i) {
                fit(i, c) = (*master_.fitness)(i, j);
                if (travel) (*travel)(i, c) = (*master_.cost_params.travel)(i, j);
            }
            const auto st = world_.task_states.at(t.id);
            if (st == TaskState::Completed || st == TaskState::Running) {
                const auto& run = world_.runs.at(t.id);
                const double dur = st == TaskState::Completed
                                       ? run.end - run.start
                                       : std::max(run.planned, world_.clock - run.start);
                t.duration = dur;
                t.time_window.reset();
                if (travel && duration_mode)
                    for (std::size_t i = 0; i < n; ++i) (*travel)(i, c) = 0.0;
                spec.frozen.push_back({t.id, run.robot, run.start});
            } else {
                TimeWindow w = t.time_window.value_or(TimeWindow{});
                w.release = std::max(w.release, world_.clock);
                t.time_window = w;
            }
            spec.tasks.push_back(std::move(t));
        }
        spec.fitness = fit;
        spec.cost_params.travel = travel;
        return spec;
    }

    void rescore_impacted() {
        std::set<std::string> impacted = discovered_since_replan_;
        for (const auto& e : active_.entries)
            if (failed_since_replan_.count(e.robot_id) && world_.task_states.at(e.task_id) == TaskState::Pending)
                impacted.insert(e.task_id);
        for (const auto& [id, run] : world_.runs)
            if (failed_since_replan_.count(run.robot) && world_.task_states.at(id) == TaskState::Pending)
                impacted.insert(id);
        discovered_since_replan_.clear();
        failed_since_replan_.clear();
        if (impacted.empty() || !rescorer_) return;
        std::vector<Task> tasks;
        std::vector<std::size_t> cols;
        for (const auto& id : impacted) {
            cols.push_back(master_task_index(id));
            tasks.push_back(master_.tasks[cols.back()]);
        }
        auto scored = rescorer_->score(master_.robots, tasks);
        auto norm = normalize_fitness(scored.raw);
        for (std::size_t c = 0; c < cols.size(); ++c)
            for (std::size_t i = 0; i < master_.robots.size(); ++i) (*master_.fitness)(i, cols[c]) = norm(i, c);
        json ids = json::array();
        for (const auto& id : impacted) ids.push_back(id);
        log("rescore", {{"tasks", ids}, {"degraded", scored.metadata.count("degraded") > 0}});
    }

    void replan() {
        rescore_impacted();
        ++result_.metrics.replan_count;
        try {
            auto spec = replan_spec();
            auto inst = validate_instance(spec);
            PlanOptions opts = allocator_;
            opts.solve = warm_start(inst, active_, allocator_.solve);
            auto outcome = plan(inst, opts);
            if (auto v = check_schedule(outcome.schedule, inst); !v.empty())
                throw Error(ErrorKind::ReplanInfeasible, "replanned schedule fails verification: " + v.front().message);
            current_ = std::move(inst);
            active_ = std::move(outcome.schedule);
            result_.plans.push_back({world_.clock, current_.spec(), active_});
            log_plan("replan");
        } catch (const Error& e) {
            log("replan_failed", {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}});
            fail(std::string("ReplanInfeasible: ") + e.what());
        }
    }

    void finish() {
        auto& m = result_.metrics;
        if (!finished_ && !all_terminal()) m.failure_cause = "stalled: pending tasks cannot start";
        bool ok = m.failure_cause.empty();
        for (const auto& [id, st] : world_.task_states)
            if (st != TaskState::Completed && st != TaskState::Invalidated) ok = false;
        if (ok) m.failure_cause.clear();
        else if (m.failure_cause.empty()) m.failure_cause = "tasks failed";
        m.success = ok;
        Schedule realized;
        for (const auto& t : master_.tasks) {
            if (world_.task_states.at(t.id) != TaskState::Completed) continue;
            const auto& run = world_.runs.at(t.id);
            realized.entries.push_back({t.id, run.robot, run.start, run.end, {}});
            m.realized_makespan = std::max(m.realized_makespan, run.end);
        }
        std::sort(realized.entries.begin(), realized.entries.end(), [](const auto& a, const auto& b) {
            return std::tie(a.start, a.robot_id, a.task_id) < std::tie(b.start, b.robot_id, b.task_id);
        });
        realized.makespan = m.realized_makespan;
        for (const auto& e : realized.entries) {
            auto& c = realized.per_robot_completion[e.robot_id];
            c = std::max(c, e.end);
        }
        m.total_idle_time = total_idle(idle_time(result_.trace));
        json counts = json::object();
        for (const auto& [k, v] : m.trigger_counts) counts[k] = v;
        log("episode_end", {{"success", m.success},
                            {"realized_makespan", m.realized_makespan},
                            {"idle_total", m.total_idle_time},
                            {"replans", m.replan_count},
                            {"triggers", counts},
                            {"cause", m.failure_cause}});
        result_.realized = std::move(realized);
        result_.world = world_;
    }

    SimConfig config_;
    PlanOptions allocator_;
    const FitnessProvider* rescorer_;
    std::mt19937_64 rng_;
    InstanceSpec master_;
    ProblemInstance current_;
    Schedule active_;
    WorldModel world_;
    EpisodeResult result_;
    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue_;
    std::uint64_t seq_ = 0;
    bool finished_ = false;
    std::map<std::string, bool> attempt_fails_;
    std::set<std::string> discovered_since_replan_;
    std::set<std::string> failed_since_replan_;
};

} // namespace detail

/// Executes a schedule under perturbations and scripted events, replanning
/// with the same allocator on each trigger.
inline EpisodeResult run_episode(const ProblemInstance& inst, const Schedule& initial, const SimConfig& config,
                                 const PlanOptions& allocator, const FitnessProvider* rescorer = nullptr) {
    if (!(config.delay_threshold > 0.0)) throw Error(ErrorKind::InvalidValue, "delay_threshold must be positive");
    if (config.failure_prob < 0.0 || config.failure_prob > 1.0)
        throw Error(ErrorKind::InvalidValue, "failure_prob must lie in [0,1]");
    if (config.duration_noise < 0.0) throw Error(ErrorKind::InvalidValue, "duration_noise must be nonnegative");
    if (config.max_attempts == 0) throw Error(ErrorKind::InvalidValue, "max_attempts must be positive");
    return detail::Simulator(inst, initial, config, allocator, rescorer).run();
}

// ---------------------------------------------------------------- scenario files

inline ScriptedEvent scripted_event_from_json(const json& j) {
    ScriptedEvent ev;
    ev.time = j.at("time").get<double>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "robot_failure") {
        ev.kind = ScriptKind::RobotFailure;
        ev.robot_id = j.at("robot_id").get<std::string>();
    } else if (kind == "contradiction") {
        ev.kind = ScriptKind::Contradiction;
        ev.task_id = j.at("task_id").get<std::string>();
    } else if (kind == "discovery") {
        ev.kind = ScriptKind::Discovery;
        ev.task = task_from_json(j.at("task"));
    } else {
        throw Error(ErrorKind::ParseError, "unknown scripted event kind '" + kind + "'");
    }
    if (!(ev.time >= 0.0)) throw Error(ErrorKind::ParseError, "scripted event time must be nonnegative");
    return ev;
}

inline json scripted_event_to_json(const ScriptedEvent& ev) {
    json j = {{"time", ev.time}};
    switch (ev.kind) {
    case ScriptKind::RobotFailure:
        j["kind"] = "robot_failure";
        j["robot_id"] = ev.robot_id;
        break;
    case ScriptKind::Contradiction:
        j["kind"] = "contradiction";
        j["task_id"] = ev.task_id;
        break;
    case ScriptKind::Discovery:
        j["kind"] = "discovery";
        j["task"] = task_to_json(*ev.task);
        break;
    }
    return j;
}

inline SimConfig sim_config_from_json(const json& j) {
    SimConfig c;
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.duration_noise = j.value("duration_noise", c.duration_noise);
    c.delay_threshold = j.value("delay_threshold", c.delay_threshold);
    c.failure_prob = j.value("failure_prob", c.failure_prob);
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.replan_on_completion = j.value("replan_on_completion", c.replan_on_completion);
    c.max_events = j.value("max_events", c.max_events);
    return c;
}

inline json sim_config_to_json(const SimConfig& c) {
    return {{"rng_seed", c.rng_seed},
            {"duration_noise", c.duration_noise},
            {"delay_threshold", c.delay_threshold},
            {"failure_prob", c.failure_prob},
            {"max_attempts", c.max_attempts},
            {"replan_on_completion", c.replan_on_completion},
            {"max_events", c.max_events}};
}

/// A scenario file: {"instance": <object or path>, "schedule": optional,
/// "sim_config": {...}, "events": [...], "fitness_rules": optional}.
struct Scenario {
    InstanceSpec instance;
    std::optional<Schedule> schedule;
    SimConfig config;
    std::vector<FitnessRule> fitness_rules;
};

inline Scenario scenario_from_json(const json& j, const std::string& base_dir = ".") {
    try {
        Scenario s;
        const auto& inst = j.at("instance");
        if (inst.is_string()) {
            std::string path = inst.get<std::string>();
            if (!path.empty() && path.front() != '/') path = base_dir + "/" + path;
            s.instance = instance_spec_from_json(read_json_file(path));
        } else {
            s.instance = instance_spec_from_json(inst);
        }
        if (j.contains("schedule") && !j.at("schedule").is_null()) s.schedule = schedule_from_json(j.at("schedule"));
        if (j.contains("sim_config")) s.config = sim_config_from_json(j.at("sim_config"));
        if (j.contains("events"))
            for (const auto& e : j.at("events")) s.config.script.push_back(scripted_event_from_json(e));
        if (j.contains("fitness_rules")) s.fitness_rules = fitness_rules_from_json(j.at("fitness_rules"));
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("scenario JSON: ") + e.what());
    }
}

} // namespace mrsched
