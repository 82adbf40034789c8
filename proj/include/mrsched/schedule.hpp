#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "mrsched/core.hpp"

namespace mrsched {

struct ScheduleEntry {
    std::string task_id;
    std::string robot_id;
    double start = 0.0;
    double end = 0.0;
    std::map<std::string, std::string> metadata;

    friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

/// The common output of every allocator.
struct Schedule {
    std::vector<ScheduleEntry> entries;
    double makespan = 0.0;
    std::map<std::string, double> per_robot_completion;
    double objective = 0.0;
    std::map<std::string, std::string> metadata;

    friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// Sum of c_ij over the assignments in the schedule; unknown ids are skipped.
inline double assignment_cost_total(const Schedule& schedule, const ProblemInstance& inst) {
    double total = 0.0;
    for (const auto& e : schedule.entries) {
        auto i = inst.robot_index(e.robot_id);
        auto j = inst.task_index(e.task_id);
        if (i && j) total += inst.cost(*i, *j);
    }
    return total;
}

/// alpha C_max + beta sum_i C_i + lambda sum c_ij, recomputed from the entries.
inline double objective_value(const Schedule& schedule, const ProblemInstance& inst) {
    std::vector<int> count(inst.num_tasks(), 0);
    std::vector<double> completion(inst.num_robots(), 0.0);
    double makespan = 0.0;
    double cost = 0.0;
    for (const auto& e : schedule.entries) {
        auto j = inst.task_index(e.task_id);
        auto i = inst.robot_index(e.robot_id);
        if (!j) throw Error(ErrorKind::InvalidValue, "schedule references unknown task '" + e.task_id + "'");
        if (!i) throw Error(ErrorKind::InvalidValue, "schedule references unknown robot '" + e.robot_id + "'");
        if (++count[*j] > 1) throw Error(ErrorKind::DoubleAssignment, "task '" + e.task_id + "' assigned twice");
        makespan = std::max(makespan, e.end);
        completion[*i] = std::max(completion[*i], e.end);
        cost += inst.cost(*i, *j);
    }
    for (std::size_t j = 0; j < inst.num_tasks(); ++j)
        if (count[j] == 0) throw Error(ErrorKind::UnassignedTask, "task '" + inst.task(j).id + "' is unassigned");
    double sum_c = 0.0;
    for (double c : completion) sum_c += c;
    const auto& w = inst.weights();
    return w.alpha * makespan + w.beta * sum_c + w.lambda * cost;
}

/// Fills makespan, per-robot completion and objective from the entries.
inline Schedule finalize_schedule(Schedule schedule, const ProblemInstance& inst) {
    std::sort(schedule.entries.begin(), schedule.entries.end(), [](const auto& a, const auto& b) {
        if (a.start != b.start) return a.start < b.start;
        if (a.robot_id != b.robot_id) return a.robot_id < b.robot_id;
        return a.task_id < b.task_id;
    });
    schedule.makespan = 0.0;
    schedule.per_robot_completion.clear();
    for (const auto& r : inst.robots()) schedule.per_robot_completion[r.id] = 0.0;
    for (const auto& e : schedule.entries) {
        schedule.makespan = std::max(schedule.makespan, e.end);
        auto& c = schedule.per_robot_completion[e.robot_id];
        c = std::max(c, e.end);
    }
    schedule.objective = objective_value(schedule, inst);
    return schedule;
}

/// Builds a schedule from per-task robot indices and start times.
inline Schedule schedule_from_assignment(const ProblemInstance& inst, const std::vector<std::size_t>& robot_of,
                                         const std::vector<double>& start, const std::string& allocator) {
    Schedule s;
    s.entries.reserve(inst.num_tasks());
    for (std::size_t j = 0; j < inst.num_tasks(); ++j) {
        ScheduleEntry e;
        e.task_id = inst.task(j).id;
        e.robot_id = inst.robot(robot_of[j]).id;
        e.start = start[j];
        e.end = start[j] + inst.duration(robot_of[j], j);
        e.metadata["allocator"] = allocator;
        if (inst.frozen(j)) e.metadata["frozen"] = "true";
        s.entries.push_back(std::move(e));
    }
    s.metadata["allocator"] = allocator;
    return finalize_schedule(std::move(s), inst);
}

} // namespace mrsched
