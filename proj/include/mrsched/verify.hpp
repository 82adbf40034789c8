#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "mrsched/schedule.hpp"

namespace mrsched {

enum class ConstraintFamily {
    Assignment,   // each task exactly once
    Feasibility,  // capability mask
    Precedence,   // s_j >= s_k + d_k
    Overlap,      // no two tasks overlap on one robot
    Completion,   // finish times, C_i and C_max consistent with s_j + d_j
    TimeWindow,   // release / deadline, and s_j >= 0
    Frozen,       // frozen work keeps its robot and start
};

constexpr std::string_view to_string(ConstraintFamily f) {
    switch (f) {
    case ConstraintFamily::Assignment: return "Assignment";
    case ConstraintFamily::Feasibility: return "Feasibility";
    case ConstraintFamily::Precedence: return "Precedence";
    case ConstraintFamily::Overlap: return "Overlap";
    case ConstraintFamily::Completion: return "Completion";
    case ConstraintFamily::TimeWindow: return "TimeWindow";
    case ConstraintFamily::Frozen: return "Frozen";
    }
    return "Unknown";
}

struct Violation {
    ConstraintFamily family;
    std::vector<std::string> ids;
    double slack = 0.0;
    std::string message;
};

/// Checks a candidate schedule against every constraint of the model.
/// Accepts arbitrary input; problems are reported, never thrown.
inline std::vector<Violation> check_schedule(const Schedule& schedule, const ProblemInstance& inst) {
    std::vector<Violation> out;
    const std::size_t m = inst.num_tasks();
    const std::size_t n = inst.num_robots();

    struct Placed {
        std::size_t entry;
        std::size_t robot;
        double start;
        double finish;
    };
    std::vector<int> count(m, 0);
    std::vector<std::optional<Placed>> placed(m);

    for (std::size_t k = 0; k < schedule.entries.size(); ++k) {
        const auto& e = schedule.entries[k];
        auto j = inst.task_index(e.task_id);
        if (!j) {
            out.push_back({ConstraintFamily::Assignment, {e.task_id}, -1.0, "unknown task '" + e.task_id + "'"});
            continue;
        }
        ++count[*j];
        auto i = inst.robot_index(e.robot_id);
        if (!i) {
            out.push_back({ConstraintFamily::Feasibility, {e.task_id, e.robot_id}, -1.0,
                           "task '" + e.task_id + "' assigned to unknown robot '" + e.robot_id + "'"});
            continue;
        }
        placed[*j] = Placed{k, *i, e.start, e.start + inst.duration(*i, *j)};
    }

    for (std::size_t j = 0; j < m; ++j) {
        const auto& id = inst.task(j).id;
        if (count[j] == 0)
            out.push_back({ConstraintFamily::Assignment, {id}, -1.0, "task '" + id + "' is not assigned"});
        else if (count[j] > 1)
            out.push_back({ConstraintFamily::Assignment, {id}, 1.0 - count[j],
                           "task '" + id + "' assigned " + std::to_string(count[j]) + " times"});
    }

    // Only tasks placed exactly once on a known robot take part in the pairwise checks.
    auto unique = [&](std::size_t j) -> const Placed* {
        return count[j] == 1 && placed[j] ? &*placed[j] : nullptr;
    };

    for (std::size_t j = 0; j < m; ++j) {
        const Placed* p = unique(j);
        if (!p) continue;
        const auto& task = inst.task(j);
        const auto& robot = inst.robot(p->robot);
        const auto& entry = schedule.entries[p->entry];
        if (const auto& fz = inst.frozen(j)) {
            if (fz->first != p->robot || std::abs(fz->second - p->start) > kTimeTol)
                out.push_back({ConstraintFamily::Frozen, {task.id, robot.id}, -std::abs(fz->second - p->start),
                               "frozen task '" + task.id + "' moved"});
        } else if (!inst.feasible(p->robot, j)) {
            out.push_back({ConstraintFamily::Feasibility, {task.id, robot.id}, -1.0,
                           "robot '" + robot.id + "' cannot perform task '" + task.id + "'"});
        }
        if (std::abs(entry.end - p->finish) > kTimeTol)
            out.push_back({ConstraintFamily::Completion, {task.id}, p->finish - entry.end,
                           "task '" + task.id + "' end does not equal start + duration"});
        if (p->start < inst.release(j) - kTimeTol || p->start < -kTimeTol)
            out.push_back({ConstraintFamily::TimeWindow, {task.id}, p->start - std::max(0.0, inst.release(j)),
                           "task '" + task.id + "' starts before its release"});
        if (p->finish > inst.deadline(j) + kTimeTol)
            out.push_back({ConstraintFamily::TimeWindow, {task.id}, inst.deadline(j) - p->finish,
                           "task '" + task.id + "' finishes after its deadline"});
    }

    for (const auto& [k, j] : inst.edges()) {
        const Placed* pk = unique(k);
        const Placed* pj = unique(j);
        if (!pk || !pj) continue;
        const double slack = pj->start - pk->finish;
        if (slack < -kTimeTol)
            out.push_back({ConstraintFamily::Precedence, {inst.task(k).id, inst.task(j).id}, slack,
                           "task '" + inst.task(j).id + "' starts before predecessor '" + inst.task(k).id +
                               "' finishes"});
    }

    std::vector<std::vector<std::size_t>> on_robot(n);
    for (std::size_t j = 0; j < m; ++j)
        if (const Placed* p = unique(j)) on_robot[p->robot].push_back(j);
    for (std::size_t i = 0; i < n; ++i) {
        auto& list = on_robot[i];
        std::sort(list.begin(), list.end(), [&](auto a, auto b) {
            return placed[a]->start != placed[b]->start ? placed[a]->start < placed[b]->start : a < b;
        });
        for (std::size_t a = 0; a < list.size(); ++a) {
            for (std::size_t b = a + 1; b < list.size(); ++b) {
                const auto& pa = *placed[list[a]];
                const auto& pb = *placed[list[b]];
                if (pb.start >= pa.finish) break;
                const double overlap = std::min(pa.finish, pb.finish) - std::max(pa.start, pb.start);
                if (overlap > kTimeTol)
                    out.push_back({ConstraintFamily::Overlap,
                                   {inst.task(list[a]).id, inst.task(list[b]).id, inst.robot(i).id}, -overlap,
                                   "tasks '" + inst.task(list[a]).id + "' and '" + inst.task(list[b]).id +
                                       "' overlap on robot '" + inst.robot(i).id + "'"});
            }
        }
    }

    // Cached C_i and C_max against finish times recomputed from s_j + d_j.
    std::vector<double> completion(n, 0.0);
    double makespan = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        if (const Placed* p = unique(j)) {
            completion[p->robot] = std::max(completion[p->robot], p->finish);
            makespan = std::max(makespan, p->finish);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& id = inst.robot(i).id;
        auto it = schedule.per_robot_completion.find(id);
        const double cached = it == schedule.per_robot_completion.end() ? 0.0 : it->second;
        if (std::abs(cached - completion[i]) > kTimeTol)
            out.push_back({ConstraintFamily::Completion, {id}, completion[i] - cached,
                           "completion time of robot '" + id + "' is inconsistent"});
    }
    if (std::abs(schedule.makespan - makespan) > kTimeTol)
        out.push_back({ConstraintFamily::Completion, {}, makespan - schedule.makespan, "makespan is inconsistent"});

    return out;
}

} // namespace mrsched
