#pragma once

// Exhaustive reference for small instances: every assignment, every per-robot
// task order, start times by repeated relaxation of the precedence and
// sequence arcs. Shares no search code with the branch and bound.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "mrsched/schedule.hpp"

namespace oracle {

struct BruteForceResult {
    double objective = mrsched::kInfinity;
    std::size_t leaves = 0;
};

// Returns start times, or nullopt when the arcs contain a cycle or a window fails.
inline std::optional<std::vector<double>> label_starts(const mrsched::ProblemInstance& inst,
                                                       const std::vector<std::size_t>& robot_of,
                                                       const std::vector<std::vector<std::size_t>>& seqs) {
    const std::size_t m = inst.num_tasks();
    std::vector<std::pair<std::size_t, std::size_t>> arcs(inst.edges().begin(), inst.edges().end());
    for (const auto& sq : seqs)
        for (std::size_t k = 1; k < sq.size(); ++k) arcs.emplace_back(sq[k - 1], sq[k]);
    std::vector<double> s(m);
    for (std::size_t j = 0; j < m; ++j) {
        s[j] = inst.release(j);
        if (const auto& fz = inst.frozen(j)) s[j] = std::max(s[j], fz->second);
    }
    // Longest paths in a DAG settle within m rounds; a change in round m+1 means a cycle.
    for (std::size_t round = 0; round <= m + 1; ++round) {
        bool changed = false;
        for (const auto& [a, b] : arcs) {
            const double cand = s[a] + inst.duration(robot_of[a], a);
            if (cand > s[b] + 1e-12) {
                s[b] = cand;
                changed = true;
            }
        }
        if (!changed) break;
        if (round == m + 1) return std::nullopt;
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (s[j] + inst.duration(robot_of[j], j) > inst.deadline(j) + mrsched::kTimeTol) return std::nullopt;
        if (const auto& fz = inst.frozen(j); fz && std::abs(s[j] - fz->second) > mrsched::kTimeTol) return std::nullopt;
    }
    return s;
}

inline BruteForceResult brute_force(const mrsched::ProblemInstance& inst) {
    const std::size_t n = inst.num_robots();
    const std::size_t m = inst.num_tasks();
    BruteForceResult best;
    std::vector<std::size_t> robot_of(m, 0);

    auto feasible = [&](std::size_t i, std::size_t j) {
        if (const auto& fz = inst.frozen(j)) return fz->first == i;
        return inst.feasible(i, j);
    };

    auto evaluate_orders = [&]() {
        std::vector<std::vector<std::size_t>> seqs(n);
        for (std::size_t j = 0; j < m; ++j) seqs[robot_of[j]].push_back(j);
        // Enumerate the cartesian product of permutations per robot.
        std::function<void(std::size_t)> rec = [&](std::size_t i) {
            if (i == n) {
                auto s = label_starts(inst, robot_of, seqs);
                if (!s) return;
                ++best.leaves;
                mrsched::Schedule sch;
                for (std::size_t j = 0; j < m; ++j)
                    sch.entries.push_back({inst.task(j).id, inst.robot(robot_of[j]).id, (*s)[j],
                                           (*s)[j] + inst.duration(robot_of[j], j), {}});
                best.objective = std::min(best.objective, mrsched::objective_value(sch, inst));
                return;
            }
            std::sort(seqs[i].begin(), seqs[i].end());
            do {
                rec(i + 1);
            } while (std::next_permutation(seqs[i].begin(), seqs[i].end()));
        };
        rec(0);
    };

    std::function<void(std::size_t)> assign = [&](std::size_t j) {
        if (j == m) {
            evaluate_orders();
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!feasible(i, j)) continue;
            robot_of[j] = i;
            assign(j + 1);
        }
    };
    assign(0);
    return best;
}

/// Optimal total c_ij over perfect matchings of an n x n cost matrix.
inline double optimal_assignment_cost(const mrsched::Grid<double>& cost) {
    const std::size_t n = cost.rows();
    std::vector<std::size_t> perm(n);
    for (std::size_t k = 0; k < n; ++k) perm[k] = k;
    double best = mrsched::kInfinity;
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += cost(i, perm[i]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace oracle
