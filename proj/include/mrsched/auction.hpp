#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mrsched/schedule.hpp"

namespace mrsched {

struct AuctionConfig {
    /// Bid increment floor, relative to the largest entry of the cost matrix.
    double epsilon = 0.01;
    std::uint64_t max_rounds = 1'000'000;
};

struct TaskPrice {
    std::string task_id;
    double price = 0.0;
};

/// Auction outcome with the final prices of the last epoch that priced each task.
struct AuctionResult {
    Schedule schedule;
    std::vector<TaskPrice> prices;
    std::uint64_t rounds = 0;
};

namespace detail {

/// Busy intervals of one robot, kept sorted by start.
class Timeline {
public:
    /// Earliest start >= ready where [start, start + d) fits between booked intervals.
    double earliest_fit(double ready, double d) const {
        double s = ready;
        for (const auto& [a, b] : busy_) {
            if (s + d <= a + kTimeTol) break;
            s = std::max(s, b);
        }
        return s;
    }

    void book(double start, double end) {
        auto it = std::lower_bound(busy_.begin(), busy_.end(), std::make_pair(start, end));
        busy_.insert(it, {start, end});
    }

    /// Whether the robot has nothing booked at or after time t.
    bool free_from(double t) const { return busy_.empty() || busy_.back().second <= t + kTimeTol; }

    /// End of the booking that covers t, or t when the robot is free at t.
    double release_after(double t) const {
        for (const auto& [a, b] : busy_)
            if (a <= t + kTimeTol && t < b - kTimeTol) return b;
        return t;
    }

    bool empty() const noexcept { return busy_.empty(); }

private:
    std::vector<std::pair<double, double>> busy_;
};

/// Frozen tasks booked up front; returns per-task robot and start, with
/// unassigned tasks marked by robot == n.
struct Placement {
    std::vector<std::size_t> robot_of;
    std::vector<double> start;
    std::vector<double> end;
    std::vector<char> placed;
    std::vector<Timeline> lines;

    explicit Placement(const ProblemInstance& inst)
        : robot_of(inst.num_tasks(), inst.num_robots()),
          start(inst.num_tasks(), 0.0),
          end(inst.num_tasks(), 0.0),
          placed(inst.num_tasks(), 0),
          lines(inst.num_robots()) {
        for (std::size_t j = 0; j < inst.num_tasks(); ++j) {
            if (const auto& fz = inst.frozen(j)) place(inst, j, fz->first, fz->second);
        }
    }

    void place(const ProblemInstance& inst, std::size_t j, std::size_t i, double s) {
        robot_of[j] = i;
        start[j] = s;
        end[j] = s + inst.duration(i, j);
        placed[j] = 1;
        lines[i].book(s, end[j]);
    }

    /// Earliest time every predecessor of j has finished, or nullopt if one is unplaced.
    std::optional<double> ready_time(const ProblemInstance& inst, std::size_t j) const {
        double t = inst.release(j);
        for (auto k : inst.predecessors(j)) {
            if (!placed[k]) return std::nullopt;
            t = std::max(t, end[k]);
        }
        return t;
    }
};

inline double max_cost(const ProblemInstance& inst) {
    double hi = 0.0;
    for (double c : inst.costs().data()) hi = std::max(hi, c);
    return hi;
}

} // namespace detail

/// List scheduling in topological order: each task goes to the feasible robot
/// that finishes it earliest, ties to the lower robot index. Fitness is ignored.
inline Schedule greedy_allocate(const ProblemInstance& inst) {
    detail::Placement p(inst);
    for (std::size_t j : inst.topological_order()) {
        if (p.placed[j]) continue;
        const double ready = *p.ready_time(inst, j);
        std::size_t best = inst.num_robots();
        double best_start = 0.0;
        double best_finish = kInfinity;
        for (std::size_t i = 0; i < inst.num_robots(); ++i) {
            if (!inst.feasible(i, j)) continue;
            const double d = inst.duration(i, j);
            const double s = p.lines[i].earliest_fit(ready, d);
            if (s + d > inst.deadline(j) + kTimeTol) continue;
            if (s + d < best_finish - kTimeTol) {
                best = i;
                best_start = s;
                best_finish = s + d;
            }
        }
        if (best == inst.num_robots())
            throw Error(ErrorKind::Infeasible, "greedy: no robot can finish task '" + inst.task(j).id + "' in time");
        p.place(inst, j, best, best_start);
    }
    return schedule_from_assignment(inst, p.robot_of, p.start, "greedy");
}

namespace detail {

/// One epsilon-auction between idle robots and ready tasks. value(a, b) is the
/// benefit of pairing robot a with task b (-inf when the pair is not allowed).
/// The smaller side bids, so every member of it ends up matched when it has an
/// allowed partner. Returns pairs (robot slot, task slot).
template <typename Value, typename TieKey>
std::vector<std::pair<std::size_t, std::size_t>> epsilon_auction(std::size_t robots, std::size_t tasks,
                                                                 const Value& value, const TieKey& tie, double eps,
                                                                 std::uint64_t& rounds, std::uint64_t max_rounds,
                                                                 std::vector<double>* task_prices) {
    const bool forward = robots <= tasks;  // robots bid for tasks
    const std::size_t bidders = forward ? robots : tasks;
    const std::size_t objects = forward ? tasks : robots;
    auto val = [&](std::size_t b, std::size_t o) { return forward ? value(b, o) : value(o, b); };
    auto key = [&](std::size_t b, std::size_t o) { return forward ? tie(b, o) : tie(o, b); };
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

    std::vector<double> price(objects, 0.0);
    std::vector<std::size_t> owner(objects, none);
    std::vector<std::size_t> holds(bidders, none);
    std::vector<char> hopeless(bidders, 0);
    // Waiting for the next decision time is a dummy option with a fixed value
    // below every real one; it ends bidding wars over a single contested task.
    double wait = kInfinity;
    for (std::size_t b = 0; b < bidders; ++b)
        for (std::size_t o = 0; o < objects; ++o)
            if (const double v = val(b, o); v != -kInfinity) wait = std::min(wait, v);
    wait = wait == kInfinity ? 0.0 : wait - 1.0;

    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t b = 0; b < bidders; ++b) {
            if (holds[b] != none || hopeless[b]) continue;
            if (++rounds > max_rounds) throw Error(ErrorKind::RoundLimit, "auction exceeded its round limit");
            std::size_t best = none;
            double best_net = -kInfinity;
            double second_net = -kInfinity;
            for (std::size_t o = 0; o < objects; ++o) {
                const double v = val(b, o);
                if (v == -kInfinity) continue;
                const double net = v - price[o];
                if (best == none || net > best_net + 1e-12 ||
                    (net >= best_net - 1e-12 && key(b, o) < key(b, best))) {
                    if (best != none) second_net = std::max(second_net, best_net);
                    best = o;
                    best_net = net;
                } else {
                    second_net = std::max(second_net, net);
                }
            }
            if (best == none || best_net < wait) {
                hopeless[b] = 1;
                continue;
            }
            const double increment = best_net - std::max(second_net, wait) + eps;
            price[best] += increment;
            if (owner[best] != none) holds[owner[best]] = none;
            owner[best] = b;
            holds[b] = best;
            progress = true;
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t b = 0; b < bidders; ++b) {
        if (holds[b] == none) continue;
        out.emplace_back(forward ? b : holds[b], forward ? holds[b] : b);
    }
    if (task_prices) {
        task_prices->assign(tasks, 0.0);
        if (forward) {
            for (std::size_t o = 0; o < objects; ++o) (*task_prices)[o] = price[o];
        } else {
            // Tasks bid for robots; a task's price is what it paid for its robot.
            for (std::size_t b = 0; b < bidders; ++b)
                if (holds[b] != none) (*task_prices)[b] = price[holds[b]];
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace detail

/// Event-driven epsilon-auction. At each decision time the idle robots and the
/// ready tasks (predecessors finished, release reached) run one auction on
/// value -(c_ij) - alpha * finish_ij; winners start at the earliest free slot.
/// Prices start from zero at every decision time.
inline AuctionResult auction_allocate_detailed(const ProblemInstance& inst, const AuctionConfig& config = {}) {
    if (!(config.epsilon > 0.0)) throw Error(ErrorKind::InvalidValue, "auction epsilon must be positive");
    const std::size_t n = inst.num_robots();
    const std::size_t m = inst.num_tasks();
    const double eps = config.epsilon * std::max(detail::max_cost(inst), 1e-12);
    const double alpha = inst.weights().alpha;

    AuctionResult result;
    result.prices.resize(m);
    for (std::size_t j = 0; j < m; ++j) result.prices[j].task_id = inst.task(j).id;

    detail::Placement p(inst);
    std::vector<double> robot_free(n, 0.0);  // end of the last auctioned task per robot
    std::size_t remaining = 0;
    for (std::size_t j = 0; j < m; ++j) {
        if (p.placed[j]) continue;
        ++remaining;
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) any = any || inst.feasible(i, j);
        if (!any) throw Error(ErrorKind::Stalled, "auction: task '" + inst.task(j).id + "' has no feasible bidder");
    }

    double t = 0.0;
    while (remaining > 0) {
        std::vector<std::size_t> ready;
        for (std::size_t j = 0; j < m; ++j) {
            if (p.placed[j]) continue;
            auto r = p.ready_time(inst, j);
            if (r && *r <= t + kTimeTol) ready.push_back(j);
        }
        std::vector<std::size_t> idle;
        for (std::size_t i = 0; i < n; ++i)
            if (robot_free[i] <= t + kTimeTol && p.lines[i].release_after(t) <= t + kTimeTol) idle.push_back(i);

        if (!ready.empty() && !idle.empty()) {
            std::vector<double> start(idle.size() * ready.size(), kInfinity);
            for (std::size_t a = 0; a < idle.size(); ++a)
                for (std::size_t b = 0; b < ready.size(); ++b) {
                    const auto i = idle[a];
                    const auto j = ready[b];
                    if (!inst.feasible(i, j)) continue;
                    const double d = inst.duration(i, j);
                    const double s = p.lines[i].earliest_fit(t, d);
                    if (s + d > inst.deadline(j) + kTimeTol) continue;
                    start[a * ready.size() + b] = s;
                }
            auto value = [&](std::size_t a, std::size_t b) {
                const double s = start[a * ready.size() + b];
                if (s == kInfinity) return -kInfinity;
                return -inst.cost(idle[a], ready[b]) - alpha * (s + inst.duration(idle[a], ready[b]));
            };
            auto tie = [&](std::size_t a, std::size_t b) {
                return std::make_tuple(start[a * ready.size() + b] + inst.duration(idle[a], ready[b]),
                                       std::cref(inst.robot(idle[a]).id), ready[b]);
            };
            std::vector<double> prices;
            auto pairs = detail::epsilon_auction(idle.size(), ready.size(), value, tie, eps, result.rounds,
                                                 config.max_rounds, &prices);
            for (const auto& [a, b] : pairs) {
                const auto i = idle[a];
                const auto j = ready[b];
                p.place(inst, j, i, start[a * ready.size() + b]);
                robot_free[i] = p.end[j];
                result.prices[j].price = prices[b];
                --remaining;
            }
            if (!pairs.empty()) continue;  // same instant: newly freed robots may be idle again
        }

        // Advance to the next instant at which readiness or idleness can change.
        double next = kInfinity;
        for (std::size_t i = 0; i < n; ++i) {
            if (robot_free[i] > t + kTimeTol) next = std::min(next, robot_free[i]);
            const double rel = p.lines[i].release_after(t);
            if (rel > t + kTimeTol) next = std::min(next, rel);
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (p.placed[j]) {
                if (p.end[j] > t + kTimeTol) next = std::min(next, p.end[j]);
            } else if (inst.release(j) > t + kTimeTol) {
                next = std::min(next, inst.release(j));
            }
        }
        if (next == kInfinity) {
            std::string stuck;
            for (std::size_t j = 0; j < m && stuck.empty(); ++j)
                if (!p.placed[j]) stuck = inst.task(j).id;
            throw Error(ErrorKind::Stalled, "auction: no robot can take task '" + stuck + "' within its window");
        }
        t = next;
    }

    result.schedule = schedule_from_assignment(inst, p.robot_of, p.start, "auction");
    return result;
}

inline Schedule auction_allocate(const ProblemInstance& inst, const AuctionConfig& config = {}) {
    return auction_allocate_detailed(inst, config).schedule;
}

/// Sum of assigned c_ij minus the optimal assignment cost, on a square
/// instance without precedence. The optimum is found by enumeration.
inline double epsilon_optimality_gap(const ProblemInstance& inst, const Schedule& schedule) {
    const std::size_t n = inst.num_robots();
    if (n != inst.num_tasks() || !inst.edges().empty())
        throw Error(ErrorKind::ShapeMismatch, "epsilon gap needs n == m and no precedence edges");
    if (n > 9) throw Error(ErrorKind::ShapeMismatch, "epsilon gap enumerates permutations; n must be at most 9");
    std::vector<std::size_t> perm(n);
    for (std::size_t k = 0; k < n; ++k) perm[k] = k;
    double best = n ? kInfinity : 0.0;
    do {
        double total = 0.0;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            ok = inst.feasible(i, perm[i]);
            total += inst.cost(i, perm[i]);
        }
        if (ok) best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return assignment_cost_total(schedule, inst) - best;
}

} // namespace mrsched
