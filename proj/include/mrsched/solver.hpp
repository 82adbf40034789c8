#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mrsched/schedule.hpp"

namespace mrsched {

enum class SolveStatus { Optimal, GapStop, TimeLimitIncumbent, TimeLimitNoIncumbent, Infeasible };

constexpr std::string_view to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::GapStop: return "GapStop";
    case SolveStatus::TimeLimitIncumbent: return "TimeLimitIncumbent";
    case SolveStatus::TimeLimitNoIncumbent: return "TimeLimitNoIncumbent";
    case SolveStatus::Infeasible: return "Infeasible";
    }
    return "Unknown";
}

struct SolveConfig {
    double time_limit = 120.0;
    double gap_rel = 0.01;
    std::optional<std::uint64_t> node_limit;
    /// Initial incumbent; used only if it is feasible for the instance.
    std::optional<Schedule> warm_start;
    std::uint64_t rng_seed = 0;
    /// 1 = single-worker reference mode.
    unsigned threads = 1;
    /// JSON-lines solver telemetry (incumbents, final bound) when non-null.
    std::ostream* telemetry = nullptr;
};

struct SolveResult {
    std::optional<Schedule> schedule;
    double objective = kInfinity;
    double lower_bound = 0.0;
    double gap = kInfinity;
    SolveStatus status = SolveStatus::Infeasible;
    std::uint64_t nodes_explored = 0;
    double wall_time = 0.0;
    std::map<std::string, std::string> metadata;
};

inline double relative_gap(double objective, double lower_bound) {
    return std::max(0.0, (objective - lower_bound) / std::max(std::abs(objective), 1e-9));
}

namespace detail {

using Clock = std::chrono::steady_clock;

/// Immutable search data shared by all workers.
struct SearchData {
    const ProblemInstance* inst = nullptr;
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<std::size_t> order;       // insertion order: frozen first, then topological
    std::size_t frozen_count = 0;
    std::vector<std::vector<std::size_t>> robot_choices;  // feasible robots by ascending cost
    std::vector<char> isolated;           // no edges, no window, not frozen
    std::vector<double> tail;             // longest min-duration chain starting at j
    std::vector<double> succ_tail;        // max tail over successors
    std::vector<double> min_cost;
    std::vector<int> forced;              // sole feasible robot or -1
    std::vector<double> release;
    std::vector<double> deadline;
    std::vector<double> frozen_start;     // NaN when not frozen

    explicit SearchData(const ProblemInstance& p) : inst(&p), n(p.num_robots()), m(p.num_tasks()) {
        const auto nan = std::numeric_limits<double>::quiet_NaN();
        frozen_start.assign(m, nan);
        release.resize(m);
        deadline.resize(m);
        for (std::size_t j = 0; j < m; ++j) {
            release[j] = p.release(j);
            deadline[j] = p.deadline(j);
        }
        std::vector<std::size_t> frozen;
        for (std::size_t j = 0; j < m; ++j) {
            if (const auto& fz = p.frozen(j)) {
                frozen.push_back(j);
                frozen_start[j] = fz->second;
                release[j] = std::max(release[j], fz->second);
            }
        }
        std::sort(frozen.begin(), frozen.end(), [&](auto a, auto b) {
            return frozen_start[a] != frozen_start[b] ? frozen_start[a] < frozen_start[b] : a < b;
        });
        for (auto j : frozen) {
            for (auto k : p.predecessors(j))
                if (!p.frozen(k))
                    throw Error(ErrorKind::FrozenInfeasible, "frozen task '" + p.task(j).id +
                                                                 "' has unfrozen predecessor '" + p.task(k).id + "'");
        }
        order = frozen;
        frozen_count = frozen.size();

        isolated.assign(m, 0);
        for (std::size_t j = 0; j < m; ++j)
            isolated[j] = !p.frozen(j) && p.predecessors(j).empty() && p.successors(j).empty() &&
                          !p.task(j).time_window;
        for (auto j : p.topological_order())
            if (!p.frozen(j) && !isolated[j]) order.push_back(j);
        for (std::size_t j = 0; j < m; ++j)
            if (isolated[j]) order.push_back(j);

        tail.assign(m, 0.0);
        succ_tail.assign(m, 0.0);
        const auto& topo = p.topological_order();
        for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
            const auto j = *it;
            double best = 0.0;
            for (auto s : p.successors(j)) best = std::max(best, tail[s]);
            succ_tail[j] = best;
            tail[j] = p.min_duration(j) + best;
        }

        robot_choices.assign(m, {});
        min_cost.assign(m, 0.0);
        forced.assign(m, -1);
        for (std::size_t j = 0; j < m; ++j) {
            auto& rc = robot_choices[j];
            if (const auto& fz = p.frozen(j)) {
                rc.push_back(fz->first);
            } else {
                for (std::size_t i = 0; i < n; ++i)
                    if (p.feasible(i, j)) rc.push_back(i);
                std::stable_sort(rc.begin(), rc.end(), [&](auto a, auto b) { return p.cost(a, j) < p.cost(b, j); });
            }
            double mc = kInfinity;
            for (auto i : rc) mc = std::min(mc, p.cost(i, j));
            min_cost[j] = rc.empty() ? 0.0 : mc;
            if (rc.size() == 1) forced[j] = static_cast<int>(rc.front());
        }
    }
};

struct Incumbent {
    double objective = kInfinity;
    std::vector<std::size_t> robot_of;
    std::vector<double> start;
    bool valid() const { return !robot_of.empty() || objective < kInfinity; }
};

/// Lexicographic tie-break among equal objectives: robot per task index, then starts.
inline bool key_less(const std::vector<std::size_t>& ra, const std::vector<double>& sa,
                     const std::vector<std::size_t>& rb, const std::vector<double>& sb) {
    if (ra != rb) return ra < rb;
    return sa < sb;
}

inline bool better(double obj, const std::vector<std::size_t>& robots, const std::vector<double>& starts,
                   const Incumbent& inc) {
    if (!inc.valid()) return true;
    if (objective_less(obj, inc.objective)) return true;
    if (objective_less(inc.objective, obj)) return false;
    return key_less(robots, starts, inc.robot_of, inc.start);
}

struct SharedState {
    std::atomic<double> best{kInfinity};
    std::atomic<std::uint64_t> nodes{0};
    std::atomic<bool> stop{false};

    void offer(double obj) {
        double cur = best.load(std::memory_order_relaxed);
        while (obj < cur && !best.compare_exchange_weak(cur, obj, std::memory_order_relaxed)) {
        }
    }
};

struct Move {
    std::size_t robot;
    std::size_t pos;
};

/// Depth-first branch and bound over (robot, insertion position) decisions.
class Worker {
public:
    Worker(const SearchData& data, const SolveConfig& cfg, SharedState& shared, Clock::time_point deadline)
        : d_(data), cfg_(cfg), shared_(shared), time_deadline_(deadline) {
        const auto& p = *d_.inst;
        seq_.assign(d_.n, {});
        frozen_prefix_.assign(d_.n, 0);
        robot_of_.assign(d_.m, kUnplaced);
        start_.assign(d_.m, 0.0);
        end_.assign(d_.m, 0.0);
        est_.assign(d_.m, 0.0);
        indeg_.assign(d_.m, 0);
        prev_.assign(d_.m, -1);
        next_.assign(d_.m, -1);
        load_.assign(d_.n, 0.0);
        head_.assign(d_.m, 0.0);
        for (std::size_t k = 0; k < d_.frozen_count; ++k) {
            const auto j = d_.order[k];
            const auto i = p.frozen(j)->first;
            place(j, i, seq_[i].size());
            ++frozen_prefix_[i];
        }
        depth_ = d_.frozen_count;
        if (!evaluate())
            throw Error(ErrorKind::FrozenInfeasible, "frozen assignments are inconsistent with the instance");
    }

    Incumbent incumbent;
    bool limit_hit = false;
    bool gap_hit = false;

    void apply(const Move& mv) {
        place(d_.order[depth_], mv.robot, mv.pos);
        ++depth_;
    }

    bool evaluate_now() { return evaluate(); }

    /// Seeds the incumbent with a complete schedule, relabelled to earliest starts.
    bool seed(const Schedule& s) {
        const auto& p = *d_.inst;
        if (s.entries.size() != d_.m) return false;
        std::vector<std::pair<double, std::size_t>> by_start;
        std::vector<std::size_t> robot(d_.m, kUnplaced);
        for (const auto& e : s.entries) {
            auto i = p.robot_index(e.robot_id);
            auto j = p.task_index(e.task_id);
            if (!i || !j || robot[*j] != kUnplaced) return false;
            if (const auto& fz = p.frozen(*j)) {
                if (fz->first != *i) return false;
            } else if (!p.feasible(*i, *j)) {
                return false;
            }
            robot[*j] = *i;
            by_start.emplace_back(e.start, *j);
        }
        std::sort(by_start.begin(), by_start.end());
        Worker tmp(d_, cfg_, shared_, time_deadline_);
        for (auto& sq : tmp.seq_) sq.clear();
        std::fill(tmp.robot_of_.begin(), tmp.robot_of_.end(), kUnplaced);
        std::fill(tmp.load_.begin(), tmp.load_.end(), 0.0);
        tmp.placed_cost_ = 0.0;
        tmp.placed_count_ = 0;
        for (const auto& [st, j] : by_start) tmp.place(j, robot[j], tmp.seq_[robot[j]].size());
        tmp.depth_ = d_.m;
        if (!tmp.evaluate()) return false;
        consider_leaf(tmp.leaf_objective(), tmp.robot_of_, tmp.start_);
        return true;
    }

    /// Explores the subtree below the current state.
    void search() {
        if (d_.m == 0) {
            consider_leaf(leaf_objective(), robot_of_, start_);
            return;
        }
        if (depth_ == d_.m) {
            if (evaluate()) consider_leaf(leaf_objective(), robot_of_, start_);
            return;
        }
        dfs();
    }

    /// Lower bound of the current (evaluated) state.
    double bound() const { return lower_bound(); }

    /// Minimum bound over nodes still open on the DFS stack.
    double open_bound() const {
        if (frames_.empty() && limit_hit) return root_bound_;
        double lb = kInfinity;
        for (const auto& f : frames_)
            for (std::size_t c = f.next; c < f.children.size(); ++c) lb = std::min(lb, f.children[c].bound);
        return lb;
    }

    std::vector<Move> children_moves(std::vector<double>* bounds) {
        std::vector<Move> out;
        Frame f;
        expand(f);
        for (const auto& c : f.children) {
            out.push_back(c.move);
            if (bounds) bounds->push_back(c.bound);
        }
        return out;
    }

    std::size_t depth() const { return depth_; }

private:
    static constexpr std::size_t kUnplaced = std::numeric_limits<std::size_t>::max();

    struct Child {
        Move move;
        double bound;
        bool leaf;
    };
    struct Frame {
        std::vector<Child> children;
        std::size_t next = 0;
    };

    void place(std::size_t j, std::size_t i, std::size_t pos) {
        seq_[i].insert(seq_[i].begin() + static_cast<std::ptrdiff_t>(pos), j);
        robot_of_[j] = i;
        load_[i] += d_.inst->duration(i, j);
        placed_cost_ += d_.inst->cost(i, j);
        ++placed_count_;
    }

    void unplace(std::size_t j, std::size_t i, std::size_t pos) {
        seq_[i].erase(seq_[i].begin() + static_cast<std::ptrdiff_t>(pos));
        robot_of_[j] = kUnplaced;
        load_[i] -= d_.inst->duration(i, j);
        placed_cost_ -= d_.inst->cost(i, j);
        --placed_count_;
    }

    // Earliest-start labels over precedence and robot-sequence arcs of placed tasks.
    bool evaluate() {
        const auto& p = *d_.inst;
        for (std::size_t i = 0; i < d_.n; ++i) {
            const auto& sq = seq_[i];
            for (std::size_t k = 0; k < sq.size(); ++k) {
                prev_[sq[k]] = k ? static_cast<int>(sq[k - 1]) : -1;
                next_[sq[k]] = k + 1 < sq.size() ? static_cast<int>(sq[k + 1]) : -1;
            }
        }
        ready_.clear();
        for (std::size_t k = 0; k < depth_; ++k) {
            const auto j = d_.order[k];
            indeg_[j] = static_cast<int>(p.predecessors(j).size()) + (prev_[j] >= 0 ? 1 : 0);
            est_[j] = d_.release[j];
            if (indeg_[j] == 0) ready_.push_back(j);
        }
        std::size_t done = 0;
        while (!ready_.empty()) {
            const auto j = ready_.back();
            ready_.pop_back();
            ++done;
            const auto i = robot_of_[j];
            start_[j] = est_[j];
            end_[j] = start_[j] + p.duration(i, j);
            if (end_[j] > d_.deadline[j] + kTimeTol) return false;
            if (!std::isnan(d_.frozen_start[j]) && start_[j] > d_.frozen_start[j] + kTimeTol) return false;
            for (auto s : p.successors(j)) {
                if (robot_of_[s] == kUnplaced) continue;
                est_[s] = std::max(est_[s], end_[j]);
                if (--indeg_[s] == 0) ready_.push_back(s);
            }
            if (const int nx = next_[j]; nx >= 0) {
                est_[nx] = std::max(est_[nx], end_[j]);
                if (--indeg_[nx] == 0) ready_.push_back(static_cast<std::size_t>(nx));
            }
        }
        return done == depth_;
    }

    double leaf_objective() const {
        const auto& w = d_.inst->weights();
        double cmax = 0.0;
        double sum_c = 0.0;
        for (std::size_t i = 0; i < d_.n; ++i) {
            const double c = seq_[i].empty() ? 0.0 : end_[seq_[i].back()];
            sum_c += c;
            cmax = std::max(cmax, c);
        }
        return w.alpha * cmax + w.beta * sum_c + w.lambda * placed_cost_;
    }

    double lower_bound() const {
        const auto& p = *d_.inst;
        const auto& w = p.weights();
        double cp = 0.0;
        for (std::size_t k = 0; k < depth_; ++k) {
            const auto j = d_.order[k];
            cp = std::max(cp, end_[j] + d_.succ_tail[j]);
        }
        double free_work = 0.0;
        double cost = placed_cost_;
        forced_.assign(d_.n, 0.0);
        for (std::size_t k = depth_; k < d_.m; ++k) {
            const auto j = d_.order[k];
            double h = d_.release[j];
            for (auto q : p.predecessors(j))
                h = std::max(h, robot_of_[q] != kUnplaced ? end_[q] : head_[q] + p.min_duration(q));
            head_[j] = h;
            cp = std::max(cp, h + d_.tail[j]);
            cost += d_.min_cost[j];
            if (d_.forced[j] >= 0) forced_[static_cast<std::size_t>(d_.forced[j])] += p.duration(static_cast<std::size_t>(d_.forced[j]), j);
            else free_work += p.min_duration(j);
        }
        double sum_base = 0.0;
        double slack = 0.0;
        double max_base = 0.0;
        for (std::size_t i = 0; i < d_.n; ++i) {
            const double robot_end = seq_[i].empty() ? 0.0 : end_[seq_[i].back()];
            const double work = load_[i] + forced_[i];
            const double base = std::max(robot_end, work);
            sum_base += base;
            max_base = std::max(max_base, base);
            if (p.robot(i).available) slack += base - work;
        }
        double sum_c = sum_base + std::max(0.0, free_work - slack);
        double cmax = std::max({cp, max_base, d_.n ? sum_c / static_cast<double>(d_.n) : 0.0});
        sum_c = std::max(sum_c, cmax);
        return w.alpha * cmax + w.beta * sum_c + w.lambda * cost;
    }

    bool may_beat_key() const {
        if (!incumbent.valid()) return true;
        for (std::size_t j = 0; j < d_.m; ++j) {
            if (robot_of_[j] == kUnplaced) return true;
            if (robot_of_[j] != incumbent.robot_of[j]) return robot_of_[j] < incumbent.robot_of[j];
        }
        return start_ < incumbent.start;
    }

    double prune_level() const {
        return std::min(incumbent.objective, shared_.best.load(std::memory_order_relaxed));
    }

    // True when a node with this bound cannot improve on the incumbent.
    bool prunable(double lb) const {
        const double level = prune_level();
        if (level == kInfinity) return false;
        if (objective_less(level, lb)) return true;
        if (!incumbent.valid() || objective_less(lb, incumbent.objective)) return false;
        return !may_beat_key();
    }

    void consider_leaf(double obj, const std::vector<std::size_t>& robots, const std::vector<double>& starts) {
        if (!better(obj, robots, starts, incumbent)) return;
        incumbent.objective = obj;
        incumbent.robot_of = robots;
        incumbent.start = starts;
        shared_.offer(obj);
        if (cfg_.telemetry && cfg_.threads <= 1) {
            nlohmann::json line = {{"event", "incumbent"},
                                   {"nodes", shared_.nodes.load()},
                                   {"objective", obj},
                                   {"bound", std::min(open_bound(), obj)}};
            *cfg_.telemetry << line.dump() << '\n';
        }
    }

    void expand(Frame& f) {
        const auto j = d_.order[depth_];
        const bool last = depth_ + 1 == d_.m;
        for (auto i : d_.robot_choices[j]) {
            auto& sq = seq_[i];
            for (std::size_t pos = sq.size() + 1; pos-- > frozen_prefix_[i];) {
                if (d_.isolated[j] && pos < sq.size() && d_.isolated[sq[pos]]) continue;
                place(j, i, pos);
                ++depth_;
                if (evaluate()) {
                    const double lb = lower_bound();
                    if (last) {
                        if (!prunable(lb)) consider_leaf(lb, robot_of_, start_);
                    } else if (!prunable(lb)) {
                        f.children.push_back({{i, pos}, lb, false});
                    }
                }
                --depth_;
                unplace(j, i, pos);
            }
        }
    }

    bool out_of_budget() {
        const auto nodes = shared_.nodes.fetch_add(1, std::memory_order_relaxed) + 1;
        if (shared_.stop.load(std::memory_order_relaxed)) return true;
        if (cfg_.node_limit && nodes > *cfg_.node_limit) {
            shared_.stop = true;
            return true;
        }
        if (Clock::now() >= time_deadline_) {
            shared_.stop = true;
            return true;
        }
        return false;
    }

    bool gap_reached() const {
        if (cfg_.threads > 1 || cfg_.gap_rel <= 0.0 || !incumbent.valid()) return false;
        const double open = open_bound();
        // Keep searching while only ties remain; they decide the tie-break.
        if (!objective_less(open, incumbent.objective)) return false;
        return relative_gap(incumbent.objective, open) <= cfg_.gap_rel;
    }

    void dfs() {
        frames_.clear();
        root_bound_ = lower_bound();
        if (out_of_budget()) {
            limit_hit = true;
            return;
        }
        frames_.emplace_back();
        expand(frames_.back());
        while (!frames_.empty()) {
            auto& f = frames_.back();
            if (f.next == f.children.size()) {
                frames_.pop_back();
                if (!frames_.empty()) {
                    // Undo the move that led into the popped frame.
                    auto& parent = frames_.back();
                    const auto& mv = parent.children[parent.next - 1].move;
                    --depth_;
                    unplace(d_.order[depth_], mv.robot, mv.pos);
                }
                continue;
            }
            const Child c = f.children[f.next++];
            if (prunable(c.bound)) continue;
            if (out_of_budget()) {
                --f.next;
                limit_hit = true;
                return;
            }
            place(d_.order[depth_], c.move.robot, c.move.pos);
            ++depth_;
            if (!evaluate()) {
                --depth_;
                unplace(d_.order[depth_], c.move.robot, c.move.pos);
                continue;
            }
            const auto before = incumbent.objective;
            Frame child;
            expand(child);
            frames_.push_back(std::move(child));
            if (incumbent.objective != before && gap_reached()) {
                gap_hit = true;
                return;
            }
        }
    }

    const SearchData& d_;
    const SolveConfig& cfg_;
    SharedState& shared_;
    Clock::time_point time_deadline_;

    std::vector<std::vector<std::size_t>> seq_;
    std::vector<std::size_t> frozen_prefix_;
    std::vector<std::size_t> robot_of_;
    std::vector<double> start_;
    std::vector<double> end_;
    std::vector<double> est_;
    std::vector<int> indeg_;
    std::vector<int> prev_;
    std::vector<int> next_;
    std::vector<double> load_;
    mutable std::vector<double> head_;
    mutable std::vector<double> forced_;
    std::vector<std::size_t> ready_;
    std::vector<Frame> frames_;
    double placed_cost_ = 0.0;
    double root_bound_ = kInfinity;
    std::size_t placed_count_ = 0;
    std::size_t depth_ = 0;
};

inline void finish_result(SolveResult& r, const ProblemInstance& inst, const Incumbent& inc, double open_lb,
                          bool exhausted, bool gap_hit, Clock::time_point t0, std::uint64_t nodes) {
    r.nodes_explored = nodes;
    r.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    if (inc.valid()) {
        r.schedule = schedule_from_assignment(inst, inc.robot_of, inc.start, "milp");
        r.objective = r.schedule->objective;
        if (exhausted) {
            r.status = SolveStatus::Optimal;
            r.lower_bound = r.objective;
        } else {
            r.status = gap_hit ? SolveStatus::GapStop : SolveStatus::TimeLimitIncumbent;
            r.lower_bound = std::min(open_lb, r.objective);
        }
        r.gap = relative_gap(r.objective, r.lower_bound);
        r.schedule->metadata["status"] = std::string(to_string(r.status));
    } else {
        r.status = exhausted ? SolveStatus::Infeasible : SolveStatus::TimeLimitNoIncumbent;
        r.lower_bound = exhausted ? kInfinity : open_lb;
    }
    r.metadata["status"] = std::string(to_string(r.status));
}

} // namespace detail

/// Exact branch and bound for the makespan model. Tasks are inserted in
/// topological order; each decision picks a robot and a position in its
/// sequence, and start times are earliest-start labels over the combined
/// precedence and sequence arcs.
inline SolveResult solve_exact(const ProblemInstance& inst, const SolveConfig& config = {}) {
    using detail::Clock;
    if (!(config.time_limit > 0.0)) throw Error(ErrorKind::InvalidValue, "time_limit must be positive");
    if (config.gap_rel < 0.0 || config.gap_rel >= 1.0) throw Error(ErrorKind::InvalidValue, "gap_rel must lie in [0,1)");
    const auto t0 = Clock::now();
    const auto limit = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(config.time_limit));
    const auto deadline = t0 + limit;

    detail::SearchData data(inst);
    detail::SharedState shared;
    SolveResult result;

    const unsigned threads = std::max(1u, config.threads);
    if (threads == 1 || inst.num_tasks() - data.frozen_count < 3) {
        detail::Worker w(data, config, shared, deadline);
        if (config.warm_start) result.metadata["warm_start"] = w.seed(*config.warm_start) ? "used" : "rejected";
        w.search();
        const bool exhausted = !w.limit_hit && !w.gap_hit;
        detail::finish_result(result, inst, w.incumbent, w.open_bound(), exhausted, w.gap_hit, t0,
                              shared.nodes.load());
    } else {
        // Split the tree into a frontier of subtrees; workers share the best objective.
        detail::Worker root(data, config, shared, deadline);
        if (config.warm_start) result.metadata["warm_start"] = root.seed(*config.warm_start) ? "used" : "rejected";
        std::vector<std::vector<detail::Move>> frontier{{}};
        std::vector<double> frontier_lb{root.bound()};
        std::size_t level = 0;
        while (frontier.size() < 8u * threads && level + 2 < inst.num_tasks() - data.frozen_count) {
            std::vector<std::vector<detail::Move>> next;
            std::vector<double> next_lb;
            for (const auto& path : frontier) {
                detail::Worker w(data, config, shared, deadline);
                for (const auto& mv : path) w.apply(mv);
                w.evaluate_now();
                std::vector<double> lbs;
                auto moves = w.children_moves(&lbs);
                for (std::size_t c = 0; c < moves.size(); ++c) {
                    auto p = path;
                    p.push_back(moves[c]);
                    next.push_back(std::move(p));
                    next_lb.push_back(lbs[c]);
                }
            }
            frontier = std::move(next);
            frontier_lb = std::move(next_lb);
            ++level;
        }
        std::vector<detail::Incumbent> found(frontier.size());
        std::vector<char> complete(frontier.size(), 0);
        std::atomic<std::size_t> next_item{0};
        auto run = [&] {
            for (;;) {
                const std::size_t k = next_item.fetch_add(1);
                if (k >= frontier.size()) return;
                detail::Worker w(data, config, shared, deadline);
                w.incumbent = root.incumbent;
                for (const auto& mv : frontier[k]) w.apply(mv);
                if (w.evaluate_now()) w.search();
                found[k] = w.incumbent;
                complete[k] = !w.limit_hit;
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run);
        for (auto& t : pool) t.join();

        detail::Incumbent best = root.incumbent;
        double open_lb = kInfinity;
        bool exhausted = true;
        for (std::size_t k = 0; k < frontier.size(); ++k) {
            if (found[k].valid() && detail::better(found[k].objective, found[k].robot_of, found[k].start, best))
                best = found[k];
            if (!complete[k]) {
                exhausted = false;
                open_lb = std::min(open_lb, frontier_lb[k]);
            }
        }
        detail::finish_result(result, inst, best, open_lb, exhausted, false, t0, shared.nodes.load());
    }
    if (config.telemetry) {
        nlohmann::json line = {{"event", "done"},
                               {"status", std::string(to_string(result.status))},
                               {"nodes", result.nodes_explored},
                               {"objective", std::isfinite(result.objective) ? nlohmann::json(result.objective) : nlohmann::json(nullptr)},
                               {"bound", std::isfinite(result.lower_bound) ? nlohmann::json(result.lower_bound) : nlohmann::json(nullptr)}};
        *config.telemetry << line.dump() << '\n';
    }
    return result;
}

using FallbackAllocator = std::function<Schedule(const ProblemInstance&)>;

/// Exact solve under the configured caps. When the search ends without a
/// proven optimum, the fallback allocator also runs and the better of the two
/// schedules is returned; without an incumbent the fallback's schedule is used.
inline SolveResult anytime_solve(const ProblemInstance& inst, const SolveConfig& config,
                                 const FallbackAllocator& fallback) {
    SolveResult r = solve_exact(inst, config);
    if (r.status == SolveStatus::Optimal || !fallback) return r;
    std::optional<Schedule> alt;
    try {
        alt = fallback(inst);
    } catch (const Error&) {
        if (!r.schedule) throw Error(ErrorKind::Infeasible, "solver and fallback both failed to find a schedule");
        return r;
    }
    const double alt_obj = objective_value(*alt, inst);
    if (!r.schedule || objective_less(alt_obj, r.objective)) {
        r.schedule = std::move(alt);
        r.objective = alt_obj;
        r.gap = relative_gap(r.objective, std::min(r.lower_bound, r.objective));
        r.metadata["fallback"] = r.schedule->metadata.count("allocator") ? r.schedule->metadata["allocator"] : "fallback";
        r.schedule->metadata["status"] = "Fallback";
        r.schedule->metadata["solver_status"] = std::string(to_string(r.status));
    }
    return r;
}

/// Checks the instance's frozen assignments and seeds the next solve with the
/// previous schedule when it still covers every task.
inline SolveConfig warm_start(const ProblemInstance& inst, const Schedule& previous, SolveConfig base = {}) {
    const std::size_t m = inst.num_tasks();
    std::vector<std::vector<std::size_t>> by_robot(inst.num_robots());
    for (std::size_t j = 0; j < m; ++j) {
        const auto& fz = inst.frozen(j);
        if (!fz) continue;
        const auto [i, s] = *fz;
        const double e = s + inst.duration(i, j);
        if (s < inst.release(j) - kTimeTol || e > inst.deadline(j) + kTimeTol)
            throw Error(ErrorKind::FrozenInfeasible, "frozen task '" + inst.task(j).id + "' violates its time window");
        for (auto k : inst.predecessors(j)) {
            const auto& fk = inst.frozen(k);
            if (!fk || fk->second + inst.duration(fk->first, k) > s + kTimeTol)
                throw Error(ErrorKind::FrozenInfeasible, "frozen task '" + inst.task(j).id +
                                                             "' starts before predecessor '" + inst.task(k).id +
                                                             "' is complete");
        }
        by_robot[i].push_back(j);
    }
    for (std::size_t i = 0; i < by_robot.size(); ++i) {
        auto& list = by_robot[i];
        std::sort(list.begin(), list.end(), [&](auto a, auto b) { return inst.frozen(a)->second < inst.frozen(b)->second; });
        for (std::size_t k = 1; k < list.size(); ++k) {
            const auto a = list[k - 1];
            const auto b = list[k];
            if (inst.frozen(a)->second + inst.duration(i, a) > inst.frozen(b)->second + kTimeTol)
                throw Error(ErrorKind::FrozenInfeasible, "frozen tasks '" + inst.task(a).id + "' and '" +
                                                             inst.task(b).id + "' overlap");
        }
    }

    Schedule seed;
    std::vector<char> covered(m, 0);
    for (const auto& e : previous.entries) {
        auto j = inst.task_index(e.task_id);
        if (!j || covered[*j]) continue;
        covered[*j] = 1;
        ScheduleEntry entry = e;
        if (const auto& fz = inst.frozen(*j)) {
            entry.robot_id = inst.robot(fz->first).id;
            entry.start = fz->second;
            entry.end = fz->second + inst.duration(fz->first, *j);
        }
        seed.entries.push_back(std::move(entry));
    }
    base.warm_start.reset();
    if (std::all_of(covered.begin(), covered.end(), [](char c) { return c != 0; })) base.warm_start = std::move(seed);
    return base;
}

} // namespace mrsched
