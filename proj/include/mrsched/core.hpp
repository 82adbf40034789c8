#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mrsched/error.hpp"
#include "mrsched/grid.hpp"

namespace mrsched {

/// Absolute tolerance for every time comparison (seconds).
inline constexpr double kTimeTol = 1e-6;
/// Relative tolerance for objective comparisons.
inline constexpr double kObjRelTol = 1e-9;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline bool objective_less(double a, double b) {
    return a < b - kObjRelTol * std::max({std::abs(a), std::abs(b), 1.0});
}

inline bool objective_equal(double a, double b) {
    return !objective_less(a, b) && !objective_less(b, a);
}

using CapabilitySet = std::set<std::string>;

/// Release and deadline in seconds. An open deadline is +infinity.
struct TimeWindow {
    double release = 0.0;
    double deadline = kInfinity;

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct Task {
    std::string id;
    std::string description;
    double duration = 1.0;
    std::vector<std::string> dependencies;
    CapabilitySet required_capabilities;
    std::optional<std::string> location;
    std::optional<TimeWindow> time_window;

    friend bool operator==(const Task&, const Task&) = default;
};

struct RobotProfile {
    std::string id;
    CapabilitySet capabilities;
    std::optional<double> speed;
    std::optional<std::string> home_location;
    // Robots that failed during execution stay in the team so their finished
    // work remains attributable, but they receive no new tasks.
    bool available = true;

    friend bool operator==(const RobotProfile&, const RobotProfile&) = default;
};

/// Where travel enters the model: as a cost term inside c_ij, or added to
/// the task duration on the robot that performs it.
enum class TravelMode { CostTerm, Duration };

struct CostParams {
    double gamma = 1.0;
    double tau = 1.0;
    std::optional<Grid<double>> travel;
    TravelMode travel_mode = TravelMode::CostTerm;

    friend bool operator==(const CostParams&, const CostParams&) = default;
};

struct ObjectiveWeights {
    double alpha = 1.0;
    double beta = 0.01;
    double lambda = 0.001;

    friend bool operator==(const ObjectiveWeights&, const ObjectiveWeights&) = default;
};

/// A task whose robot and start time are fixed (completed or in-progress work).
struct FrozenAssignment {
    std::string task_id;
    std::string robot_id;
    double start = 0.0;

    friend bool operator==(const FrozenAssignment&, const FrozenAssignment&) = default;
};

/// Raw, unvalidated instance data as it arrives from JSON or a generator.
struct InstanceSpec {
    std::vector<RobotProfile> robots;
    std::vector<Task> tasks;
    std::optional<Grid<double>> fitness;
    bool fitness_raw = false;
    CostParams cost_params;
    ObjectiveWeights weights;
    std::vector<FrozenAssignment> frozen;

    friend bool operator==(const InstanceSpec&, const InstanceSpec&) = default;
};

struct ValidationOptions {
    double duration_floor = 1e-3;
};

/// Per-task min-max normalization across robots. Degenerate columns map to 0.5.
inline Grid<double> normalize_fitness(const Grid<double>& raw) {
    Grid<double> out(raw.rows(), raw.cols());
    for (std::size_t j = 0; j < raw.cols(); ++j) {
        double lo = kInfinity;
        double hi = -kInfinity;
        for (std::size_t i = 0; i < raw.rows(); ++i) {
            const double v = raw(i, j);
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::NonFiniteInput,
                            "fitness entry (" + std::to_string(i) + "," + std::to_string(j) +
                                ") is not finite");
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (std::size_t i = 0; i < raw.rows(); ++i) {
            out(i, j) = hi > lo ? (raw(i, j) - lo) / (hi - lo) : 0.5;
        }
    }
    return out;
}

/// c_ij = 1/(1 + gamma f_ij) + tau travel_ij. Travel only counts in cost-term mode.
inline double assignment_cost(double fitness, double travel, const CostParams& params) {
    double c = 1.0 / (1.0 + params.gamma * fitness);
    if (params.travel_mode == TravelMode::CostTerm) c += params.tau * travel;
    return c;
}

inline double assignment_cost(std::size_t robot, std::size_t task, const Grid<double>& fitness,
                              const CostParams& params) {
    const double travel = params.travel ? (*params.travel)(robot, task) : 0.0;
    return assignment_cost(fitness(robot, task), travel, params);
}

/// Validated, immutable problem instance. Construct with validate_instance().
class ProblemInstance {
public:
    std::size_t num_robots() const noexcept { return spec_.robots.size(); }
    std::size_t num_tasks() const noexcept { return spec_.tasks.size(); }

    const std::vector<RobotProfile>& robots() const noexcept { return spec_.robots; }
    const std::vector<Task>& tasks() const noexcept { return spec_.tasks; }
    const RobotProfile& robot(std::size_t i) const { return spec_.robots[i]; }
    const Task& task(std::size_t j) const { return spec_.tasks[j]; }

    std::optional<std::size_t> robot_index(const std::string& id) const {
        auto it = robot_index_.find(id);
        if (it == robot_index_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<std::size_t> task_index(const std::string& id) const {
        auto it = task_index_.find(id);
        if (it == task_index_.end()) return std::nullopt;
        return it->second;
    }

    /// Precedence edges (k, j): k must finish before j starts.
    const std::vector<std::pair<std::size_t, std::size_t>>& edges() const noexcept { return edges_; }
    const std::vector<std::size_t>& predecessors(std::size_t j) const { return preds_[j]; }
    const std::vector<std::size_t>& successors(std::size_t j) const { return succs_[j]; }
    /// Kahn order, smallest index first among ready tasks.
    const std::vector<std::size_t>& topological_order() const noexcept { return topo_; }

    bool feasible(std::size_t i, std::size_t j) const { return mask_(i, j) != 0; }
    const Grid<std::uint8_t>& mask() const noexcept { return mask_; }
    const Grid<double>& fitness() const noexcept { return fitness_; }
    const Grid<double>& costs() const noexcept { return cost_; }
    double cost(std::size_t i, std::size_t j) const { return cost_(i, j); }
    /// Duration of task j when robot i performs it (includes travel in duration mode).
    double duration(std::size_t i, std::size_t j) const { return duration_(i, j); }
    double min_duration(std::size_t j) const { return min_duration_[j]; }
    double release(std::size_t j) const {
        const auto& w = spec_.tasks[j].time_window;
        return w ? w->release : 0.0;
    }
    double deadline(std::size_t j) const {
        const auto& w = spec_.tasks[j].time_window;
        return w ? w->deadline : kInfinity;
    }

    const CostParams& cost_params() const noexcept { return spec_.cost_params; }
    const ObjectiveWeights& weights() const noexcept { return spec_.weights; }
    double big_m() const noexcept { return big_m_; }

    /// Frozen (robot, start) for task j, if any.
    const std::optional<std::pair<std::size_t, double>>& frozen(std::size_t j) const { return frozen_[j]; }
    bool has_frozen() const noexcept { return !spec_.frozen.empty(); }

    /// Canonical, clamped form of the input; re-validating it yields an equal instance.
    const InstanceSpec& spec() const noexcept { return spec_; }

    friend bool operator==(const ProblemInstance& a, const ProblemInstance& b) { return a.spec_ == b.spec_; }

private:
    friend ProblemInstance validate_instance(InstanceSpec, const ValidationOptions&);

    InstanceSpec spec_;
    std::unordered_map<std::string, std::size_t> robot_index_;
    std::unordered_map<std::string, std::size_t> task_index_;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
    std::vector<std::vector<std::size_t>> preds_;
    std::vector<std::vector<std::size_t>> succs_;
    std::vector<std::size_t> topo_;
    Grid<std::uint8_t> mask_;
    Grid<double> fitness_;
    Grid<double> cost_;
    Grid<double> duration_;
    std::vector<double> min_duration_;
    std::vector<std::optional<std::pair<std::size_t, double>>> frozen_;
    double big_m_ = 0.0;
};

namespace detail {

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        if (k) out += sep;
        out += parts[k];
    }
    return out;
}

inline void require_finite_nonneg(double v, const std::string& what) {
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorKind::InvalidValue, what + " must be finite and >= 0");
}

// Returns one cycle as a list of task indices, or empty if the graph is acyclic.
inline std::vector<std::size_t> find_cycle(const std::vector<std::vector<std::size_t>>& succs) {
    const std::size_t m = succs.size();
    std::vector<int> color(m, 0);
    std::vector<std::size_t> parent(m, m);
    for (std::size_t root = 0; root < m; ++root) {
        if (color[root]) continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        color[root] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next < succs[v].size()) {
                const std::size_t w = succs[v][next++];
                if (color[w] == 1) {
                    std::vector<std::size_t> cycle{w};
                    for (std::size_t u = v; u != w; u = parent[u]) cycle.push_back(u);
                    std::reverse(cycle.begin() + 1, cycle.end());
                    return cycle;
                }
                if (color[w] == 0) {
                    color[w] = 1;
                    parent[w] = v;
                    stack.emplace_back(w, 0);
                }
            } else {
                color[v] = 2;
                stack.pop_back();
            }
        }
    }
    return {};
}

} // namespace detail

/// Validates raw instance data and derives edges, topological order,
/// feasibility mask, costs, effective durations and big-M.
inline ProblemInstance validate_instance(InstanceSpec spec, const ValidationOptions& options = {}) {
    ProblemInstance inst;
    const std::size_t n = spec.robots.size();
    const std::size_t m = spec.tasks.size();

    if (!(options.duration_floor > 0.0)) throw Error(ErrorKind::InvalidValue, "duration floor must be positive");
    for (std::size_t i = 0; i < n; ++i) {
        if (!inst.robot_index_.emplace(spec.robots[i].id, i).second)
            throw Error(ErrorKind::DuplicateId, "duplicate robot id '" + spec.robots[i].id + "'");
        if (spec.robots[i].speed && !(*spec.robots[i].speed > 0.0))
            throw Error(ErrorKind::InvalidValue, "robot '" + spec.robots[i].id + "' speed must be positive");
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (!inst.task_index_.emplace(spec.tasks[j].id, j).second)
            throw Error(ErrorKind::DuplicateId, "duplicate task id '" + spec.tasks[j].id + "'");
    }

    for (auto& t : spec.tasks) {
        if (std::isnan(t.duration)) throw Error(ErrorKind::NonFiniteInput, "task '" + t.id + "' duration is NaN");
        if (!std::isfinite(t.duration)) throw Error(ErrorKind::InvalidValue, "task '" + t.id + "' duration is infinite");
        if (t.duration < options.duration_floor) t.duration = options.duration_floor;
    }

    const auto& cp = spec.cost_params;
    detail::require_finite_nonneg(cp.gamma, "gamma");
    detail::require_finite_nonneg(cp.tau, "tau");
    if (cp.travel) {
        if (cp.travel->rows() != n || cp.travel->cols() != m)
            throw Error(ErrorKind::DimensionMismatch, "travel matrix must be " + std::to_string(n) + "x" +
                                                          std::to_string(m));
        for (double v : cp.travel->data()) detail::require_finite_nonneg(v, "travel entry");
    }
    const auto& w = spec.weights;
    if (!(w.alpha > 0.0) || !std::isfinite(w.alpha)) throw Error(ErrorKind::InvalidValue, "alpha must be positive");
    detail::require_finite_nonneg(w.beta, "beta");
    detail::require_finite_nonneg(w.lambda, "lambda");

    // Precedence graph.
    inst.preds_.assign(m, {});
    inst.succs_.assign(m, {});
    for (std::size_t j = 0; j < m; ++j) {
        std::set<std::size_t> seen;
        for (const auto& dep : spec.tasks[j].dependencies) {
            auto it = inst.task_index_.find(dep);
            if (it == inst.task_index_.end())
                throw Error(ErrorKind::UnknownDependency,
                            "task '" + spec.tasks[j].id + "' depends on unknown task '" + dep + "'");
            if (!seen.insert(it->second).second) continue;
            inst.preds_[j].push_back(it->second);
            inst.succs_[it->second].push_back(j);
            inst.edges_.emplace_back(it->second, j);
        }
    }
    for (auto& s : inst.succs_) std::sort(s.begin(), s.end());
    if (auto cycle = detail::find_cycle(inst.succs_); !cycle.empty()) {
        std::vector<std::string> names;
        for (auto v : cycle) names.push_back(spec.tasks[v].id);
        names.push_back(spec.tasks[cycle.front()].id);
        throw Error(ErrorKind::CyclicDependency, "dependency cycle: " + detail::join(names, " -> "));
    }
    {
        std::vector<std::size_t> indeg(m);
        for (std::size_t j = 0; j < m; ++j) indeg[j] = inst.preds_[j].size();
        std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
        for (std::size_t j = 0; j < m; ++j)
            if (indeg[j] == 0) ready.push(j);
        while (!ready.empty()) {
            const std::size_t v = ready.top();
            ready.pop();
            inst.topo_.push_back(v);
            for (auto s : inst.succs_[v])
                if (--indeg[s] == 0) ready.push(s);
        }
    }

    // Time windows.
    for (const auto& t : spec.tasks) {
        if (!t.time_window) continue;
        const auto& tw = *t.time_window;
        if (!std::isfinite(tw.release) || tw.release < 0.0 || std::isnan(tw.deadline) || tw.deadline < tw.release)
            throw Error(ErrorKind::InvalidValue, "task '" + t.id + "' has an invalid time window");
        if (tw.deadline - tw.release < t.duration - kTimeTol)
            throw Error(ErrorKind::InvalidValue, "task '" + t.id + "' time window is shorter than its duration");
    }

    // Frozen assignments.
    inst.frozen_.assign(m, std::nullopt);
    for (const auto& f : spec.frozen) {
        auto ti = inst.task_index_.find(f.task_id);
        auto ri = inst.robot_index_.find(f.robot_id);
        if (ti == inst.task_index_.end() || ri == inst.robot_index_.end())
            throw Error(ErrorKind::FrozenInfeasible, "frozen entry references unknown task or robot");
        if (!std::isfinite(f.start) || f.start < 0.0)
            throw Error(ErrorKind::FrozenInfeasible, "frozen task '" + f.task_id + "' has an invalid start");
        if (inst.frozen_[ti->second])
            throw Error(ErrorKind::FrozenInfeasible, "task '" + f.task_id + "' frozen twice");
        inst.frozen_[ti->second] = std::make_pair(ri->second, f.start);
    }

    // Feasibility mask.
    inst.mask_ = Grid<std::uint8_t>(n, m, 0);
    for (std::size_t j = 0; j < m; ++j) {
        const auto& req = spec.tasks[j].required_capabilities;
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& caps = spec.robots[i].capabilities;
            const bool ok = spec.robots[i].available && std::includes(caps.begin(), caps.end(), req.begin(), req.end());
            inst.mask_(i, j) = ok ? 1 : 0;
            any = any || ok;
        }
        if (!any && !inst.frozen_[j]) {
            std::vector<std::string> need(req.begin(), req.end());
            throw Error(ErrorKind::NoFeasibleRobot, "task '" + spec.tasks[j].id +
                                                        "' has no feasible robot; requires {" +
                                                        detail::join(need, ", ") + "}");
        }
    }

    // Fitness.
    if (spec.fitness) {
        if (spec.fitness->rows() != n || spec.fitness->cols() != m)
            throw Error(ErrorKind::DimensionMismatch, "fitness matrix must be " + std::to_string(n) + "x" +
                                                          std::to_string(m));
        if (spec.fitness_raw) {
            spec.fitness = normalize_fitness(*spec.fitness);
            spec.fitness_raw = false;
        }
        for (double v : spec.fitness->data()) {
            if (std::isnan(v)) throw Error(ErrorKind::NonFiniteInput, "fitness entry is NaN");
            if (v < 0.0 || v > 1.0) throw Error(ErrorKind::InvalidValue, "fitness entries must lie in [0,1]");
        }
        inst.fitness_ = *spec.fitness;
    } else {
        spec.fitness_raw = false;
        inst.fitness_ = Grid<double>(n, m, 1.0);
    }

    // Costs, effective durations, big-M.
    inst.cost_ = Grid<double>(n, m);
    inst.duration_ = Grid<double>(n, m);
    inst.min_duration_.assign(m, kInfinity);
    double max_release = 0.0;
    double horizon = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double longest = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            inst.cost_(i, j) = assignment_cost(i, j, inst.fitness_, cp);
            double d = spec.tasks[j].duration;
            if (cp.travel_mode == TravelMode::Duration && cp.travel) d += (*cp.travel)(i, j);
            inst.duration_(i, j) = d;
            longest = std::max(longest, d);
            if (inst.mask_(i, j) || (inst.frozen_[j] && inst.frozen_[j]->first == i))
                inst.min_duration_[j] = std::min(inst.min_duration_[j], d);
        }
        if (n == 0) inst.min_duration_[j] = spec.tasks[j].duration;
        horizon += longest;
        max_release = std::max(max_release, spec.tasks[j].time_window ? spec.tasks[j].time_window->release : 0.0);
    }
    for (const auto& f : spec.frozen) max_release = std::max(max_release, f.start);
    inst.big_m_ = horizon + max_release;

    inst.spec_ = std::move(spec);
    return inst;
}

} // namespace mrsched
