#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "mrsched/schedule.hpp"

namespace mrsched::milp {

enum class VarKind { Binary, Continuous };
enum class Sense { LessEqual, GreaterEqual, Equal };

struct Variable {
    std::string name;
    VarKind kind = VarKind::Continuous;
    double lower = 0.0;
    double upper = kInfinity;
};

struct Term {
    std::size_t var;
    double coef;
};

struct Row {
    std::string name;
    std::vector<Term> terms;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
};

/// Explicit makespan MILP: assignment x_ij, same-robot ordering y^i_jk,
/// starts s_j, robot completions C_i and the makespan C_max.
class MilpModel {
public:
    std::size_t num_robots() const noexcept { return n_; }
    std::size_t num_tasks() const noexcept { return m_; }
    double big_m() const noexcept { return big_m_; }

    const std::vector<Variable>& variables() const noexcept { return vars_; }
    const std::vector<Term>& objective() const noexcept { return objective_; }
    const std::vector<Row>& rows() const noexcept { return rows_; }

    std::size_t x(std::size_t i, std::size_t j) const { return i * m_ + j; }
    /// Requires j < k.
    std::size_t y(std::size_t i, std::size_t j, std::size_t k) const {
        return n_ * m_ + i * pairs_ + pair_index(j, k);
    }
    std::size_t s(std::size_t j) const { return n_ * m_ + n_ * pairs_ + j; }
    std::size_t completion(std::size_t i) const { return n_ * m_ + n_ * pairs_ + m_ + i; }
    std::size_t makespan() const { return n_ * m_ + n_ * pairs_ + m_ + n_; }

    /// n*m + n*m(m-1)/2 + m + n + 1.
    static std::size_t expected_variable_count(std::size_t n, std::size_t m) {
        return n * m + n * (m * (m - 1) / 2) + m + n + 1;
    }

    struct RowCounts {
        std::size_t assignment = 0;
        std::size_t precedence = 0;
        std::size_t disjunctive = 0;
        std::size_t completion = 0;
        std::size_t makespan = 0;
        std::size_t deadline = 0;
        std::size_t total() const { return assignment + precedence + disjunctive + completion + makespan + deadline; }
    };
    const RowCounts& row_counts() const noexcept { return counts_; }
    std::size_t fixed_zero_count() const noexcept { return fixed_zero_; }

    struct Evaluation {
        double objective = 0.0;
        double max_violation = 0.0;
        std::vector<std::string> violated;  // rows or bounds violated beyond tolerance
    };

    /// Objective value and constraint residuals at a full variable assignment.
    Evaluation evaluate(const std::vector<double>& point, double tol = kTimeTol) const {
        Evaluation ev;
        for (const auto& t : objective_) ev.objective += t.coef * point[t.var];
        auto note = [&](const std::string& name, double excess) {
            ev.max_violation = std::max(ev.max_violation, excess);
            if (excess > tol) ev.violated.push_back(name);
        };
        for (const auto& r : rows_) {
            double lhs = 0.0;
            for (const auto& t : r.terms) lhs += t.coef * point[t.var];
            const double scale = std::max(1.0, std::abs(r.rhs));
            switch (r.sense) {
            case Sense::LessEqual: note(r.name, (lhs - r.rhs) / scale); break;
            case Sense::GreaterEqual: note(r.name, (r.rhs - lhs) / scale); break;
            case Sense::Equal: note(r.name, std::abs(lhs - r.rhs) / scale); break;
            }
        }
        for (std::size_t v = 0; v < vars_.size(); ++v) {
            note(vars_[v].name, vars_[v].lower - point[v]);
            if (std::isfinite(vars_[v].upper)) note(vars_[v].name, point[v] - vars_[v].upper);
            if (vars_[v].kind == VarKind::Binary) note(vars_[v].name, std::abs(point[v] - std::round(point[v])));
        }
        return ev;
    }

private:
    friend MilpModel build_model(const ProblemInstance&, double);

    std::size_t pair_index(std::size_t j, std::size_t k) const {
        // Row-major index of (j, k), j < k, in the strict upper triangle.
        return j * m_ - j * (j + 1) / 2 + (k - j - 1);
    }

    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::size_t pairs_ = 0;
    double big_m_ = 0.0;
    std::vector<Variable> vars_;
    std::vector<Term> objective_;
    std::vector<Row> rows_;
    RowCounts counts_;
    std::size_t fixed_zero_ = 0;
};

/// Builds the model. A non-positive big_m_override uses the instance's big-M.
inline MilpModel build_model(const ProblemInstance& inst, double big_m_override = 0.0) {
    MilpModel model;
    const std::size_t n = inst.num_robots();
    const std::size_t m = inst.num_tasks();
    model.n_ = n;
    model.m_ = m;
    model.pairs_ = m * (m - (m ? 1 : 0)) / 2;
    const double M = big_m_override > 0.0 ? big_m_override : inst.big_m();
    model.big_m_ = M;
    const auto& w = inst.weights();
    const bool robot_dependent = inst.cost_params().travel_mode == TravelMode::Duration && inst.cost_params().travel;

    auto& vars = model.vars_;
    vars.resize(MilpModel::expected_variable_count(n, m));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            auto& v = vars[model.x(i, j)];
            v = {"x_" + std::to_string(i) + "_" + std::to_string(j), VarKind::Binary, 0.0, 1.0};
            const auto& fz = inst.frozen(j);
            if (fz) {
                v.lower = v.upper = fz->first == i ? 1.0 : 0.0;
            } else if (!inst.feasible(i, j)) {
                v.upper = 0.0;
                ++model.fixed_zero_;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = j + 1; k < m; ++k)
                vars[model.y(i, j, k)] = {"y_" + std::to_string(i) + "_" + std::to_string(j) + "_" + std::to_string(k),
                                          VarKind::Binary, 0.0, 1.0};
    for (std::size_t j = 0; j < m; ++j) {
        auto& v = vars[model.s(j)];
        v = {"s_" + std::to_string(j), VarKind::Continuous, inst.release(j), kInfinity};
        if (const auto& fz = inst.frozen(j)) v.lower = v.upper = fz->second;
        else if (!robot_dependent && std::isfinite(inst.deadline(j)))
            v.upper = inst.deadline(j) - inst.task(j).duration;
    }
    for (std::size_t i = 0; i < n; ++i) vars[model.completion(i)] = {"Ci_" + std::to_string(i), VarKind::Continuous, 0.0, kInfinity};
    vars[model.makespan()] = {"Cmax", VarKind::Continuous, 0.0, kInfinity};

    model.objective_.push_back({model.makespan(), w.alpha});
    for (std::size_t i = 0; i < n; ++i) model.objective_.push_back({model.completion(i), w.beta});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) model.objective_.push_back({model.x(i, j), w.lambda * inst.cost(i, j)});

    auto& rows = model.rows_;
    auto& counts = model.counts_;
    const auto js = [](std::size_t v) { return std::to_string(v); };

    for (std::size_t j = 0; j < m; ++j) {
        Row r{"assign_" + js(j), {}, Sense::Equal, 1.0};
        for (std::size_t i = 0; i < n; ++i) r.terms.push_back({model.x(i, j), 1.0});
        rows.push_back(std::move(r));
        ++counts.assignment;
    }
    for (const auto& [k, j] : inst.edges()) {
        Row r{"prec_" + js(k) + "_" + js(j), {{model.s(j), 1.0}, {model.s(k), -1.0}}, Sense::GreaterEqual, 0.0};
        if (robot_dependent) {
            for (std::size_t i = 0; i < n; ++i) r.terms.push_back({model.x(i, k), -inst.duration(i, k)});
        } else {
            r.rhs = inst.task(k).duration;
        }
        rows.push_back(std::move(r));
        ++counts.precedence;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t k = j + 1; k < m; ++k) {
                const std::string tag = js(i) + "_" + js(j) + "_" + js(k);
                // s_j + d_j <= s_k + M(1 - y) + M(2 - x_ij - x_ik)
                rows.push_back({"noov1_" + tag,
                                {{model.s(j), 1.0}, {model.s(k), -1.0}, {model.y(i, j, k), M}, {model.x(i, j), M}, {model.x(i, k), M}},
                                Sense::LessEqual,
                                3.0 * M - inst.duration(i, j)});
                // s_k + d_k <= s_j + M y + M(2 - x_ij - x_ik)
                rows.push_back({"noov2_" + tag,
                                {{model.s(k), 1.0}, {model.s(j), -1.0}, {model.y(i, j, k), -M}, {model.x(i, j), M}, {model.x(i, k), M}},
                                Sense::LessEqual,
                                2.0 * M - inst.duration(i, k)});
                counts.disjunctive += 2;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            // C_i >= s_j + d_j - M(1 - x_ij)
            rows.push_back({"comp_" + js(i) + "_" + js(j),
                            {{model.completion(i), 1.0}, {model.s(j), -1.0}, {model.x(i, j), -M}},
                            Sense::GreaterEqual,
                            inst.duration(i, j) - M});
            ++counts.completion;
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        Row r{"mk_" + js(j), {{model.makespan(), 1.0}, {model.s(j), -1.0}}, Sense::GreaterEqual, 0.0};
        if (robot_dependent) {
            for (std::size_t i = 0; i < n; ++i) r.terms.push_back({model.x(i, j), -inst.duration(i, j)});
        } else {
            r.rhs = inst.task(j).duration;
        }
        rows.push_back(std::move(r));
        ++counts.makespan;
    }
    if (robot_dependent) {
        for (std::size_t j = 0; j < m; ++j) {
            if (!std::isfinite(inst.deadline(j)) || inst.frozen(j)) continue;
            Row r{"dl_" + js(j), {{model.s(j), 1.0}}, Sense::LessEqual, inst.deadline(j)};
            for (std::size_t i = 0; i < n; ++i) r.terms.push_back({model.x(i, j), inst.duration(i, j)});
            rows.push_back(std::move(r));
            ++counts.deadline;
        }
    }
    return model;
}

/// Maps a schedule onto model variables; y^i_jk = 1 iff j precedes k on robot i.
inline std::vector<double> point_from_schedule(const MilpModel& model, const ProblemInstance& inst,
                                               const Schedule& schedule) {
    std::vector<double> p(model.variables().size(), 0.0);
    std::vector<std::size_t> robot_of(inst.num_tasks(), inst.num_robots());
    for (const auto& e : schedule.entries) {
        auto i = inst.robot_index(e.robot_id);
        auto j = inst.task_index(e.task_id);
        if (!i || !j) continue;
        robot_of[*j] = *i;
        p[model.x(*i, *j)] = 1.0;
        p[model.s(*j)] = e.start;
    }
    for (std::size_t j = 0; j < inst.num_tasks(); ++j) {
        for (std::size_t k = j + 1; k < inst.num_tasks(); ++k) {
            if (robot_of[j] == robot_of[k] && robot_of[j] < inst.num_robots())
                p[model.y(robot_of[j], j, k)] = p[model.s(j)] <= p[model.s(k)] ? 1.0 : 0.0;
        }
    }
    for (std::size_t j = 0; j < inst.num_tasks(); ++j) {
        if (robot_of[j] >= inst.num_robots()) continue;
        const double finish = p[model.s(j)] + inst.duration(robot_of[j], j);
        p[model.completion(robot_of[j])] = std::max(p[model.completion(robot_of[j])], finish);
        p[model.makespan()] = std::max(p[model.makespan()], finish);
    }
    return p;
}

namespace detail {

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string format_terms(const MilpModel& model, const std::vector<Term>& terms, std::size_t wrap = 0) {
    std::string out;
    std::size_t written = 0;
    for (const auto& t : terms) {
        if (t.coef == 0.0) continue;
        if (wrap && written && written % wrap == 0) out += "\n   ";
        const bool neg = t.coef < 0.0;
        if (written == 0) out += neg ? "- " : "";
        else out += neg ? " - " : " + ";
        if (std::abs(t.coef) != 1.0) out += format_number(std::abs(t.coef)) + " ";
        out += model.variables()[t.var].name;
        ++written;
    }
    if (written == 0) out += "0 " + model.variables()[terms.empty() ? 0 : terms.front().var].name;
    return out;
}

} // namespace detail

/// CPLEX LP text with deterministic naming and 12 significant digits.
inline std::string export_lp(const MilpModel& model) {
    std::string out;
    out += "\\ makespan scheduling model: " + std::to_string(model.num_robots()) + " robots, " +
           std::to_string(model.num_tasks()) + " tasks, M = " + detail::format_number(model.big_m()) + "\n";
    out += "Minimize\n obj: " + detail::format_terms(model, model.objective(), 6) + "\n";
    out += "Subject To\n";
    for (const auto& r : model.rows()) {
        out += " " + r.name + ": " + detail::format_terms(model, r.terms);
        switch (r.sense) {
        case Sense::LessEqual: out += " <= "; break;
        case Sense::GreaterEqual: out += " >= "; break;
        case Sense::Equal: out += " = "; break;
        }
        out += detail::format_number(r.rhs) + "\n";
    }
    out += "Bounds\n";
    for (const auto& v : model.variables()) {
        if (v.kind == VarKind::Binary) {
            if (v.lower == v.upper) out += " " + v.name + " = " + detail::format_number(v.lower) + "\n";
            continue;
        }
        if (v.lower == v.upper) {
            out += " " + v.name + " = " + detail::format_number(v.lower) + "\n";
        } else if (std::isfinite(v.upper)) {
            out += " " + detail::format_number(v.lower) + " <= " + v.name + " <= " + detail::format_number(v.upper) + "\n";
        } else if (v.lower != 0.0) {
            out += " " + v.name + " >= " + detail::format_number(v.lower) + "\n";
        }
    }
    out += "Binaries\n";
    std::size_t on_line = 0;
    for (const auto& v : model.variables()) {
        if (v.kind != VarKind::Binary) continue;
        out += " " + v.name;
        if (++on_line == 10) {
            out += "\n";
            on_line = 0;
        }
    }
    if (on_line) out += "\n";
    out += "End\n";
    return out;
}

} // namespace mrsched::milp
