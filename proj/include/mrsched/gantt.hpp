#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "mrsched/schedule.hpp"

namespace mrsched::gantt {

namespace detail {

inline std::vector<std::string> lanes(const Schedule& s) {
    std::set<std::string> ids;
    for (const auto& e : s.entries) ids.insert(e.robot_id);
    for (const auto& [r, c] : s.per_robot_completion) ids.insert(r);
    return {ids.begin(), ids.end()};
}

inline double span(const Schedule& s) {
    double end = s.makespan;
    for (const auto& e : s.entries) end = std::max(end, e.end);
    return end > 0.0 ? end : 1.0;
}

inline std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

/// Tick spacing of 1, 2 or 5 times a power of ten giving at most ~10 ticks.
inline double tick_step(double span) {
    const double raw = span / 10.0;
    const double p = std::pow(10.0, std::floor(std::log10(raw)));
    for (double k : {1.0, 2.0, 5.0, 10.0})
        if (k * p >= raw) return k * p;
    return 10.0 * p;
}

} // namespace detail

/// One row per robot; each bar covers its time-proportional columns and is
/// labelled with as much of the task id as fits.
inline std::string render_ascii(const Schedule& s, std::size_t width = 60) {
    const auto robots = detail::lanes(s);
    const double span = detail::span(s);
    const double scale = static_cast<double>(width) / span;
    std::size_t label = 5;
    for (const auto& r : robots) label = std::max(label, r.size());
    std::string out = std::string(label, ' ') + " |0" + std::string(width > 1 ? width - 1 : 0, ' ') + "| " +
                      detail::fixed(span) + "\n";
    for (const auto& r : robots) {
        std::string row(width, ' ');
        std::vector<const ScheduleEntry*> es;
        for (const auto& e : s.entries)
            if (e.robot_id == r) es.push_back(&e);
        std::sort(es.begin(), es.end(), [](auto* a, auto* b) { return a->start < b->start; });
        for (const auto* e : es) {
            auto a = static_cast<std::size_t>(std::floor(e->start * scale + 1e-9));
            auto b = static_cast<std::size_t>(std::lround(e->end * scale));
            a = std::min(a, width - 1);
            b = std::clamp(b, a + 1, width);
            for (std::size_t c = a; c < b; ++c) row[c] = '=';
            row[a] = '[';
            if (b - a >= 2) row[b - 1] = ']';
            for (std::size_t k = 0; k < e->task_id.size() && a + 1 + k < b - 1; ++k) row[a + 1 + k] = e->task_id[k];
        }
        out += r + std::string(label - r.size(), ' ') + " |" + row + "|\n";
    }
    return out;
}

/// SVG with one lane per robot, a rectangle per entry and a time axis.
inline std::string render_svg(const Schedule& s) {
    const auto robots = detail::lanes(s);
    const double span = detail::span(s);
    const double left = 90.0;
    const double chart = 800.0;
    const double lane = 32.0;
    const double top = 20.0;
    const double scale = chart / span;
    const double axis_y = top + lane * static_cast<double>(robots.size()) + 6.0;
    const double width = left + chart + 30.0;
    const double height = axis_y + 30.0;
    using detail::fixed;
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" + fixed(height, 0) +
           "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0) + "\" font-family=\"monospace\" font-size=\"12\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + fixed(width, 0) + "\" height=\"" + fixed(height, 0) + "\" fill=\"white\"/>\n";
    for (std::size_t k = 0; k < robots.size(); ++k) {
        const double y = top + lane * static_cast<double>(k);
        out += "<g class=\"lane\" data-robot=\"" + detail::escape(robots[k]) + "\">\n";
        out += "<text x=\"4\" y=\"" + fixed(y + lane / 2 + 4) + "\">" + detail::escape(robots[k]) + "</text>\n";
        out += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(y + lane) + "\" x2=\"" + fixed(left + chart) + "\" y2=\"" +
               fixed(y + lane) + "\" stroke=\"#ddd\"/>\n";
        std::vector<const ScheduleEntry*> es;
        for (const auto& e : s.entries)
            if (e.robot_id == robots[k]) es.push_back(&e);
        std::sort(es.begin(), es.end(),
                  [](auto* a, auto* b) { return a->start != b->start ? a->start < b->start : a->task_id < b->task_id; });
        for (const auto* e : es) {
            const double x = left + e->start * scale;
            const double w = (e->end - e->start) * scale;
            out += "<rect class=\"task\" data-task=\"" + detail::escape(e->task_id) + "\" x=\"" + fixed(x) + "\" y=\"" +
                   fixed(y + 4) + "\" width=\"" + fixed(w) + "\" height=\"" + fixed(lane - 8) +
                   "\" fill=\"#8fb8de\" stroke=\"#335\"/>\n";
            out += "<text x=\"" + fixed(x + 3) + "\" y=\"" + fixed(y + lane / 2 + 4) + "\">" +
                   detail::escape(e->task_id) + "</text>\n";
        }
        out += "</g>\n";
    }
    out += "<g class=\"axis\">\n";
    out += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(axis_y) + "\" x2=\"" + fixed(left + chart) + "\" y2=\"" +
           fixed(axis_y) + "\" stroke=\"black\"/>\n";
    const double step = detail::tick_step(span);
    const int digits = std::max(0, -static_cast<int>(std::floor(std::log10(step) + 1e-9)));
    for (int k = 0;; ++k) {
        const double t = step * k;
        if (t > span + 1e-9) break;
        const double x = left + t * scale;
        out += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(axis_y) + "\" x2=\"" + fixed(x) + "\" y2=\"" +
               fixed(axis_y + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + fixed(x - 4) + "\" y=\"" + fixed(axis_y + 18) + "\">" + fixed(t, digits) +
               "</text>\n";
    }
    out += "</g>\n</svg>\n";
    return out;
}

} // namespace mrsched::gantt
