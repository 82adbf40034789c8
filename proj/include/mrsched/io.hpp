#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mrsched/schedule.hpp"

namespace mrsched {

using json = nlohmann::json;

namespace detail {

inline Grid<double> grid_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw Error(ErrorKind::ParseError, what + " must be an array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = rows ? j[0].size() : 0;
    Grid<double> g(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw Error(ErrorKind::DimensionMismatch, what + " rows must all have " + std::to_string(cols) + " entries");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) throw Error(ErrorKind::ParseError, what + " entries must be numbers");
            g(r, c) = j[r][c].get<double>();
        }
    }
    return g;
}

inline json grid_to_json(const Grid<double>& g) {
    json rows = json::array();
    for (std::size_t r = 0; r < g.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < g.cols(); ++c) row.push_back(g(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CapabilitySet caps_from_json(const json& j) {
    CapabilitySet caps;
    for (const auto& c : j) caps.insert(c.get<std::string>());
    return caps;
}

} // namespace detail

inline Task task_from_json(const json& j) {
    Task t;
    t.id = j.at("id").get<std::string>();
    t.description = j.value("description", std::string{});
    t.duration = j.at("duration").get<double>();
    if (j.contains("dependencies"))
        for (const auto& d : j.at("dependencies")) t.dependencies.push_back(d.get<std::string>());
    if (j.contains("required_capabilities")) t.required_capabilities = detail::caps_from_json(j.at("required_capabilities"));
    if (j.contains("constraints")) {
        const auto& c = j.at("constraints");
        if (c.contains("location") && !c.at("location").is_null()) t.location = c.at("location").get<std::string>();
        if (c.contains("time_window") && !c.at("time_window").is_null()) {
            const auto& w = c.at("time_window");
            if (!w.is_array() || w.size() != 2) throw Error(ErrorKind::ParseError, "time_window must be [release, deadline]");
            TimeWindow tw;
            tw.release = w[0].get<double>();
            tw.deadline = w[1].is_null() ? kInfinity : w[1].get<double>();
            t.time_window = tw;
        }
    }
    return t;
}

inline json task_to_json(const Task& t) {
    json j;
    j["id"] = t.id;
    j["description"] = t.description;
    j["duration"] = t.duration;
    j["dependencies"] = t.dependencies;
    j["required_capabilities"] = json(std::vector<std::string>(t.required_capabilities.begin(), t.required_capabilities.end()));
    json c = json::object();
    if (t.location) c["location"] = *t.location;
    if (t.time_window) {
        c["time_window"] = json::array({t.time_window->release, std::isfinite(t.time_window->deadline)
                                                                    ? json(t.time_window->deadline)
                                                                    : json(nullptr)});
    }
    if (!c.empty()) j["constraints"] = std::move(c);
    return j;
}

inline RobotProfile robot_from_json(const json& j) {
    RobotProfile r;
    r.id = j.at("id").get<std::string>();
    if (j.contains("capabilities")) r.capabilities = detail::caps_from_json(j.at("capabilities"));
    if (j.contains("speed") && !j.at("speed").is_null()) r.speed = j.at("speed").get<double>();
    if (j.contains("home_location") && !j.at("home_location").is_null())
        r.home_location = j.at("home_location").get<std::string>();
    r.available = j.value("available", true);
    return r;
}

inline json robot_to_json(const RobotProfile& r) {
    json j;
    j["id"] = r.id;
    j["capabilities"] = json(std::vector<std::string>(r.capabilities.begin(), r.capabilities.end()));
    if (r.speed) j["speed"] = *r.speed;
    if (r.home_location) j["home_location"] = *r.home_location;
    if (!r.available) j["available"] = false;
    return j;
}

inline InstanceSpec instance_spec_from_json(const json& j) {
    try {
        InstanceSpec spec;
        if (!j.is_object()) throw Error(ErrorKind::ParseError, "instance must be a JSON object");
        for (const auto& r : j.at("robots")) spec.robots.push_back(robot_from_json(r));
        for (const auto& t : j.at("tasks")) spec.tasks.push_back(task_from_json(t));
        if (j.contains("fitness") && !j.at("fitness").is_null()) spec.fitness = detail::grid_from_json(j.at("fitness"), "fitness");
        spec.fitness_raw = j.value("fitness_raw", false);
        if (j.contains("cost_params")) {
            const auto& c = j.at("cost_params");
            spec.cost_params.gamma = c.value("gamma", spec.cost_params.gamma);
            spec.cost_params.tau = c.value("tau", spec.cost_params.tau);
            if (c.contains("travel") && !c.at("travel").is_null())
                spec.cost_params.travel = detail::grid_from_json(c.at("travel"), "travel");
            const auto mode = c.value("travel_mode", std::string{"cost"});
            if (mode == "cost") spec.cost_params.travel_mode = TravelMode::CostTerm;
            else if (mode == "duration") spec.cost_params.travel_mode = TravelMode::Duration;
            else throw Error(ErrorKind::ParseError, "travel_mode must be 'cost' or 'duration'");
        }
        if (j.contains("weights")) {
            const auto& w = j.at("weights");
            spec.weights.alpha = w.value("alpha", spec.weights.alpha);
            spec.weights.beta = w.value("beta", spec.weights.beta);
            spec.weights.lambda = w.value("lambda", spec.weights.lambda);
        }
        if (j.contains("frozen")) {
            for (const auto& f : j.at("frozen"))
                spec.frozen.push_back({f.at("task_id").get<std::string>(), f.at("robot_id").get<std::string>(),
                                       f.at("start").get<double>()});
        }
        return spec;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("instance JSON: ") + e.what());
    }
}

inline json instance_spec_to_json(const InstanceSpec& spec) {
    json j;
    j["robots"] = json::array();
    for (const auto& r : spec.robots) j["robots"].push_back(robot_to_json(r));
    j["tasks"] = json::array();
    for (const auto& t : spec.tasks) j["tasks"].push_back(task_to_json(t));
    if (spec.fitness) j["fitness"] = detail::grid_to_json(*spec.fitness);
    if (spec.fitness_raw) j["fitness_raw"] = true;
    json c;
    c["gamma"] = spec.cost_params.gamma;
    c["tau"] = spec.cost_params.tau;
    if (spec.cost_params.travel) c["travel"] = detail::grid_to_json(*spec.cost_params.travel);
    c["travel_mode"] = spec.cost_params.travel_mode == TravelMode::CostTerm ? "cost" : "duration";
    j["cost_params"] = std::move(c);
    j["weights"] = {{"alpha", spec.weights.alpha}, {"beta", spec.weights.beta}, {"lambda", spec.weights.lambda}};
    if (!spec.frozen.empty()) {
        j["frozen"] = json::array();
        for (const auto& f : spec.frozen)
            j["frozen"].push_back({{"task_id", f.task_id}, {"robot_id", f.robot_id}, {"start", f.start}});
    }
    return j;
}

inline json schedule_to_json(const Schedule& s) {
    json arr = json::array();
    for (const auto& e : s.entries) {
        arr.push_back({{"task_id", e.task_id},
                       {"robot_id", e.robot_id},
                       {"start", e.start},
                       {"end", e.end},
                       {"metadata", json(e.metadata)}});
    }
    return arr;
}

/// Accepts the entry array, or an object with `entries` plus optional cached
/// `makespan` / `per_robot_completion` / `objective`. For a bare array the
/// cached fields are derived from the entry end times.
inline Schedule schedule_from_json(const json& j) {
    try {
        Schedule s;
        const json& arr = j.is_array() ? j : j.at("entries");
        for (const auto& e : arr) {
            ScheduleEntry entry;
            entry.task_id = e.at("task_id").get<std::string>();
            entry.robot_id = e.at("robot_id").get<std::string>();
            entry.start = e.at("start").get<double>();
            entry.end = e.at("end").get<double>();
            if (e.contains("metadata"))
                for (const auto& [k, v] : e.at("metadata").items())
                    entry.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
            s.entries.push_back(std::move(entry));
        }
        for (const auto& e : s.entries) {
            s.makespan = std::max(s.makespan, e.end);
            auto& c = s.per_robot_completion[e.robot_id];
            c = std::max(c, e.end);
        }
        if (j.is_object()) {
            if (j.contains("makespan")) s.makespan = j.at("makespan").get<double>();
            if (j.contains("per_robot_completion"))
                s.per_robot_completion = j.at("per_robot_completion").get<std::map<std::string, double>>();
            s.objective = j.value("objective", 0.0);
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("schedule JSON: ") + e.what());
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, "'" + path + "': " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(ErrorKind::ParseError, "write failed for '" + path + "'");
}

} // namespace mrsched
