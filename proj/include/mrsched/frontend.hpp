#pragma once

#include <algorithm>
#include <cctype>
#include <condition_variable>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>

#include "mrsched/io.hpp"

namespace mrsched {

struct Instruction {
    std::string text;
    /// Machine-readable task list; the mock provider reads only this.
    std::optional<json> structured_hint;
};

/// Provider output plus notes about how it was obtained ("degraded", "attempts", ...).
struct TaskListResult {
    json tasks;
    std::map<std::string, std::string> metadata;
};

struct FitnessResult {
    Grid<double> raw;
    std::map<std::string, std::string> metadata;
};

class DecompositionProvider {
public:
    virtual ~DecompositionProvider() = default;
    virtual TaskListResult decompose(const Instruction& instruction, const std::vector<RobotProfile>& robots) const = 0;
};

class FitnessProvider {
public:
    virtual ~FitnessProvider() = default;
    /// Raw n x m scores (robots x tasks); normalized later by the core.
    virtual FitnessResult score(const std::vector<RobotProfile>& robots, const std::vector<Task>& tasks) const = 0;
};

/// Parses and checks a task-list document: an array of task objects, or an
/// object with a "tasks" array. Throws SchemaInvalid with the first problem.
inline std::vector<Task> validate_task_list(const json& doc) {
    const json* arr = &doc;
    if (doc.is_object() && doc.contains("tasks")) arr = &doc.at("tasks");
    if (!arr->is_array()) throw Error(ErrorKind::SchemaInvalid, "task list must be a JSON array");
    std::vector<Task> tasks;
    std::set<std::string> ids;
    for (std::size_t k = 0; k < arr->size(); ++k) {
        const auto& t = (*arr)[k];
        const std::string where = "task #" + std::to_string(k);
        if (!t.is_object()) throw Error(ErrorKind::SchemaInvalid, where + " is not an object");
        if (!t.contains("id") || !t["id"].is_string() || t["id"].get<std::string>().empty())
            throw Error(ErrorKind::SchemaInvalid, where + " needs a non-empty string id");
        if (!t.contains("duration") || !t["duration"].is_number())
            throw Error(ErrorKind::SchemaInvalid, where + " needs a numeric duration");
        if (t.contains("dependencies")) {
            if (!t["dependencies"].is_array()) throw Error(ErrorKind::SchemaInvalid, where + " dependencies must be an array");
            for (const auto& d : t["dependencies"])
                if (!d.is_string()) throw Error(ErrorKind::SchemaInvalid, where + " dependencies must be strings");
        }
        if (t.contains("required_capabilities")) {
            if (!t["required_capabilities"].is_array())
                throw Error(ErrorKind::SchemaInvalid, where + " required_capabilities must be an array");
            for (const auto& c : t["required_capabilities"])
                if (!c.is_string()) throw Error(ErrorKind::SchemaInvalid, where + " capabilities must be strings");
        }
        if (t.contains("description") && !t["description"].is_string())
            throw Error(ErrorKind::SchemaInvalid, where + " description must be a string");
        Task task;
        try {
            task = task_from_json(t);
        } catch (const std::exception& e) {
            throw Error(ErrorKind::SchemaInvalid, where + ": " + e.what());
        }
        if (!ids.insert(task.id).second) throw Error(ErrorKind::SchemaInvalid, "duplicate task id '" + task.id + "'");
        tasks.push_back(std::move(task));
    }
    for (const auto& t : tasks)
        for (const auto& d : t.dependencies)
            if (!ids.count(d))
                throw Error(ErrorKind::SchemaInvalid, "task '" + t.id + "' depends on unknown task '" + d + "'");
    return tasks;
}

/// Accepts an n x m array of numbers, or an object with a "fitness" array.
inline Grid<double> validate_fitness(const json& doc, std::size_t n, std::size_t m) {
    const json* arr = &doc;
    if (doc.is_object() && doc.contains("fitness")) arr = &doc.at("fitness");
    if (!arr->is_array() || arr->size() != n)
        throw Error(ErrorKind::SchemaInvalid, "fitness must be an array of " + std::to_string(n) + " rows");
    Grid<double> g(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = (*arr)[i];
        if (!row.is_array() || row.size() != m)
            throw Error(ErrorKind::SchemaInvalid, "fitness row " + std::to_string(i) + " must have " +
                                                      std::to_string(m) + " entries");
        for (std::size_t j = 0; j < m; ++j) {
            if (!row[j].is_number()) throw Error(ErrorKind::SchemaInvalid, "fitness entries must be numbers");
            const double v = row[j].get<double>();
            if (!std::isfinite(v)) throw Error(ErrorKind::SchemaInvalid, "fitness entries must be finite");
            g(i, j) = v;
        }
    }
    return g;
}

/// First balanced top-level JSON object or array in free text that parses.
inline std::optional<json> extract_first_json(const std::string& text) {
    for (std::size_t begin = 0; begin < text.size(); ++begin) {
        if (text[begin] != '{' && text[begin] != '[') continue;
        std::vector<char> stack;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t k = begin; k < text.size(); ++k) {
            const char c = text[k];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{' || c == '[') stack.push_back(c);
            else if (c == '}' || c == ']') {
                if (stack.empty() || (c == '}') != (stack.back() == '{')) break;
                stack.pop_back();
                if (stack.empty()) {
                    auto parsed = json::parse(text.begin() + begin, text.begin() + k + 1, nullptr, false);
                    if (!parsed.is_discarded()) return parsed;
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

/// Replaces {name} placeholders; unknown placeholders are left as they are.
inline std::string render_template(const std::string& tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t k = 0; k < tmpl.size();) {
        if (tmpl[k] == '{') {
            const auto close = tmpl.find('}', k);
            if (close != std::string::npos) {
                auto it = values.find(tmpl.substr(k + 1, close - k - 1));
                if (it != values.end()) {
                    out += it->second;
                    k = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[k++];
    }
    return out;
}

inline json robots_to_json(const std::vector<RobotProfile>& robots) {
    json arr = json::array();
    for (const auto& r : robots) arr.push_back(robot_to_json(r));
    return arr;
}

inline json tasks_to_json(const std::vector<Task>& tasks) {
    json arr = json::array();
    for (const auto& t : tasks) arr.push_back(task_to_json(t));
    return arr;
}

// ---------------------------------------------------------------- mock providers

inline json mock_decompose(const Instruction& instruction, const std::vector<RobotProfile>& /*robots*/) {
    if (!instruction.structured_hint)
        throw Error(ErrorKind::MissingHint, "the mock decomposer needs a structured hint");
    const json& hint = *instruction.structured_hint;
    const json& arr = hint.is_object() && hint.contains("tasks") ? hint.at("tasks") : hint;
    if (arr.is_array() && arr.empty()) throw Error(ErrorKind::EmptyTaskList, "the hint contains no tasks");
    return tasks_to_json(validate_task_list(arr));
}

/// Adds `bonus` to f_ij when task j carries `task_tag` (as a required
/// capability or a description word) and robot i has `robot_capability`.
struct FitnessRule {
    std::string task_tag;
    std::string robot_capability;
    double bonus = 0.5;
};

namespace detail {

inline std::set<std::string> words(const std::string& text) {
    std::set<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.insert(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.insert(cur);
    return out;
}

} // namespace detail

/// 0 when the robot lacks a required capability; otherwise 0.5 plus matching
/// rule bonuses, clamped to [0, 1].
inline Grid<double> mock_fitness(const std::vector<RobotProfile>& robots, const std::vector<Task>& tasks,
                                 const std::vector<FitnessRule>& rules) {
    Grid<double> f(robots.size(), tasks.size());
    for (std::size_t j = 0; j < tasks.size(); ++j) {
        const auto& t = tasks[j];
        const auto desc = detail::words(t.description);
        for (std::size_t i = 0; i < robots.size(); ++i) {
            const auto& caps = robots[i].capabilities;
            if (!std::includes(caps.begin(), caps.end(), t.required_capabilities.begin(),
                               t.required_capabilities.end())) {
                f(i, j) = 0.0;
                continue;
            }
            double v = 0.5;
            for (const auto& r : rules) {
                const bool tagged = t.required_capabilities.count(r.task_tag) || desc.count(r.task_tag);
                if (tagged && caps.count(r.robot_capability)) v += r.bonus;
            }
            f(i, j) = std::clamp(v, 0.0, 1.0);
        }
    }
    return f;
}

inline std::vector<FitnessRule> fitness_rules_from_json(const json& j) {
    std::vector<FitnessRule> rules;
    for (const auto& r : j)
        rules.push_back({r.at("task_tag").get<std::string>(), r.at("robot_capability").get<std::string>(),
                         r.value("bonus", 0.5)});
    return rules;
}

inline json fitness_rules_to_json(const std::vector<FitnessRule>& rules) {
    json arr = json::array();
    for (const auto& r : rules)
        arr.push_back({{"task_tag", r.task_tag}, {"robot_capability", r.robot_capability}, {"bonus", r.bonus}});
    return arr;
}

class MockDecomposer : public DecompositionProvider {
public:
    TaskListResult decompose(const Instruction& instruction, const std::vector<RobotProfile>& robots) const override {
        return {mock_decompose(instruction, robots), {{"provider", "mock"}}};
    }
};

class MockFitness : public FitnessProvider {
public:
    explicit MockFitness(std::vector<FitnessRule> rules = {}) : rules_(std::move(rules)) {}
    FitnessResult score(const std::vector<RobotProfile>& robots, const std::vector<Task>& tasks) const override {
        return {mock_fitness(robots, tasks, rules_), {{"provider", "mock"}}};
    }

private:
    std::vector<FitnessRule> rules_;
};

/// Every robot scores 1.0 for every task.
class UniformFitness : public FitnessProvider {
public:
    FitnessResult score(const std::vector<RobotProfile>& robots, const std::vector<Task>& tasks) const override {
        return {Grid<double>(robots.size(), tasks.size(), 1.0), {{"provider", "uniform"}}};
    }
};

// ---------------------------------------------------------------- HTTP plumbing

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string path = "/v1/chat/completions";
    std::string model = "default";
    /// Name of the environment variable holding the bearer token; empty for none.
    std::string token_env = "MRSCHED_LLM_TOKEN";
    double timeout_seconds = 30.0;
    std::size_t max_response_bytes = 1 << 20;
    std::size_t max_in_flight = 4;
};

/// Counting gate shared by every client created from the same limiter.
class InFlightLimiter {
public:
    explicit InFlightLimiter(std::size_t slots) : free_(std::max<std::size_t>(slots, 1)) {}

    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return free_ > 0; });
        --free_;
    }
    void release() {
        {
            std::lock_guard lock(mu_);
            ++free_;
        }
        cv_.notify_one();
    }

    static std::shared_ptr<InFlightLimiter> global(std::size_t slots) {
        static std::mutex mu;
        static std::shared_ptr<InFlightLimiter> inst;
        std::lock_guard lock(mu);
        if (!inst) inst = std::make_shared<InFlightLimiter>(slots);
        return inst;
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t free_;
};

/// Minimal chat-completions client: one user message in, message content out.
class ChatClient {
public:
    explicit ChatClient(EndpointConfig config, std::shared_ptr<InFlightLimiter> limiter = nullptr)
        : config_(std::move(config)),
          limiter_(limiter ? std::move(limiter) : InFlightLimiter::global(config_.max_in_flight)) {}

    std::string complete(const std::string& prompt) const {
        limiter_->acquire();
        struct Release {
            InFlightLimiter* l;
            ~Release() { l->release(); }
        } guard{limiter_.get()};

        httplib::Client client(config_.base_url);
        const auto secs = static_cast<time_t>(config_.timeout_seconds);
        const auto usecs = static_cast<time_t>((config_.timeout_seconds - double(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!config_.token_env.empty()) {
            if (const char* tok = std::getenv(config_.token_env.c_str()); tok && *tok)
                headers.emplace("Authorization", std::string("Bearer ") + tok);
        }
        json body = {{"model", config_.model},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                     {"temperature", 0}};
        auto res = client.Post(config_.path, headers, body.dump(), "application/json");
        if (!res) {
            const auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                throw Error(ErrorKind::Timeout, "endpoint timed out: " + httplib::to_string(err));
            throw Error(ErrorKind::TransportError, "endpoint unreachable: " + httplib::to_string(err));
        }
        if (res->status != 200) throw Error(ErrorKind::TransportError, "endpoint returned HTTP " + std::to_string(res->status));
        if (res->body.size() > config_.max_response_bytes)
            throw Error(ErrorKind::TransportError, "response exceeds " + std::to_string(config_.max_response_bytes) + " bytes");
        auto doc = json::parse(res->body, nullptr, false);
        if (doc.is_discarded()) throw Error(ErrorKind::TransportError, "response body is not JSON");
        try {
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            throw Error(ErrorKind::TransportError, "response lacks choices[0].message.content");
        }
    }

    const EndpointConfig& config() const noexcept { return config_; }

private:
    EndpointConfig config_;
    std::shared_ptr<InFlightLimiter> limiter_;
};

namespace detail {

inline std::string repair_prompt(const std::string& prompt, const std::string& problem) {
    return prompt + "\n\nYour previous reply could not be used: " + problem +
           "\nReply again with only the corrected JSON.";
}

/// Sends the prompt, extracts JSON and runs `check`, re-prompting with the
/// error up to `retries` times. Transport failures are not retried.
template <typename Check>
auto ask_with_retries(const ChatClient& client, const std::string& prompt, std::size_t retries, const Check& check,
                      std::map<std::string, std::string>& meta) {
    std::string current = prompt;
    std::string problem;
    for (std::size_t attempt = 0; attempt <= retries; ++attempt) {
        meta["attempts"] = std::to_string(attempt + 1);
        const std::string reply = client.complete(current);
        auto doc = extract_first_json(reply);
        if (!doc) {
            problem = "no JSON value found";
        } else {
            try {
                return check(*doc);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::SchemaInvalid) throw;
                problem = e.what();
            }
        }
        current = repair_prompt(prompt, problem);
    }
    throw Error(ErrorKind::SchemaInvalidAfterRetries, "still invalid after " + std::to_string(retries) +
                                                          " retries: " + problem);
}

} // namespace detail

/// Task decomposition through a chat endpoint. On transport or schema failure
/// it falls back to `fallback` and records the degradation in the metadata.
class HttpDecomposer : public DecompositionProvider {
public:
    HttpDecomposer(ChatClient client, std::string prompt_template, std::size_t retries = 2,
                   std::shared_ptr<const DecompositionProvider> fallback = std::make_shared<MockDecomposer>())
        : client_(std::move(client)),
          template_(std::move(prompt_template)),
          retries_(retries),
          fallback_(std::move(fallback)) {}

    TaskListResult decompose(const Instruction& instruction, const std::vector<RobotProfile>& robots) const override {
        TaskListResult out;
        out.metadata["provider"] = "http";
        const auto prompt = render_template(template_, {{"instruction", instruction.text},
                                                        {"robot_profiles", robots_to_json(robots).dump()}});
        try {
            out.tasks = detail::ask_with_retries(
                client_, prompt, retries_,
                [](const json& doc) {
                    auto tasks = validate_task_list(doc);
                    if (tasks.empty()) throw Error(ErrorKind::SchemaInvalid, "task list is empty");
                    return tasks_to_json(tasks);
                },
                out.metadata);
            return out;
        } catch (const Error& e) {
            if (!fallback_) throw;
            auto fb = fallback_->decompose(instruction, robots);
            fb.metadata["degraded"] = "true";
            fb.metadata["degradation_reason"] = std::string(to_string(e.kind())) + ": " + e.what();
            if (out.metadata.count("attempts")) fb.metadata["attempts"] = out.metadata["attempts"];
            return fb;
        }
    }

private:
    ChatClient client_;
    std::string template_;
    std::size_t retries_;
    std::shared_ptr<const DecompositionProvider> fallback_;
};

/// Fitness grading through a chat endpoint; falls back to uniform scores.
class HttpFitness : public FitnessProvider {
public:
    HttpFitness(ChatClient client, std::string prompt_template, std::size_t retries = 2,
                std::shared_ptr<const FitnessProvider> fallback = std::make_shared<UniformFitness>())
        : client_(std::move(client)),
          template_(std::move(prompt_template)),
          retries_(retries),
          fallback_(std::move(fallback)) {}

    FitnessResult score(const std::vector<RobotProfile>& robots, const std::vector<Task>& tasks) const override {
        FitnessResult out;
        out.metadata["provider"] = "http";
        const auto prompt = render_template(template_, {{"robot_profiles", robots_to_json(robots).dump()},
                                                        {"task_list", tasks_to_json(tasks).dump()}});
        try {
            out.raw = detail::ask_with_retries(
                client_, prompt, retries_,
                [&](const json& doc) { return validate_fitness(doc, robots.size(), tasks.size()); }, out.metadata);
            return out;
        } catch (const Error& e) {
            if (!fallback_) throw;
            auto fb = fallback_->score(robots, tasks);
            fb.metadata["degraded"] = "true";
            fb.metadata["degradation_reason"] = std::string(to_string(e.kind())) + ": " + e.what();
            return fb;
        }
    }

private:
    ChatClient client_;
    std::string template_;
    std::size_t retries_;
    std::shared_ptr<const FitnessProvider> fallback_;
};

/// Instruction and team in, unvalidated instance data out: tasks from the
/// decomposer and raw fitness from the grader.
struct FrontendOutput {
    InstanceSpec spec;
    std::map<std::string, std::string> metadata;
};

inline FrontendOutput run_frontend(const Instruction& instruction, const std::vector<RobotProfile>& robots,
                                   const DecompositionProvider& decomposer, const FitnessProvider& grader) {
    if (instruction.text.empty()) throw Error(ErrorKind::InvalidValue, "instruction text must not be empty");
    FrontendOutput out;
    auto tl = decomposer.decompose(instruction, robots);
    out.spec.robots = robots;
    out.spec.tasks = validate_task_list(tl.tasks);
    if (out.spec.tasks.empty()) throw Error(ErrorKind::EmptyTaskList, "decomposition produced no tasks");
    auto fit = grader.score(robots, out.spec.tasks);
    if (fit.raw.rows() != robots.size() || fit.raw.cols() != out.spec.tasks.size())
        throw Error(ErrorKind::DimensionMismatch, "fitness provider returned the wrong shape");
    out.spec.fitness = fit.raw;
    out.spec.fitness_raw = true;
    for (const auto& [k, v] : tl.metadata) out.metadata["decompose." + k] = v;
    for (const auto& [k, v] : fit.metadata) out.metadata["fitness." + k] = v;
    return out;
}

} // namespace mrsched
