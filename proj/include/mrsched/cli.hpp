#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrsched/allocator.hpp"
#include "mrsched/bench.hpp"
#include "mrsched/frontend.hpp"
#include "mrsched/gantt.hpp"
#include "mrsched/io.hpp"
#include "mrsched/milp_model.hpp"
#include "mrsched/sim.hpp"
#include "mrsched/verify.hpp"

namespace mrsched::cli {

enum ExitCode : int { Ok = 0, Usage = 1, InfeasibleExit = 2, VerifyFailed = 3 };

inline int exit_code_for(ErrorKind k) {
    switch (k) {
    case ErrorKind::CyclicDependency:
    case ErrorKind::NoFeasibleRobot:
    case ErrorKind::Infeasible:
    case ErrorKind::FrozenInfeasible:
    case ErrorKind::ReplanInfeasible:
    case ErrorKind::Stalled:
    case ErrorKind::RoundLimit:
        return InfeasibleExit;
    default:
        return Usage;
    }
}

struct CliConfig {
    std::string subcommand;
    std::vector<std::string> inputs;
    std::string out;
    std::string allocator = "milp";
    double time_limit = 120.0;
    double gap_rel = 0.01;
    std::optional<std::uint64_t> seed;
    std::string format;
    unsigned threads = 1;
    std::optional<std::uint64_t> node_limit;
    std::size_t width = 60;
    std::string endpoint;
    std::string templates = "templates";
};

namespace detail {

inline std::string one_line(std::string s) {
    for (auto& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

inline void emit(const CliConfig& cfg, std::ostream& out, const std::string& text) {
    if (cfg.out.empty()) out << text;
    else write_text_file(cfg.out, text);
}

inline PlanOptions plan_options(const CliConfig& cfg) {
    PlanOptions o;
    o.kind = parse_allocator(cfg.allocator);
    o.solve.time_limit = cfg.time_limit;
    o.solve.gap_rel = cfg.gap_rel;
    o.solve.threads = cfg.threads;
    o.solve.node_limit = cfg.node_limit;
    if (cfg.seed) o.solve.rng_seed = *cfg.seed;
    return o;
}

inline ProblemInstance load_instance(const std::string& path) {
    return validate_instance(instance_spec_from_json(read_json_file(path)));
}

inline std::string base_dir(const std::string& path) {
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? "." : path.substr(0, slash);
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ParseError, "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline int cmd_plan(const CliConfig& cfg, std::ostream& out) {
    const auto inst = load_instance(cfg.inputs.at(0));
    const auto outcome = plan(inst, plan_options(cfg));
    const std::string text = schedule_to_json(outcome.schedule).dump(2) + "\n";
    if (cfg.out.empty()) {
        out << text;
        return Ok;
    }
    write_text_file(cfg.out, text);
    out << "status: " << outcome.status << "\n";
    out << "makespan: " << json(outcome.schedule.makespan).dump() << "\n";
    out << "objective: " << json(outcome.schedule.objective).dump() << "\n";
    if (outcome.solve) out << "gap: " << json(outcome.solve->gap).dump() << "\n";
    return Ok;
}

inline int cmd_check(const CliConfig& cfg, std::ostream& out) {
    const auto inst = load_instance(cfg.inputs.at(0));
    const auto schedule = schedule_from_json(read_json_file(cfg.inputs.at(1)));
    const auto violations = check_schedule(schedule, inst);
    for (const auto& v : violations)
        out << to_string(v.family) << ": " << v.message << " (slack " << json(v.slack).dump() << ")\n";
    if (violations.empty()) {
        out << "ok: no violations\n";
        return Ok;
    }
    return VerifyFailed;
}

inline int cmd_simulate(const CliConfig& cfg, std::ostream& out) {
    const auto& path = cfg.inputs.at(0);
    auto scenario = scenario_from_json(read_json_file(path), base_dir(path));
    if (cfg.seed) scenario.config.rng_seed = *cfg.seed;
    const auto inst = validate_instance(scenario.instance);
    const auto opts = plan_options(cfg);
    const Schedule initial = scenario.schedule ? *scenario.schedule : plan(inst, opts).schedule;
    MockFitness mock(scenario.fitness_rules);
    const FitnessProvider* rescorer = scenario.fitness_rules.empty() ? nullptr : &mock;
    const auto result = run_episode(inst, initial, scenario.config, opts, rescorer);
    if (cfg.out.empty()) {
        out << result.trace_text();
    } else {
        write_text_file(cfg.out, result.trace_text());
        const auto& m = result.metrics;
        json counts = json::object();
        for (const auto& [k, v] : m.trigger_counts) counts[k] = v;
        out << json{{"success", m.success},
                    {"planned_makespan", m.planned_makespan},
                    {"realized_makespan", m.realized_makespan},
                    {"idle_total", m.total_idle_time},
                    {"replans", m.replan_count},
                    {"triggers", counts},
                    {"cause", m.failure_cause}}
                   .dump(2)
            << "\n";
    }
    if (result.metrics.failure_cause.rfind("ReplanInfeasible", 0) == 0) return InfeasibleExit;
    return Ok;
}

inline int cmd_bench(const CliConfig& cfg, std::ostream& out) {
    auto grid = bench::grid_from_json(read_json_file(cfg.inputs.at(0)));
    if (cfg.seed) grid.sim.rng_seed = *cfg.seed;
    if (cfg.threads > 1) grid.threads = cfg.threads;
    const auto format = cfg.format.empty() ? std::string("markdown") : cfg.format;
    if (format != "markdown" && format != "csv") throw Error(ErrorKind::ParseError, "unknown format '" + format + "'");
    const auto records = bench::run_grid(grid);
    if (cfg.out.empty()) {
        out << (format == "csv" ? bench::to_csv(records) : bench::to_markdown(records));
        return Ok;
    }
    write_text_file(cfg.out + ".csv", bench::to_csv(records));
    write_text_file(cfg.out + ".md", bench::to_markdown(records));
    out << "wrote " << cfg.out << ".csv and " << cfg.out << ".md (" << records.size() << " cells)\n";
    return Ok;
}

inline int cmd_render(const CliConfig& cfg, std::ostream& out) {
    const auto records = bench::from_csv(read_text(cfg.inputs.at(0)));
    emit(cfg, out, bench::to_markdown(records));
    return Ok;
}

inline int cmd_export_lp(const CliConfig& cfg, std::ostream& out) {
    const auto inst = load_instance(cfg.inputs.at(0));
    emit(cfg, out, milp::export_lp(milp::build_model(inst)));
    return Ok;
}

inline int cmd_gantt(const CliConfig& cfg, std::ostream& out) {
    const auto format = cfg.format.empty() ? std::string("ascii") : cfg.format;
    if (format != "ascii" && format != "svg") throw Error(ErrorKind::ParseError, "unknown format '" + format + "'");
    const auto schedule = schedule_from_json(read_json_file(cfg.inputs.at(0)));
    emit(cfg, out, format == "svg" ? gantt::render_svg(schedule) : gantt::render_ascii(schedule, cfg.width));
    return Ok;
}

/// Request: {"instruction": "...", "structured_hint": [...], "robots": [...],
/// "fitness_rules": [...]}. Mock providers unless an endpoint is given.
inline int cmd_compose(const CliConfig& cfg, std::ostream& out) {
    const auto req = read_json_file(cfg.inputs.at(0));
    Instruction instruction;
    std::vector<RobotProfile> robots;
    std::vector<FitnessRule> rules;
    try {
        instruction.text = req.at("instruction").get<std::string>();
        if (req.contains("structured_hint")) instruction.structured_hint = req.at("structured_hint");
        for (const auto& r : req.at("robots")) robots.push_back(robot_from_json(r));
        if (req.contains("fitness_rules")) rules = fitness_rules_from_json(req.at("fitness_rules"));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("compose request: ") + e.what());
    }
    FrontendOutput result;
    if (cfg.endpoint.empty()) {
        result = run_frontend(instruction, robots, MockDecomposer{}, MockFitness{rules});
    } else {
        EndpointConfig ec;
        ec.base_url = cfg.endpoint;
        ChatClient client(ec);
        HttpDecomposer dec(client, read_text(cfg.templates + "/decompose.txt"));
        HttpFitness fit(client, read_text(cfg.templates + "/fitness.txt"), 2, std::make_shared<MockFitness>(rules));
        result = run_frontend(instruction, robots, dec, fit);
    }
    json doc = instance_spec_to_json(result.spec);
    json meta = json::object();
    for (const auto& [k, v] : result.metadata) meta[k] = v;
    doc["metadata"] = meta;
    emit(cfg, out, doc.dump(2) + "\n");
    return Ok;
}

} // namespace detail

/// Parses arguments (without the program name) and runs one subcommand.
/// Errors print a single "error: <Kind>: <message>" line to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"mrsched: multi-robot task scheduling"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "mrsched 0.1.0");
    CliConfig cfg;

    auto common_solve = [&](CLI::App* sub) {
        sub->add_option("--allocator", cfg.allocator, "milp, auction or greedy")
            ->check(CLI::IsMember({"milp", "auction", "greedy"}));
        sub->add_option("--time-limit", cfg.time_limit, "solver time limit in seconds")->check(CLI::PositiveNumber);
        sub->add_option("--gap-rel", cfg.gap_rel, "relative optimality gap to stop at")->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", cfg.threads, "solver worker threads")->check(CLI::PositiveNumber);
        sub->add_option_function<std::uint64_t>(
            "--node-limit", [&](const std::uint64_t& n) { cfg.node_limit = n; }, "branch-and-bound node cap");
    };
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { cfg.seed = s; }, "RNG seed");
    };
    std::string in1;
    std::string in2;

    auto* plan_cmd = app.add_subcommand("plan", "solve an instance and write the schedule");
    plan_cmd->add_option("instance", in1, "instance JSON")->required();
    common_solve(plan_cmd);
    add_seed(plan_cmd);
    plan_cmd->add_option("--out", cfg.out, "schedule output path (stdout when omitted)");

    auto* check_cmd = app.add_subcommand("check", "verify a schedule against an instance");
    check_cmd->add_option("instance", in1, "instance JSON")->required();
    check_cmd->add_option("schedule", in2, "schedule JSON")->required();

    auto* sim_cmd = app.add_subcommand("simulate", "execute a scenario with replanning");
    sim_cmd->add_option("scenario", in1, "scenario JSON")->required();
    common_solve(sim_cmd);
    add_seed(sim_cmd);
    sim_cmd->add_option("--out", cfg.out, "trace output path (stdout when omitted)");

    auto* bench_cmd = app.add_subcommand("bench", "run an ablation grid");
    bench_cmd->add_option("grid", in1, "grid spec JSON")->required();
    add_seed(bench_cmd);
    bench_cmd->add_option("--threads", cfg.threads, "parallel grid cells")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--format", cfg.format, "markdown or csv");
    bench_cmd->add_option("--out", cfg.out, "output prefix; writes <prefix>.csv and <prefix>.md");

    auto* render_cmd = app.add_subcommand("render", "re-render a markdown report from a stored CSV");
    render_cmd->add_option("csv", in1, "bench CSV")->required();
    render_cmd->add_option("--out", cfg.out, "output path");

    auto* lp_cmd = app.add_subcommand("export-lp", "write the MILP model in LP format");
    lp_cmd->add_option("instance", in1, "instance JSON")->required();
    lp_cmd->add_option("--out", cfg.out, "output path");

    auto* gantt_cmd = app.add_subcommand("gantt", "render a schedule as a Gantt chart");
    gantt_cmd->add_option("schedule", in1, "schedule JSON")->required();
    gantt_cmd->add_option("--format", cfg.format, "ascii or svg");
    gantt_cmd->add_option("--width", cfg.width, "ascii chart width")->check(CLI::Range(10, 1000));
    gantt_cmd->add_option("--out", cfg.out, "output path");

    auto* compose_cmd = app.add_subcommand("compose", "build an instance from an instruction");
    compose_cmd->add_option("request", in1, "request JSON")->required();
    compose_cmd->add_option("--endpoint", cfg.endpoint, "chat-completions base URL; mock providers when omitted");
    compose_cmd->add_option("--templates", cfg.templates, "directory holding decompose.txt and fitness.txt");
    compose_cmd->add_option("--out", cfg.out, "output path");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return Ok;
    } catch (const CLI::CallForVersion&) {
        out << "mrsched 0.1.0\n";
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "error: Usage: " << detail::one_line(e.what()) << "\n";
        return Usage;
    }

    cfg.inputs = {in1};
    if (!in2.empty()) cfg.inputs.push_back(in2);
    try {
        if (*plan_cmd) return detail::cmd_plan(cfg, out);
        if (*check_cmd) return detail::cmd_check(cfg, out);
        if (*sim_cmd) return detail::cmd_simulate(cfg, out);
        if (*bench_cmd) return detail::cmd_bench(cfg, out);
        if (*render_cmd) return detail::cmd_render(cfg, out);
        if (*lp_cmd) return detail::cmd_export_lp(cfg, out);
        if (*gantt_cmd) return detail::cmd_gantt(cfg, out);
        if (*compose_cmd) return detail::cmd_compose(cfg, out);
    } catch (const Error& e) {
        err << "error: " << to_string(e.kind()) << ": " << detail::one_line(e.what()) << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: Internal: " << detail::one_line(e.what()) << "\n";
        return Usage;
    }
    return Usage;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, out, err);
}

} // namespace mrsched::cli
