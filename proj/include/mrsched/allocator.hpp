#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "mrsched/auction.hpp"
#include "mrsched/solver.hpp"

namespace mrsched {

enum class AllocatorKind { Milp, Auction, Greedy };

constexpr std::string_view to_string(AllocatorKind k) {
    switch (k) {
    case AllocatorKind::Milp: return "milp";
    case AllocatorKind::Auction: return "auction";
    case AllocatorKind::Greedy: return "greedy";
    }
    return "unknown";
}

inline AllocatorKind parse_allocator(std::string_view name) {
    if (name == "milp") return AllocatorKind::Milp;
    if (name == "auction") return AllocatorKind::Auction;
    if (name == "greedy") return AllocatorKind::Greedy;
    throw Error(ErrorKind::InvalidValue, "unknown allocator '" + std::string(name) + "' (milp, auction, greedy)");
}

struct PlanOptions {
    AllocatorKind kind = AllocatorKind::Milp;
    SolveConfig solve;
    AuctionConfig auction;
};

struct PlanOutcome {
    Schedule schedule;
    /// Solver status name, "Fallback" when the fallback schedule won, or "Heuristic".
    std::string status;
    std::optional<SolveResult> solve;
};

/// The milp allocator's fallback: the auction, then list scheduling if the
/// auction stalls on a window.
inline Schedule fallback_allocate(const ProblemInstance& inst, const AuctionConfig& config = {}) {
    try {
        return auction_allocate(inst, config);
    } catch (const Error&) {
        return greedy_allocate(inst);
    }
}

/// Runs one allocator. Every path returns a schedule or throws Infeasible.
inline PlanOutcome plan(const ProblemInstance& inst, const PlanOptions& options) {
    PlanOutcome out;
    switch (options.kind) {
    case AllocatorKind::Milp: {
        auto r = anytime_solve(inst, options.solve,
                               [&](const ProblemInstance& p) { return fallback_allocate(p, options.auction); });
        if (!r.schedule) throw Error(ErrorKind::Infeasible, "no feasible schedule exists");
        out.schedule = *r.schedule;
        out.status = r.metadata.count("fallback") ? "Fallback" : std::string(to_string(r.status));
        out.schedule.metadata["status"] = out.status;
        out.solve = std::move(r);
        break;
    }
    case AllocatorKind::Auction:
        try {
            out.schedule = auction_allocate(inst, options.auction);
        } catch (const Error& e) {
            throw Error(ErrorKind::Infeasible, std::string("auction failed: ") + e.what());
        }
        out.status = "Heuristic";
        break;
    case AllocatorKind::Greedy:
        out.schedule = greedy_allocate(inst);
        out.status = "Heuristic";
        break;
    }
    return out;
}

} // namespace mrsched
