#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mrsched/core.hpp"

// Reader for the subset of CPLEX LP text that export_lp emits: one objective,
// linear rows, bounds, binaries. Used to check exported models independently
// of the in-memory representation.
namespace mrsched::lp {

struct ParsedRow {
    std::string name;
    std::vector<std::pair<std::string, double>> terms;
    std::string sense;  // "<=", ">=", "="
    double rhs = 0.0;
};

struct ParsedLp {
    bool minimize = true;
    std::vector<std::pair<std::string, double>> objective;
    std::vector<ParsedRow> rows;
    std::map<std::string, std::pair<double, double>> bounds;
    std::vector<std::string> binaries;
    std::set<std::string> variables;

    /// Objective value and the largest row/bound excess at a named point.
    std::pair<double, double> evaluate(const std::map<std::string, double>& point) const {
        auto value = [&](const std::string& v) {
            auto it = point.find(v);
            return it == point.end() ? 0.0 : it->second;
        };
        double obj = 0.0;
        for (const auto& [v, c] : objective) obj += c * value(v);
        double worst = 0.0;
        for (const auto& r : rows) {
            double lhs = 0.0;
            for (const auto& [v, c] : r.terms) lhs += c * value(v);
            const double scale = std::max(1.0, std::abs(r.rhs));
            double excess = 0.0;
            if (r.sense == "<=") excess = (lhs - r.rhs) / scale;
            else if (r.sense == ">=") excess = (r.rhs - lhs) / scale;
            else excess = std::abs(lhs - r.rhs) / scale;
            worst = std::max(worst, excess);
        }
        for (const auto& v : variables) {
            auto it = bounds.find(v);
            const double lo = it == bounds.end() ? 0.0 : it->second.first;
            const double hi = it == bounds.end() ? kInfinity : it->second.second;
            worst = std::max({worst, lo - value(v), std::isfinite(hi) ? value(v) - hi : 0.0});
        }
        return {obj, worst};
    }
};

namespace detail {

struct Token {
    enum Kind { Ident, Number, Op, Colon, Section } kind;
    std::string text;
    double number = 0.0;
    std::size_t line = 0;
};

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '!' || c == '"' || c == '#' ||
           c == '$' || c == '%' || c == '&' || c == '(' || c == ')' || c == ',' || c == ';' || c == '?' ||
           c == '@' || c == '{' || c == '}' || c == '~' || c == '\'';
}

inline bool ident_char(char c) {
    return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '.';
}

[[noreturn]] inline void fail(std::size_t line, const std::string& msg) {
    throw Error(ErrorKind::ParseError, "LP line " + std::to_string(line) + ": " + msg);
}

inline std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t line = 1;
    std::size_t pos = 0;
    bool line_start = true;
    while (pos < text.size()) {
        // Section keywords are recognized only as the first word of a line.
        if (line_start) {
            std::size_t p = pos;
            while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
            std::size_t e = p;
            while (e < text.size() && text[e] != '\n' && text[e] != '\r') ++e;
            std::string head = lower(std::string(text.substr(p, e - p)));
            while (!head.empty() && std::isspace(static_cast<unsigned char>(head.back()))) head.pop_back();
            static const std::set<std::string> sections = {"minimize", "minimise", "min",   "maximize", "maximise",
                                                           "max",      "subject to", "st", "s.t.", "such that",
                                                           "bounds",   "bound",    "binaries", "binary", "bin",
                                                           "generals", "general",  "end"};
            if (p == pos && sections.count(head)) {
                out.push_back({Token::Section, head, 0.0, line});
                pos = e;
                line_start = false;
                continue;
            }
            if (p < text.size() && p == pos) line_start = false;
        }
        const char c = text[pos];
        if (c == '\n') {
            ++line;
            ++pos;
            line_start = true;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
            continue;
        }
        if (c == '\\') {
            while (pos < text.size() && text[pos] != '\n') ++pos;
            continue;
        }
        if (c == ':') {
            out.push_back({Token::Colon, ":", 0.0, line});
            ++pos;
            continue;
        }
        if (c == '<' || c == '>' || c == '=') {
            std::string op(1, c);
            ++pos;
            if (pos < text.size() && text[pos] == '=') {
                op += '=';
                ++pos;
            } else if (c == '=' && pos < text.size() && (text[pos] == '<' || text[pos] == '>')) {
                op = std::string(1, text[pos]) + "=";
                ++pos;
            }
            if (op == "<") op = "<=";
            if (op == ">") op = ">=";
            out.push_back({Token::Op, op, 0.0, line});
            continue;
        }
        if (c == '+' || c == '-') {
            out.push_back({Token::Op, std::string(1, c), 0.0, line});
            ++pos;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(std::string(text.substr(pos, 64)), &used);
            } catch (...) {
                fail(line, "bad number");
            }
            out.push_back({Token::Number, std::string(text.substr(pos, used)), v, line});
            pos += used;
            continue;
        }
        if (ident_start(c)) {
            std::size_t e = pos;
            while (e < text.size() && ident_char(text[e])) ++e;
            std::string word(text.substr(pos, e - pos));
            const std::string lw = lower(word);
            if (lw == "inf" || lw == "infinity") out.push_back({Token::Number, word, kInfinity, line});
            else out.push_back({Token::Ident, word, 0.0, line});
            pos = e;
            continue;
        }
        fail(line, std::string("unexpected character '") + c + "'");
    }
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    ParsedLp run() {
        ParsedLp lp;
        expect_section({"minimize", "minimise", "min", "maximize", "maximise", "max"}, "objective section");
        lp.minimize = toks_[pos_ - 1].text.rfind("min", 0) == 0;
        if (peek_label()) pos_ += 2;
        lp.objective = parse_expression(lp);
        expect_section({"subject to", "st", "s.t.", "such that"}, "'Subject To'");
        while (!at_section()) {
            ParsedRow row;
            if (peek_label()) {
                row.name = toks_[pos_].text;
                pos_ += 2;
            } else {
                row.name = "R" + std::to_string(lp.rows.size() + 1);
            }
            row.terms = parse_expression(lp);
            if (row.terms.empty()) fail(line(), "constraint '" + row.name + "' has no terms");
            if (!at(Token::Op) || (toks_[pos_].text != "<=" && toks_[pos_].text != ">=" && toks_[pos_].text != "="))
                fail(line(), "constraint '" + row.name + "' lacks a relational operator");
            row.sense = toks_[pos_++].text;
            row.rhs = signed_number();
            lp.rows.push_back(std::move(row));
        }
        if (is_section({"bounds", "bound"})) {
            ++pos_;
            while (!at_section()) parse_bound(lp);
        }
        std::set<std::string> seen_binary;
        while (is_section({"binaries", "binary", "bin", "generals", "general"})) {
            const bool binary = toks_[pos_].text.rfind("bin", 0) == 0;
            ++pos_;
            while (at(Token::Ident)) {
                const std::string& v = toks_[pos_].text;
                if (binary) {
                    if (!seen_binary.insert(v).second) fail(line(), "binary '" + v + "' listed twice");
                    lp.binaries.push_back(v);
                }
                lp.variables.insert(v);
                ++pos_;
            }
        }
        expect_section({"end"}, "'End'");
        if (pos_ != toks_.size()) fail(line(), "content after End");
        return lp;
    }

private:
    bool at(Token::Kind k) const { return pos_ < toks_.size() && toks_[pos_].kind == k; }
    bool at_section() const { return pos_ >= toks_.size() || toks_[pos_].kind == Token::Section; }
    std::size_t line() const { return pos_ < toks_.size() ? toks_[pos_].line : (toks_.empty() ? 0 : toks_.back().line); }
    bool peek_label() const {
        return at(Token::Ident) && pos_ + 1 < toks_.size() && toks_[pos_ + 1].kind == Token::Colon;
    }
    bool is_section(std::initializer_list<const char*> names) const {
        if (!at(Token::Section)) return false;
        for (auto* n : names)
            if (toks_[pos_].text == n) return true;
        return false;
    }
    void expect_section(std::initializer_list<const char*> names, const std::string& what) {
        if (!is_section(names)) fail(line(), "expected " + what);
        ++pos_;
    }

    double signed_number() {
        double sign = 1.0;
        while (at(Token::Op) && (toks_[pos_].text == "+" || toks_[pos_].text == "-")) {
            if (toks_[pos_].text == "-") sign = -sign;
            ++pos_;
        }
        if (!at(Token::Number)) fail(line(), "expected a number");
        return sign * toks_[pos_++].number;
    }

    std::vector<std::pair<std::string, double>> parse_expression(ParsedLp& lp) {
        std::vector<std::pair<std::string, double>> terms;
        bool first = true;
        while (!at_section() && !peek_label()) {
            double sign = 1.0;
            bool had_sign = false;
            while (at(Token::Op) && (toks_[pos_].text == "+" || toks_[pos_].text == "-")) {
                if (toks_[pos_].text == "-") sign = -sign;
                had_sign = true;
                ++pos_;
            }
            if (!first && !had_sign) {
                if (at(Token::Op)) break;  // relational operator ends the expression
                fail(line(), "missing operator between terms");
            }
            double coef = 1.0;
            if (at(Token::Number)) coef = toks_[pos_++].number;
            if (!at(Token::Ident)) {
                if (first && !had_sign && coef == 1.0 && at(Token::Op)) break;
                fail(line(), "expected a variable name");
            }
            terms.emplace_back(toks_[pos_].text, sign * coef);
            lp.variables.insert(toks_[pos_].text);
            ++pos_;
            first = false;
            if (at(Token::Op) && toks_[pos_].text != "+" && toks_[pos_].text != "-") break;
        }
        return terms;
    }

    void parse_bound(ParsedLp& lp) {
        auto set = [&](const std::string& v, const std::string& op, double value, bool var_on_left) {
            auto& b = lp.bounds.try_emplace(v, 0.0, kInfinity).first->second;
            lp.variables.insert(v);
            std::string eff = op;
            if (!var_on_left && op != "=") eff = op == "<=" ? ">=" : "<=";
            if (eff == "=") b = {value, value};
            else if (eff == "<=") b.second = value;
            else b.first = value;
        };
        if (at(Token::Ident)) {
            const std::string v = toks_[pos_++].text;
            if (at(Token::Ident) && lower(toks_[pos_].text) == "free") {
                ++pos_;
                lp.bounds[v] = {-kInfinity, kInfinity};
                lp.variables.insert(v);
                return;
            }
            if (!at(Token::Op)) fail(line(), "bad bound for '" + v + "'");
            const std::string op = toks_[pos_++].text;
            set(v, op, signed_number(), true);
            return;
        }
        const double lo = signed_number();
        if (!at(Token::Op)) fail(line(), "bad bound");
        const std::string op1 = toks_[pos_++].text;
        if (!at(Token::Ident)) fail(line(), "bound lacks a variable");
        const std::string v = toks_[pos_++].text;
        set(v, op1, lo, false);
        if (at(Token::Op) && (toks_[pos_].text == "<=" || toks_[pos_].text == ">=")) {
            const std::string op2 = toks_[pos_++].text;
            set(v, op2, signed_number(), true);
        }
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses LP text; throws Error(ParseError) naming the offending line.
inline ParsedLp parse_lp(std::string_view text) {
    return detail::Parser(detail::tokenize(text)).run();
}

} // namespace mrsched::lp
