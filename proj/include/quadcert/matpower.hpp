#pragma once

// =============================================================================
// quadcert - MATPOWER case files
// =============================================================================
// Reads the MATLAB subset used by MATPOWER case files: assignments
// `mpc.baseMVA = <number>;` and `mpc.bus|branch|gen = [ ... ];` where rows
// end with ';' or a newline and '%' starts a comment. Every other statement
// (function header, mpc.version, mpc.gencost, cell arrays, ...) is skipped.
// =============================================================================

#include "quadcert/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace quadcert {

enum class BusType { PQ = 1, PV = 2, Slack = 3 };

struct Bus {
    int id = 0;
    BusType type = BusType::PQ;
    double pd = 0.0;  // MW
    double qd = 0.0;  // MVAr
    double gs = 0.0;  // MW at V = 1 pu
    double bs = 0.0;  // MVAr at V = 1 pu
    double vm = 1.0;
    double va = 0.0;  // degrees

    bool operator==(const Bus&) const = default;
};

struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b = 0.0;          // total line charging, pu
    double tap = 0.0;        // 0 means nominal ratio 1
    double shift_deg = 0.0;
    int status = 1;

    double effective_tap() const { return tap == 0.0 ? 1.0 : tap; }
    bool operator==(const Branch&) const = default;
};

struct Generator {
    int bus = 0;
    double pg = 0.0;
    double qg = 0.0;
    int status = 1;
    double vg = 1.0;

    bool operator==(const Generator&) const = default;
};

struct GridCase {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> gens;

    const Bus& slack() const {
        for (const auto& b : buses) {
            if (b.type == BusType::Slack) {
                return b;
            }
        }
        throw ModelError("grid case has no slack bus");
    }

    bool operator==(const GridCase&) const = default;
};

namespace detail {

struct NumericRow {
    std::size_t line = 0;
    std::vector<double> values;
};

struct NumericMatrix {
    std::size_t line = 0;  // line of the assignment
    std::vector<NumericRow> rows;
};

/// Strips '%' comments (outside single-quoted strings), keeping line structure.
inline std::string strip_comments(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_comment = false;
    bool in_string = false;
    for (const char c : text) {
        if (c == '\n') {
            in_comment = false;
            in_string = false;
            out.push_back(c);
            continue;
        }
        if (in_comment) {
            continue;
        }
        if (c == '\'') {
            in_string = !in_string;
        } else if (c == '%' && !in_string) {
            in_comment = true;
            continue;
        }
        out.push_back(c);
    }
    return out;
}

class CaseScanner {
public:
    explicit CaseScanner(std::string text) : text_(std::move(text)) {}

    bool at_end() const { return pos_ >= text_.size(); }
    std::size_t line() const { return line_; }
    std::size_t last_line() const {
        std::size_t lines = 1;
        for (const char c : text_) {
            lines += c == '\n' ? 1 : 0;
        }
        return lines;
    }

    char peek() const { return at_end() ? '\0' : text_[pos_]; }

    char get() {
        const char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
        }
        return c;
    }

    void skip_blank() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) {
            get();
        }
    }

    void skip_inline_blank() {
        while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) {
            get();
        }
    }

    bool consume(std::string_view word) {
        if (text_.compare(pos_, word.size(), word) == 0) {
            for (std::size_t i = 0; i < word.size(); ++i) {
                get();
            }
            return true;
        }
        return false;
    }

    std::string identifier() {
        std::string id;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
            id.push_back(get());
        }
        return id;
    }

    void skip_statement() {
        while (!at_end() && peek() != '\n' && peek() != ';') {
            get();
        }
        if (!at_end()) {
            get();
        }
    }

    /// Skips a bracketed value of any kind ([...] or {...}), honouring nesting.
    void skip_bracketed(const std::string& field) {
        const std::size_t start = line_;
        int depth = 0;
        bool in_string = false;
        while (!at_end()) {
            const char c = get();
            if (c == '\'') {
                in_string = !in_string;
            } else if (!in_string && (c == '[' || c == '{')) {
                ++depth;
            } else if (!in_string && (c == ']' || c == '}')) {
                if (--depth == 0) {
                    skip_statement();
                    return;
                }
            }
        }
        throw ParseError(start, "unterminated value for mpc." + field);
    }

    NumericMatrix matrix(const std::string& field) {
        NumericMatrix m;
        m.line = line_;
        get();  // '['
        NumericRow row;
        auto flush = [&] {
            if (!row.values.empty()) {
                m.rows.push_back(std::move(row));
            }
            row = NumericRow{};
        };
        while (true) {
            if (at_end()) {
                throw ParseError(m.line, "unterminated matrix for mpc." + field);
            }
            const char c = peek();
            if (c == ']') {
                get();
                flush();
                skip_statement();
                return m;
            }
            if (c == ';' || c == '\n') {
                get();
                flush();
                continue;
            }
            if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
                get();
                continue;
            }
            if (c == '.' && text_.compare(pos_, 3, "...") == 0) {
                // line continuation
                while (!at_end() && peek() != '\n') {
                    get();
                }
                if (!at_end()) {
                    get();
                }
                continue;
            }
            if (row.values.empty()) {
                row.line = line_;
            }
            row.values.push_back(number(field));
        }
    }

    double scalar(const std::string& field) {
        skip_inline_blank();
        const std::size_t at = line_;
        if (at_end() || peek() == ';' || peek() == '\n') {
            throw ParseError(at, "missing value for mpc." + field);
        }
        const double v = number(field);
        skip_inline_blank();
        if (!at_end() && peek() != ';' && peek() != '\n') {
            throw ParseError(at, "unexpected text after mpc." + field + " value");
        }
        skip_statement();
        return v;
    }

private:
    double number(const std::string& field) {
        const std::size_t at = line_;
        std::string token;
        while (!at_end()) {
            const char c = peek();
            if (std::isspace(static_cast<unsigned char>(c)) || c == ';' || c == ',' || c == ']') {
                break;
            }
            token.push_back(get());
        }
        double value = 0.0;
        const char* first = token.data();
        const char* last = token.data() + token.size();
        if (!token.empty() && *first == '+') {
            ++first;
        }
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (token.empty() || ec != std::errc{} || ptr != last) {
            throw ParseError(at, "malformed number '" + token + "' in mpc." + field);
        }
        return value;
    }

    std::string text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

inline int integer_field(const NumericRow& row, std::size_t col, const char* what) {
    const double v = row.values[col];
    if (!std::isfinite(v) || v != std::floor(v)) {
        throw ParseError(row.line, std::string(what) + " must be an integer");
    }
    return static_cast<int>(v);
}

inline void require_columns(const NumericRow& row, std::size_t min_cols, const char* table) {
    if (row.values.size() < min_cols) {
        throw ParseError(row.line, std::string(table) + " row has " +
                                       std::to_string(row.values.size()) +
                                       " columns, expected at least " + std::to_string(min_cols));
    }
}

} // namespace detail

inline GridCase parse_matpower(std::string_view text) {
    detail::CaseScanner scan(detail::strip_comments(text));
    std::optional<double> base_mva;
    std::size_t base_line = 0;
    std::map<std::string, detail::NumericMatrix> tables;

    while (true) {
        scan.skip_blank();
        if (scan.at_end()) {
            break;
        }
        if (!scan.consume("mpc.")) {
            scan.skip_statement();
            continue;
        }
        const std::string field = scan.identifier();
        scan.skip_inline_blank();
        if (!scan.consume("=")) {
            scan.skip_statement();
            continue;
        }
        scan.skip_inline_blank();
        const bool wanted = field == "bus" || field == "branch" || field == "gen";
        if (field == "baseMVA") {
            base_line = scan.line();
            base_mva = scan.scalar(field);
        } else if (wanted && scan.peek() == '[') {
            tables[field] = scan.matrix(field);
        } else if (wanted) {
            throw ParseError(scan.line(), "mpc." + field + " must be a bracketed matrix");
        } else if (scan.peek() == '[' || scan.peek() == '{') {
            scan.skip_bracketed(field);
        } else {
            scan.skip_statement();
        }
    }

    const std::size_t eof_line = scan.last_line();
    if (!base_mva) {
        throw ParseError(eof_line, "missing mpc.baseMVA");
    }
    for (const char* field : {"bus", "gen", "branch"}) {
        if (!tables.contains(field)) {
            throw ParseError(eof_line, std::string("missing mpc.") + field);
        }
    }
    if (!(*base_mva > 0.0)) {
        throw ParseError(base_line, "mpc.baseMVA must be positive");
    }

    GridCase c;
    c.base_mva = *base_mva;

    std::set<int> ids;
    std::optional<std::size_t> slack_line;
    for (const auto& row : tables["bus"].rows) {
        detail::require_columns(row, 9, "bus");
        Bus b;
        b.id = detail::integer_field(row, 0, "bus id");
        const int type = detail::integer_field(row, 1, "bus type");
        if (type < 1 || type > 3) {
            throw ParseError(row.line, "unsupported bus type " + std::to_string(type) + " at bus " +
                                           std::to_string(b.id));
        }
        b.type = static_cast<BusType>(type);
        if (b.type == BusType::Slack) {
            if (slack_line) {
                throw ParseError(row.line, "multiple slack buses");
            }
            slack_line = row.line;
        }
        b.pd = row.values[2];
        b.qd = row.values[3];
        b.gs = row.values[4];
        b.bs = row.values[5];
        b.vm = row.values[7];
        b.va = row.values[8];
        if (!ids.insert(b.id).second) {
            throw ParseError(row.line, "duplicate bus id " + std::to_string(b.id));
        }
        c.buses.push_back(b);
    }
    if (!slack_line) {
        throw ParseError(tables["bus"].line, "no slack bus (type 3) in mpc.bus");
    }

    for (const auto& row : tables["gen"].rows) {
        detail::require_columns(row, 8, "gen");
        Generator g;
        g.bus = detail::integer_field(row, 0, "generator bus");
        if (!ids.contains(g.bus)) {
            throw ParseError(row.line, "generator references unknown bus " + std::to_string(g.bus));
        }
        g.pg = row.values[1];
        g.qg = row.values[2];
        g.vg = row.values[5];
        g.status = detail::integer_field(row, 7, "generator status");
        c.gens.push_back(g);
    }

    for (const auto& row : tables["branch"].rows) {
        detail::require_columns(row, 11, "branch");
        Branch br;
        br.from = detail::integer_field(row, 0, "branch from-bus");
        br.to = detail::integer_field(row, 1, "branch to-bus");
        for (const int end : {br.from, br.to}) {
            if (!ids.contains(end)) {
                throw ParseError(row.line, "branch references unknown bus " + std::to_string(end));
            }
        }
        br.r = row.values[2];
        br.x = row.values[3];
        br.b = row.values[4];
        br.tap = row.values[8];
        br.shift_deg = row.values[9];
        br.status = detail::integer_field(row, 10, "branch status");
        c.branches.push_back(br);
    }
    return c;
}

namespace detail {
inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace detail

/// Writes a case in MATPOWER version-2 layout. Columns this library does not
/// model are filled with neutral defaults.
inline std::string serialize_matpower(const GridCase& c, std::string_view name = "mpc_case") {
    using detail::fmt17;
    std::ostringstream os;
    os << "function mpc = " << name << "\n";
    os << "mpc.version = '2';\n";
    os << "mpc.baseMVA = " << fmt17(c.base_mva) << ";\n\n";
    os << "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n";
    os << "mpc.bus = [\n";
    for (const auto& b : c.buses) {
        os << '\t' << b.id << '\t' << static_cast<int>(b.type) << '\t' << fmt17(b.pd) << '\t'
           << fmt17(b.qd) << '\t' << fmt17(b.gs) << '\t' << fmt17(b.bs) << "\t1\t" << fmt17(b.vm)
           << '\t' << fmt17(b.va) << "\t0\t1\t1.1\t0.9;\n";
    }
    os << "];\n\n";
    os << "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n";
    os << "mpc.gen = [\n";
    for (const auto& g : c.gens) {
        os << '\t' << g.bus << '\t' << fmt17(g.pg) << '\t' << fmt17(g.qg) << "\t0\t0\t"
           << fmt17(g.vg) << '\t' << fmt17(c.base_mva) << '\t' << g.status << "\t0\t0;\n";
    }
    os << "];\n\n";
    os << "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n";
    os << "mpc.branch = [\n";
    for (const auto& br : c.branches) {
        os << '\t' << br.from << '\t' << br.to << '\t' << fmt17(br.r) << '\t' << fmt17(br.x) << '\t'
           << fmt17(br.b) << "\t0\t0\t0\t" << fmt17(br.tap) << '\t' << fmt17(br.shift_deg) << '\t'
           << br.status << "\t-360\t360;\n";
    }
    os << "];\n";
    return os.str();
}

} // namespace quadcert
