// Canonical s-expression serialization. The expression grammar is
//
//   expr := "(sum" mono* ")"
//   mono := "(mono" num/den "(h" p ")" par* dt* ")"
//   par  := "(par" name exp ")"
//   dt   := "(dt" func (var order)+ exp ")"
//
// with coefficients in lowest terms over a positive denominator, every
// variable listed (in order) inside each dt entry, zero-exponent map
// entries omitted, and monomials in canonical order. Decompositions nest as
// "(dec" expr ("(d" var dec ")")* ")", and a derived system serializes as
// "(system" "(vars" name* ")" ("(eq" species dec ")")* ")". Rendering is
// canonical, so parse(render(e)) reproduces e bit-exactly; the reader also
// accepts ";" line comments.
#pragma once

#include "mfderive/conserve.hpp"
#include "mfderive/symexpr.hpp"

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mfderive {

struct SexpError : std::runtime_error {
    std::size_t position;

    SexpError(std::string msg, std::size_t pos)
        : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"), position(pos) {}
};

// ---- rendering ------------------------------------------------------------

inline std::string render_sexp(const ContinuumExpr& e, const std::vector<std::string>& variables) {
    const ContinuumExpr n = normalize(e);
    std::string out = "(sum";
    for (const auto& m : n.monomials) {
        out += " (mono " + rational_to_string(m.coeff);
        out += " (h " + std::to_string(m.h_power) + ")";
        for (const auto& [p, exp] : m.params) {
            out += " (par " + p.name + " " + std::to_string(exp) + ")";
        }
        for (const auto& [t, exp] : m.dterms) {
            if (t.orders.size() != variables.size()) {
                throw std::invalid_argument("render_sexp: expression uses " +
                                            std::to_string(t.orders.size()) +
                                            " variables, but " +
                                            std::to_string(variables.size()) + " were named");
            }
            out += " (dt " + t.func;
            for (std::size_t i = 0; i < t.orders.size(); ++i) {
                out += " (" + variables[i] + " " + std::to_string(t.orders[i]) + ")";
            }
            out += " " + std::to_string(exp) + ")";
        }
        out += ")";
    }
    out += ")";
    return out;
}

inline std::string render_sexp(const Decomposition& dec,
                               const std::vector<std::string>& variables) {
    std::string out = "(dec " + render_sexp(dec.remainder, variables);
    for (const auto& part : dec.parts) {
        out += " (d " + part.var.name + " " + render_sexp(part.inner, variables) + ")";
    }
    out += ")";
    return out;
}

// ---- parsing --------------------------------------------------------------

namespace detail {

class SexpReader {
public:
    explicit SexpReader(const std::string& text) : text_(text) {}

    void skip_ws() {
        for (;;) {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
            if (pos_ < text_.size() && text_[pos_] == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
                continue;
            }
            return;
        }
    }

    bool at_end() {
        skip_ws();
        return pos_ >= text_.size();
    }

    void expect_open() {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != '(') fail("expected '('");
        ++pos_;
    }

    void expect_close() {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
        ++pos_;
    }

    bool peek_open() {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == '(';
    }

    bool peek_close() {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == ')';
    }

    std::string atom() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ';') {
                break;
            }
            ++pos_;
        }
        if (start == pos_) fail("expected an atom");
        return text_.substr(start, pos_ - start);
    }

    void expect_atom(const std::string& want) {
        const std::size_t at = pos_;
        const std::string got = atom();
        if (got != want) {
            throw SexpError("expected '" + want + "', got '" + got + "'", at);
        }
    }

    int integer_atom(const char* what, int min_value) {
        const std::size_t at = pos_;
        const std::string a = atom();
        std::size_t i = a[0] == '-' ? 1 : 0;
        if (i == a.size()) throw SexpError(std::string("malformed ") + what, at);
        for (std::size_t k = i; k < a.size(); ++k) {
            if (!std::isdigit(static_cast<unsigned char>(a[k]))) {
                throw SexpError(std::string("malformed ") + what, at);
            }
        }
        const long v = std::stol(a);
        if (v < min_value) {
            throw SexpError(std::string(what) + " out of range: " + a, at);
        }
        return static_cast<int>(v);
    }

    [[noreturn]] void fail(const std::string& msg) const { throw SexpError(msg, pos_); }

    std::size_t pos() const { return pos_; }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
};

// Shared variable-name table: established by the first dt entry (or given
// up front) and enforced on every later one.
struct VariableTable {
    std::optional<std::vector<std::string>> names;

    void check(const std::vector<std::string>& seen, const SexpReader& r) {
        if (!names) {
            names = seen;
            return;
        }
        if (*names != seen) {
            throw SexpError("inconsistent variable list across dt entries", r.pos());
        }
    }
};

inline ContinuumExpr parse_expr_body(SexpReader& r, VariableTable& vars) {
    r.expect_open();
    r.expect_atom("sum");
    ContinuumExpr e;
    while (r.peek_open()) {
        r.expect_open();
        r.expect_atom("mono");
        ContinuumMonomial m;
        const std::size_t at = r.pos();
        try {
            m.coeff = parse_rational(r.atom());
        } catch (const std::invalid_argument& ex) {
            throw SexpError(ex.what(), at);
        }
        r.expect_open();
        r.expect_atom("h");
        m.h_power = r.integer_atom("h power", 0);
        r.expect_close();
        while (r.peek_open()) {
            r.expect_open();
            const std::string kind = r.atom();
            if (kind == "par") {
                const std::string name = r.atom();
                const int exp = r.integer_atom("parameter exponent", 1);
                m.params[ParamSymbol{name}] += exp;
                r.expect_close();
            } else if (kind == "dt") {
                const std::string func = r.atom();
                std::vector<std::string> seen;
                std::vector<int> orders;
                while (r.peek_open()) {
                    r.expect_open();
                    seen.push_back(r.atom());
                    orders.push_back(r.integer_atom("derivative order", 0));
                    r.expect_close();
                }
                if (seen.empty()) r.fail("dt entry lists no variables");
                vars.check(seen, r);
                const int exp = r.integer_atom("indeterminate exponent", 1);
                m.dterms[DerivativeIndeterminate{func, orders}] += exp;
                r.expect_close();
            } else {
                r.fail("expected 'par' or 'dt', got '" + kind + "'");
            }
        }
        r.expect_close();
        e.monomials.push_back(std::move(m));
    }
    r.expect_close();
    return normalize(e);
}

inline Decomposition parse_dec_body(SexpReader& r, VariableTable& vars) {
    r.expect_open();
    r.expect_atom("dec");
    Decomposition dec;
    dec.remainder = parse_expr_body(r, vars);
    while (r.peek_open()) {
        r.expect_open();
        r.expect_atom("d");
        const std::string var_name = r.atom();
        Decomposition inner = parse_dec_body(r, vars);
        r.expect_close();
        dec.parts.push_back(Decomposition::Part{VarId{var_name, -1}, std::move(inner)});
    }
    r.expect_close();
    return dec;
}

inline void resolve_part_indices(Decomposition& dec, const std::vector<std::string>& names) {
    for (auto& part : dec.parts) {
        int index = -1;
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == part.var.name) index = static_cast<int>(i);
        }
        if (index < 0) {
            throw std::invalid_argument("decomposition differentiates with respect to '" +
                                        part.var.name + "', which is not a known variable");
        }
        part.var.index = index;
        resolve_part_indices(part.inner, names);
    }
}

} // namespace detail

struct ParsedExpr {
    ContinuumExpr expr;
    std::vector<std::string> variables; // empty if the expression names none
};

struct ParsedDecomposition {
    Decomposition dec;
    std::vector<std::string> variables;
};

struct ParsedSystem {
    std::vector<std::string> variables;
    std::vector<std::pair<std::string, Decomposition>> equations;
};

inline ParsedExpr parse_sexp_expr(const std::string& text) {
    detail::SexpReader r(text);
    detail::VariableTable vars;
    ContinuumExpr e = detail::parse_expr_body(r, vars);
    if (!r.at_end()) r.fail("unexpected trailing input");
    return ParsedExpr{std::move(e), vars.names.value_or(std::vector<std::string>{})};
}

inline ParsedDecomposition parse_sexp_decomposition(
    const std::string& text, std::optional<std::vector<std::string>> known_variables = {}) {
    detail::SexpReader r(text);
    detail::VariableTable vars;
    if (known_variables) vars.names = *known_variables;
    Decomposition dec = detail::parse_dec_body(r, vars);
    if (!r.at_end()) r.fail("unexpected trailing input");
    std::vector<std::string> names = vars.names.value_or(std::vector<std::string>{});
    detail::resolve_part_indices(dec, names);
    return ParsedDecomposition{std::move(dec), std::move(names)};
}

inline std::string render_sexp_system(
    const std::vector<std::pair<std::string, Decomposition>>& equations,
    const std::vector<std::string>& variables) {
    std::string out = "(system (vars";
    for (const auto& v : variables) out += " " + v;
    out += ")";
    for (const auto& [species, dec] : equations) {
        out += "\n  (eq " + species + " " + render_sexp(dec, variables) + ")";
    }
    out += ")\n";
    return out;
}

inline ParsedSystem parse_sexp_system(const std::string& text) {
    detail::SexpReader r(text);
    r.expect_open();
    r.expect_atom("system");
    r.expect_open();
    r.expect_atom("vars");
    ParsedSystem sys;
    while (!r.peek_close()) sys.variables.push_back(r.atom());
    r.expect_close();
    detail::VariableTable vars;
    vars.names = sys.variables;
    while (r.peek_open()) {
        r.expect_open();
        r.expect_atom("eq");
        std::string species = r.atom();
        Decomposition dec = detail::parse_dec_body(r, vars);
        detail::resolve_part_indices(dec, sys.variables);
        sys.equations.emplace_back(std::move(species), std::move(dec));
        r.expect_close();
    }
    r.expect_close();
    if (!r.at_end()) r.fail("unexpected trailing input");
    return sys;
}

// Re-expresses an expression over a different (super)set of variables.
inline ContinuumExpr remap_variables(const ContinuumExpr& e,
                                     const std::vector<std::string>& from,
                                     const std::vector<std::string>& to) {
    std::vector<int> where(from.size(), -1);
    for (std::size_t i = 0; i < from.size(); ++i) {
        for (std::size_t j = 0; j < to.size(); ++j) {
            if (to[j] == from[i]) where[i] = static_cast<int>(j);
        }
        if (where[i] < 0) {
            throw std::invalid_argument("variable '" + from[i] + "' is not in the target list");
        }
    }
    ContinuumExpr out;
    for (const auto& m : e.monomials) {
        ContinuumMonomial moved{m.coeff, m.h_power, m.params, {}};
        for (const auto& [t, exp] : m.dterms) {
            if (t.orders.size() != from.size()) {
                throw std::invalid_argument("remap_variables: arity mismatch for '" + t.func + "'");
            }
            std::vector<int> orders(to.size(), 0);
            for (std::size_t i = 0; i < from.size(); ++i) {
                orders[static_cast<std::size_t>(where[i])] = t.orders[i];
            }
            moved.dterms[DerivativeIndeterminate{t.func, std::move(orders)}] += exp;
        }
        out.monomials.push_back(std::move(moved));
    }
    return normalize(out);
}

} // namespace mfderive
