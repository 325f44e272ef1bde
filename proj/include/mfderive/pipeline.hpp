// Derivation pipeline: master equation -> Taylor expansion -> scaling limit
// -> conservative-form decomposition, per species, with a diagnostics report.
#pragma once

#include "mfderive/conserve.hpp"
#include "mfderive/lattice.hpp"
#include "mfderive/model_io.hpp"
#include "mfderive/render.hpp"
#include "mfderive/sexp.hpp"
#include "mfderive/taylor.hpp"

#include <json.hpp>

#include <chrono>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mfderive {

struct PdeSystem {
    struct Equation {
        std::string species;
        Decomposition rhs; // d/dt species = flatten(rhs)
    };

    std::vector<Equation> equations;

    // Derivation metadata.
    ExpansionOptions options;
    IntegrationOrder order;
    std::vector<std::string> variables;
    std::string model_fingerprint;
};

struct StageDiagnostics {
    std::string species;
    std::size_t master_monomials = 0;     // lattice RHS, post-normalization
    std::size_t expanded_monomials = 0;   // after Taylor expansion
    std::size_t post_limit_monomials = 0; // after the scaling limit
    std::vector<int> vanished_orders;     // h powers verified to vanish
    double expand_ms = 0;
    double limit_ms = 0;
    double integrate_ms = 0;
};

struct DerivationReport {
    PdeSystem system;
    std::vector<StageDiagnostics> stages;
};

inline IntegrationOrder default_integration_order(const Model& m, int depth = 2) {
    IntegrationOrder ord;
    ord.funcs = m.species;
    ord.vars = m.variables;
    ord.depth = depth;
    return ord;
}

namespace detail {

inline void require_permutation(const std::vector<std::string>& given,
                                const std::vector<std::string>& declared, const char* what) {
    if (given.size() != declared.size()) {
        throw std::invalid_argument(std::string(what) + " must list each declared name exactly once");
    }
    for (const auto& name : given) {
        if (std::find(declared.begin(), declared.end(), name) == declared.end()) {
            throw std::invalid_argument(std::string(what) + ": unknown name '" + name + "'");
        }
    }
    std::set<std::string> unique(given.begin(), given.end());
    if (unique.size() != given.size()) {
        throw std::invalid_argument(std::string(what) + ": duplicate name");
    }
}

inline double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

} // namespace detail

// Runs the full pipeline for every species of the model. The integration
// order's variables must be the model variables (any order, indices intact)
// and its functions the model species.
inline DerivationReport derive(const Model& m, const ExpansionOptions& opts,
                               const IntegrationOrder& ord) {
    opts.validate();
    ord.validate();
    detail::require_permutation(ord.funcs, m.species, "function order");
    std::vector<std::string> ord_var_names;
    for (const auto& v : ord.vars) ord_var_names.push_back(v.name);
    std::vector<std::string> model_var_names;
    for (const auto& v : m.variables) model_var_names.push_back(v.name);
    detail::require_permutation(ord_var_names, model_var_names, "variable order");

    DerivationReport report;
    report.system.options = opts;
    report.system.order = ord;
    report.system.variables = model_var_names;
    report.system.model_fingerprint = m.fingerprint;

    for (const auto& species : m.species) {
        StageDiagnostics diag;
        diag.species = species;

        const LatticeExpr master = build_master_rhs(m, species);
        diag.master_monomials = master.monomials.size();

        auto t0 = std::chrono::steady_clock::now();
        const ContinuumExpr expanded = expand_lattice(master, opts.order);
        diag.expand_ms = detail::ms_since(t0);
        diag.expanded_monomials = expanded.monomials.size();

        t0 = std::chrono::steady_clock::now();
        ContinuumExpr limited;
        try {
            limited = take_limit(expanded, opts);
        } catch (ScalingObstruction& e) {
            throw ScalingObstruction(e.power, std::move(e.coefficient), species);
        }
        diag.limit_ms = detail::ms_since(t0);
        diag.post_limit_monomials = limited.monomials.size();
        for (int p = 0; p < opts.scaling; ++p) diag.vanished_orders.push_back(p);

        t0 = std::chrono::steady_clock::now();
        Decomposition dec = partial_integrate(limited, ord);
        diag.integrate_ms = detail::ms_since(t0);

        report.system.equations.push_back(PdeSystem::Equation{species, std::move(dec)});
        report.stages.push_back(std::move(diag));
    }
    return report;
}

// ---- system-level rendering ------------------------------------------------

inline std::string render_system_sexp(const PdeSystem& sys) {
    std::vector<std::pair<std::string, Decomposition>> eqs;
    for (const auto& eq : sys.equations) eqs.emplace_back(eq.species, eq.rhs);
    return render_sexp_system(eqs, sys.variables);
}

inline std::string render_system_text(const PdeSystem& sys) {
    std::string out;
    for (const auto& eq : sys.equations) {
        out += "dt(" + eq.species + ") = " + render_text(eq.rhs, sys.variables) + "\n";
    }
    return out;
}

inline std::string render_system_latex(const PdeSystem& sys) {
    std::string out;
    for (const auto& eq : sys.equations) {
        out += "\\partial_t " + eq.species + " = " + render_latex(eq.rhs, sys.variables) + "\n";
    }
    return out;
}

// JSON report wrapping the canonical s-expressions. Timings are volatile,
// so they are only included on request; everything else is deterministic.
inline std::string render_report_json(const DerivationReport& report,
                                      bool include_timings = false) {
    const PdeSystem& sys = report.system;
    nlohmann::json j;
    j["model"]["fingerprint"] = sys.model_fingerprint;
    j["model"]["variables"] = sys.variables;
    j["options"]["order"] = sys.options.order;
    j["options"]["scaling"] = sys.options.scaling;
    j["options"]["keep"] = sys.options.keep;
    j["options"]["depth"] = sys.order.depth;
    j["options"]["func_order"] = sys.order.funcs;
    nlohmann::json var_order = nlohmann::json::array();
    for (const auto& v : sys.order.vars) var_order.push_back(v.name);
    j["options"]["var_order"] = var_order;
    j["system"] = nlohmann::json::array();
    for (const auto& eq : sys.equations) {
        nlohmann::json e;
        e["species"] = eq.species;
        e["decomposition"] = render_sexp(eq.rhs, sys.variables);
        e["flattened"] = render_sexp(flatten(eq.rhs), sys.variables);
        j["system"].push_back(std::move(e));
    }
    j["diagnostics"] = nlohmann::json::array();
    for (const auto& s : report.stages) {
        nlohmann::json d;
        d["species"] = s.species;
        d["master_monomials"] = s.master_monomials;
        d["expanded_monomials"] = s.expanded_monomials;
        d["post_limit_monomials"] = s.post_limit_monomials;
        d["vanished_orders"] = s.vanished_orders;
        if (include_timings) {
            d["elapsed_ms"]["expand"] = s.expand_ms;
            d["elapsed_ms"]["limit"] = s.limit_ms;
            d["elapsed_ms"]["integrate"] = s.integrate_ms;
        }
        j["diagnostics"].push_back(std::move(d));
    }
    return j.dump(2) + "\n";
}

// ---- golden comparison ------------------------------------------------------

struct GoldenComparison {
    struct Entry {
        std::string species;
        bool matched = false;
        bool missing = false; // species absent from the golden file
    };

    std::vector<Entry> entries;
    bool all_matched = true;
};

// Flatten-equality of a derived system against a golden system; decomposition
// shapes are free to differ.
inline GoldenComparison compare_against_golden(const PdeSystem& sys, const ParsedSystem& golden) {
    GoldenComparison cmp;
    for (const auto& eq : sys.equations) {
        GoldenComparison::Entry entry;
        entry.species = eq.species;
        const auto it =
            std::find_if(golden.equations.begin(), golden.equations.end(),
                         [&](const auto& g) { return g.first == eq.species; });
        if (it == golden.equations.end()) {
            entry.missing = true;
            cmp.all_matched = false;
        } else {
            entry.matched = equal(flatten(eq.rhs), flatten(it->second));
            if (!entry.matched) cmp.all_matched = false;
        }
        cmp.entries.push_back(std::move(entry));
    }
    for (const auto& [species, dec] : golden.equations) {
        const bool derived = std::any_of(sys.equations.begin(), sys.equations.end(),
                                         [&](const auto& eq) { return eq.species == species; });
        if (!derived) {
            cmp.entries.push_back(GoldenComparison::Entry{species, false, true});
            cmp.all_matched = false;
        }
    }
    return cmp;
}

} // namespace mfderive
