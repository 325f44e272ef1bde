// Model-file ingestion: JSON schema validation, alias resolution, rate
// parsing, and a content fingerprint for derivation reports.
#pragma once

#include "mfderive/lattice.hpp"
#include "mfderive/rate_parser.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfderive {

struct ModelError : std::runtime_error {
    std::string path; // JSON-pointer-style location of the offending value

    ModelError(std::string where, const std::string& msg)
        : std::runtime_error(where + ": " + msg), path(std::move(where)) {}
};

namespace detail {

inline bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

inline std::vector<std::string> string_array(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw ModelError(path, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) {
            throw ModelError(path + "/" + std::to_string(i), "expected a string");
        }
        out.push_back(j[i].get<std::string>());
        if (!is_identifier(out.back())) {
            throw ModelError(path + "/" + std::to_string(i),
                             "'" + out.back() + "' is not a valid identifier");
        }
    }
    return out;
}

// Expands alias bodies down to species occurrences, allowing aliases to
// reference earlier aliases; cycles are rejected.
class AliasResolver {
public:
    AliasResolver(const std::map<std::string, std::string>& bodies, int dimension,
                  const std::set<std::string>& species, const std::set<std::string>& parameters)
        : bodies_(bodies), dimension_(dimension), species_(species), parameters_(parameters) {}

    std::map<std::string, LatticeExpr> resolve_all() {
        for (const auto& [name, body] : bodies_) resolve(name);
        return resolved_;
    }

private:
    const std::map<std::string, std::string>& bodies_;
    int dimension_;
    const std::set<std::string>& species_;
    const std::set<std::string>& parameters_;
    std::map<std::string, LatticeExpr> resolved_;
    std::set<std::string> in_progress_;

    const LatticeExpr& resolve(const std::string& name) {
        const auto done = resolved_.find(name);
        if (done != resolved_.end()) return done->second;
        if (!in_progress_.insert(name).second) {
            throw ModelError("/aliases/" + name, "alias cycle detected");
        }
        // Restrict the visible aliases to the ones already resolved plus
        // whatever this body forces us to resolve first.
        RateGrammarContext ctx;
        ctx.dimension = dimension_;
        ctx.species = species_;
        ctx.parameters = parameters_;
        ctx.allow_offsets = false;
        // Resolve dependencies on demand: scan identifiers in the body and
        // resolve any that are aliases before parsing.
        for (const auto& [other, body] : bodies_) {
            if (other != name && references(bodies_.at(name), other)) resolve(other);
        }
        ctx.aliases = &resolved_;
        try {
            resolved_[name] = parse_rate_expr(bodies_.at(name), ctx);
        } catch (const RateParseError& e) {
            throw ModelError("/aliases/" + name, e.what());
        }
        in_progress_.erase(name);
        return resolved_.at(name);
    }

    static bool references(const std::string& body, const std::string& name) {
        std::size_t at = 0;
        while ((at = body.find(name, at)) != std::string::npos) {
            const bool left_ok =
                at == 0 || (!std::isalnum(static_cast<unsigned char>(body[at - 1])) &&
                            body[at - 1] != '_');
            const std::size_t end = at + name.size();
            const bool right_ok =
                end >= body.size() || (!std::isalnum(static_cast<unsigned char>(body[end])) &&
                                       body[end] != '_');
            if (left_ok && right_ok) return true;
            ++at;
        }
        return false;
    }
};

} // namespace detail

// 64-bit FNV-1a over the raw bytes, as a hex string.
inline std::string content_fingerprint(const std::string& bytes) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << hash;
    return os.str();
}

inline Model parse_model_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("/", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ModelError("/", "expected a JSON object");

    static const std::set<std::string> known_keys = {"dimension", "variables",  "species",
                                                     "parameters", "aliases",   "transitions"};
    for (const auto& [key, value] : j.items()) {
        if (!known_keys.count(key)) throw ModelError("/" + key, "unknown key");
    }

    Model m;
    if (!j.contains("dimension") || !j["dimension"].is_number_integer() ||
        j["dimension"].get<int>() < 1) {
        throw ModelError("/dimension", "expected a positive integer");
    }
    m.dimension = j["dimension"].get<int>();

    if (!j.contains("variables")) throw ModelError("/variables", "missing");
    const std::vector<std::string> var_names = detail::string_array(j["variables"], "/variables");
    if (static_cast<int>(var_names.size()) != m.dimension) {
        throw ModelError("/variables", "expected exactly " + std::to_string(m.dimension) +
                                           " variable names");
    }
    for (std::size_t i = 0; i < var_names.size(); ++i) {
        m.variables.push_back(VarId{var_names[i], static_cast<int>(i)});
    }

    if (!j.contains("species")) throw ModelError("/species", "missing");
    m.species = detail::string_array(j["species"], "/species");
    if (m.species.empty()) throw ModelError("/species", "at least one species is required");

    if (j.contains("parameters")) {
        m.parameters = detail::string_array(j["parameters"], "/parameters");
    }

    std::map<std::string, std::string> alias_bodies;
    if (j.contains("aliases")) {
        if (!j["aliases"].is_object()) throw ModelError("/aliases", "expected an object");
        for (const auto& [name, body] : j["aliases"].items()) {
            if (!detail::is_identifier(name)) {
                throw ModelError("/aliases/" + name, "not a valid identifier");
            }
            if (!body.is_string()) {
                throw ModelError("/aliases/" + name, "expected a string body");
            }
            alias_bodies[name] = body.get<std::string>();
        }
    }

    // Name sets must be pairwise disjoint, and none may shadow the grid
    // spacing h or the time variable t.
    std::set<std::string> seen = {"h", "t"};
    auto claim = [&](const std::string& name, const std::string& path) {
        if (!seen.insert(name).second) {
            throw ModelError(path, "name '" + name + "' clashes with another declaration "
                                   "(species, parameters, aliases, variables, 'h' and 't' "
                                   "must be pairwise distinct)");
        }
    };
    for (const auto& v : var_names) claim(v, "/variables");
    for (const auto& s : m.species) claim(s, "/species");
    for (const auto& p : m.parameters) claim(p, "/parameters");
    for (const auto& [a, body] : alias_bodies) claim(a, "/aliases/" + a);

    const std::set<std::string> species_set(m.species.begin(), m.species.end());
    const std::set<std::string> param_set(m.parameters.begin(), m.parameters.end());
    detail::AliasResolver resolver(alias_bodies, m.dimension, species_set, param_set);
    m.aliases = resolver.resolve_all();

    if (!j.contains("transitions") || !j["transitions"].is_array()) {
        throw ModelError("/transitions", "expected an array");
    }
    for (std::size_t i = 0; i < j["transitions"].size(); ++i) {
        const std::string path = "/transitions/" + std::to_string(i);
        const auto& tj = j["transitions"][i];
        if (!tj.is_object()) throw ModelError(path, "expected an object");
        for (const auto& [key, value] : tj.items()) {
            if (key != "species" && key != "jump" && key != "rate") {
                throw ModelError(path + "/" + key, "unknown key");
            }
        }
        Transition t;
        if (!tj.contains("species") || !tj["species"].is_string()) {
            throw ModelError(path + "/species", "expected a string");
        }
        t.species = tj["species"].get<std::string>();
        if (!species_set.count(t.species)) {
            throw ModelError(path + "/species", "undeclared species '" + t.species + "'");
        }
        if (!tj.contains("jump") || !tj["jump"].is_array() ||
            tj["jump"].size() != static_cast<std::size_t>(m.dimension)) {
            throw ModelError(path + "/jump",
                             "expected an array of " + std::to_string(m.dimension) + " integers");
        }
        bool all_zero = true;
        for (const auto& c : tj["jump"]) {
            if (!c.is_number_integer()) throw ModelError(path + "/jump", "expected integers");
            t.jump.push_back(c.get<int>());
            if (t.jump.back() != 0) all_zero = false;
        }
        if (all_zero) throw ModelError(path + "/jump", "jump vector must be nonzero");
        if (!tj.contains("rate") || !tj["rate"].is_string()) {
            throw ModelError(path + "/rate", "expected a rate string");
        }
        try {
            t.rate = parse_rate(tj["rate"].get<std::string>(), m);
        } catch (const RateParseError& e) {
            throw ModelError(path + "/rate", e.what());
        }
        m.transitions.push_back(std::move(t));
    }

    m.fingerprint = content_fingerprint(text);
    return m;
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("/", "cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_json(buf.str());
}

} // namespace mfderive
