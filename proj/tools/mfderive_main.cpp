// mfderive: derive mean-field PDE systems from lattice hopping models and
// rewrite differential polynomials in conservative form.
#include "mfderive/mfderive.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitScaling = 2;
constexpr int kExitGoldenMismatch = 3;

[[noreturn]] void die(const std::string& kind, const std::string& message, int code) {
    std::cerr << "mfderive: error[" << kind << "]: " << message << "\n";
    std::exit(code);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) die("io", "cannot open output file '" + out_path + "'", kExitUsage);
    out << text;
}

struct DeriveFlags {
    std::string model_path;
    int order = 2;
    int scaling = 1;
    int keep = 2;
    int depth = 2;
    std::string func_order;
    std::string var_order;
    std::string format = "text";
    std::string out_path;
    bool timings = false;
};

void add_pipeline_options(CLI::App* cmd, DeriveFlags& f) {
    cmd->add_option("--model", f.model_path, "model file (JSON)")->required();
    cmd->add_option("--order", f.order, "spatial Taylor order K");
    cmd->add_option("--scaling", f.scaling, "time scaling s, dt = h^s (1 hyperbolic, 2 parabolic)")
        ->check(CLI::IsMember({1, 2}));
    cmd->add_option("--keep", f.keep, "h powers kept after the limit");
    cmd->add_option("--depth", f.depth, "maximal integration depth");
    cmd->add_option("--func-order", f.func_order, "comma-separated species elimination order");
    cmd->add_option("--var-order", f.var_order, "comma-separated integration variable order");
}

mfderive::IntegrationOrder build_order(const mfderive::Model& model, const DeriveFlags& f) {
    mfderive::IntegrationOrder ord = mfderive::default_integration_order(model, f.depth);
    if (!f.func_order.empty()) ord.funcs = split_csv(f.func_order);
    if (!f.var_order.empty()) {
        ord.vars.clear();
        for (const auto& name : split_csv(f.var_order)) {
            int index = -1;
            for (const auto& v : model.variables) {
                if (v.name == name) index = v.index;
            }
            if (index < 0) die("usage", "unknown variable '" + name + "' in --var-order", kExitUsage);
            ord.vars.push_back(mfderive::VarId{name, index});
        }
    }
    return ord;
}

mfderive::DerivationReport run_pipeline(const mfderive::Model& model, const DeriveFlags& f) {
    mfderive::ExpansionOptions opts;
    opts.order = f.order;
    opts.scaling = f.scaling;
    opts.keep = f.keep;
    return mfderive::derive(model, opts, build_order(model, f));
}

int cmd_derive(const DeriveFlags& f) {
    const mfderive::Model model = mfderive::load_model(f.model_path);
    const mfderive::DerivationReport report = run_pipeline(model, f);
    std::string text;
    if (f.format == "latex") {
        text = mfderive::render_system_latex(report.system);
    } else if (f.format == "text") {
        text = mfderive::render_system_text(report.system);
    } else if (f.format == "sexp") {
        text = mfderive::render_system_sexp(report.system);
    } else {
        text = mfderive::render_report_json(report, f.timings);
    }
    emit(text, f.out_path);
    return kExitOk;
}

int cmd_expand(const DeriveFlags& f, const std::string& species, const std::string& format) {
    const mfderive::Model model = mfderive::load_model(f.model_path);
    const mfderive::LatticeExpr master = mfderive::build_master_rhs(model, species);
    const mfderive::ContinuumExpr expanded = mfderive::expand_lattice(master, f.order);
    std::vector<std::string> vars;
    for (const auto& v : model.variables) vars.push_back(v.name);
    std::string text;
    if (format == "latex") {
        text = mfderive::render_latex(expanded, vars) + "\n";
    } else if (format == "text") {
        text = mfderive::render_text(expanded, vars) + "\n";
    } else if (format == "sexp") {
        text = mfderive::render_sexp(expanded, vars) + "\n";
    } else {
        nlohmann::json j;
        j["species"] = species;
        j["order"] = f.order;
        j["expansion"] = mfderive::render_sexp(expanded, vars);
        text = j.dump(2) + "\n";
    }
    emit(text, f.out_path);
    return kExitOk;
}

int cmd_integrate(const std::string& expr_text, const std::string& funcs_csv,
                  const std::string& vars_csv, int depth, const std::string& format,
                  const std::string& out_path) {
    const mfderive::ParsedExpr parsed = mfderive::parse_sexp_expr(expr_text);
    const std::vector<std::string> var_names =
        vars_csv.empty() ? parsed.variables : split_csv(vars_csv);
    if (var_names.empty()) {
        die("usage", "no integration variables: pass --vars or use an expression with dt entries",
            kExitUsage);
    }
    const mfderive::ContinuumExpr expr =
        parsed.variables.empty() ? parsed.expr
                                 : mfderive::remap_variables(parsed.expr, parsed.variables, var_names);
    mfderive::IntegrationOrder ord;
    ord.funcs = split_csv(funcs_csv);
    for (std::size_t i = 0; i < var_names.size(); ++i) {
        ord.vars.push_back(mfderive::VarId{var_names[i], static_cast<int>(i)});
    }
    ord.depth = depth;
    const mfderive::Decomposition dec = mfderive::partial_integrate(expr, ord);
    std::string text;
    if (format == "latex") {
        text = mfderive::render_latex(dec, var_names) + "\n";
    } else if (format == "text") {
        text = mfderive::render_text(dec, var_names) + "\n";
    } else if (format == "sexp") {
        text = mfderive::render_sexp(dec, var_names) + "\n";
    } else {
        nlohmann::json j;
        j["funcs"] = ord.funcs;
        j["vars"] = var_names;
        j["depth"] = depth;
        j["decomposition"] = mfderive::render_sexp(dec, var_names);
        j["flattened"] = mfderive::render_sexp(mfderive::flatten(dec), var_names);
        text = j.dump(2) + "\n";
    }
    emit(text, out_path);
    return kExitOk;
}

int cmd_check(const DeriveFlags& f, const std::string& golden_path) {
    const mfderive::Model model = mfderive::load_model(f.model_path);
    const mfderive::DerivationReport report = run_pipeline(model, f);
    std::ifstream in(golden_path, std::ios::binary);
    if (!in) die("io", "cannot open golden file '" + golden_path + "'", kExitUsage);
    std::ostringstream buf;
    buf << in.rdbuf();
    const mfderive::ParsedSystem golden = mfderive::parse_sexp_system(buf.str());
    if (golden.variables != report.system.variables) {
        die("golden", "golden file variables do not match the model's", kExitGoldenMismatch);
    }
    const mfderive::GoldenComparison cmp =
        mfderive::compare_against_golden(report.system, golden);
    for (const auto& entry : cmp.entries) {
        if (entry.missing) {
            std::cout << "species " << entry.species << ": missing\n";
        } else {
            std::cout << "species " << entry.species << ": "
                      << (entry.matched ? "match" : "MISMATCH") << "\n";
        }
    }
    if (!cmp.all_matched) {
        die("golden", "derived system does not match '" + golden_path + "'", kExitGoldenMismatch);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"symbolic mean-field PDE derivation for lattice hopping models"};
    app.require_subcommand(1);

    static const std::vector<std::string> formats = {"latex", "text", "sexp", "json"};
    auto format_check = CLI::IsMember(formats);

    DeriveFlags derive_flags;
    CLI::App* derive_cmd = app.add_subcommand("derive", "derive the mean-field PDE system");
    add_pipeline_options(derive_cmd, derive_flags);
    derive_cmd->add_option("--format", derive_flags.format, "output format")->check(format_check);
    derive_cmd->add_option("--out", derive_flags.out_path, "write output to a file");
    derive_cmd->add_flag("--timings", derive_flags.timings,
                         "include per-stage timings in JSON output");

    std::string expr_text, funcs_csv, vars_csv;
    int integrate_depth = 1;
    std::string integrate_format = "text", integrate_out;
    CLI::App* integrate_cmd =
        app.add_subcommand("integrate", "decompose a differential polynomial");
    integrate_cmd->add_option("--expr", expr_text, "expression (s-expression)")->required();
    integrate_cmd->add_option("--funcs", funcs_csv, "comma-separated function order")->required();
    integrate_cmd->add_option("--vars", vars_csv, "comma-separated variable order");
    integrate_cmd->add_option("--depth", integrate_depth, "maximal integration depth");
    integrate_cmd->add_option("--format", integrate_format, "output format")->check(format_check);
    integrate_cmd->add_option("--out", integrate_out, "write output to a file");

    DeriveFlags expand_flags;
    std::string expand_species, expand_format = "text";
    CLI::App* expand_cmd =
        app.add_subcommand("expand", "Taylor-expand the master equation for one species");
    expand_cmd->add_option("--model", expand_flags.model_path, "model file (JSON)")->required();
    expand_cmd->add_option("--species", expand_species, "species to expand")->required();
    expand_cmd->add_option("--order", expand_flags.order, "spatial Taylor order K");
    expand_cmd->add_option("--format", expand_format, "output format")->check(format_check);
    expand_cmd->add_option("--out", expand_flags.out_path, "write output to a file");

    DeriveFlags check_flags;
    std::string golden_path;
    CLI::App* check_cmd = app.add_subcommand("check", "compare a derivation against a golden file");
    add_pipeline_options(check_cmd, check_flags);
    check_cmd->add_option("--against", golden_path, "golden system (s-expression)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "mfderive: error[usage]: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*derive_cmd) return cmd_derive(derive_flags);
        if (*integrate_cmd) {
            return cmd_integrate(expr_text, funcs_csv, vars_csv, integrate_depth,
                                 integrate_format, integrate_out);
        }
        if (*expand_cmd) return cmd_expand(expand_flags, expand_species, expand_format);
        if (*check_cmd) return cmd_check(check_flags, golden_path);
    } catch (const mfderive::ScalingObstruction& e) {
        die("scaling", e.what(), kExitScaling);
    } catch (const mfderive::ModelError& e) {
        die("model", e.what(), kExitUsage);
    } catch (const mfderive::SexpError& e) {
        die("sexp", e.what(), kExitUsage);
    } catch (const mfderive::RateParseError& e) {
        die("rate", e.what(), kExitUsage);
    } catch (const mfderive::MissingAssignmentError& e) {
        die("eval", e.what(), kExitUsage);
    } catch (const std::exception& e) {
        die("usage", e.what(), kExitUsage);
    }
    return kExitUsage;
}
