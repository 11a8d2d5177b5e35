#include "compare_kit/errors.hpp"
#include "compare_kit/scenario.hpp"
#include "compare_kit/service.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using nlohmann::json;
namespace ck = compare_kit;
namespace api = compare_kit::service::api;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string format = "json";
    std::string output;
    std::string scenario_path;
    std::vector<std::string> grid;

    std::string kind = "binary";
    std::optional<double> p1, p2, delta1, delta2, rho, given_eps2, given_eps1;
    std::optional<double> hr1, hr2, spearman_rho, tau, theta, alpha, power;
    std::string shape1 = "constant", shape2 = "constant";
    std::optional<std::string> sidedness, variance, copula_scale;
    bool eps1_terminal = false;

    std::string endpoint = "composite";
    std::int64_t n_total = 0;
    std::int64_t replications = 1000;
    std::uint64_t seed = 0;
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ck::Error(ck::ErrorCode::Validation, path + " is not valid JSON: " + e.what(),
                        "scenario");
    }
}

json scenario_doc(const Options& o) {
    json doc = read_json_file(o.scenario_path);
    if (doc.is_object() && !doc.contains("label")) {
        std::string stem = o.scenario_path;
        if (auto slash = stem.find_last_of('/'); slash != std::string::npos) {
            stem = stem.substr(slash + 1);
        }
        if (auto dot = stem.rfind('.'); dot != std::string::npos) stem = stem.substr(0, dot);
        doc["label"] = stem;
    }
    return doc;
}

void put(json& doc, const char* key, const std::optional<double>& v) {
    if (v) doc[key] = *v;
}

void put(json& doc, const char* key, const std::optional<std::string>& v) {
    if (v) doc[key] = *v;
}

// Scenario document assembled from inline flags.
json inline_scenario(const Options& o) {
    json doc = {{"kind", o.kind}};
    put(doc, "p1", o.p1);
    put(doc, "p2", o.p2);
    put(doc, "alpha", o.alpha);
    put(doc, "power", o.power);
    put(doc, "sidedness", o.sidedness);
    if (o.kind == "binary") {
        put(doc, "delta1", o.delta1);
        put(doc, "delta2", o.delta2);
        put(doc, "rho", o.rho);
        put(doc, "conditional_eps1_given_eps2", o.given_eps2);
        put(doc, "conditional_eps2_given_eps1", o.given_eps1);
        put(doc, "variance", o.variance);
    } else {
        put(doc, "hr1", o.hr1);
        put(doc, "hr2", o.hr2);
        put(doc, "spearman_rho", o.spearman_rho ? o.spearman_rho : o.rho);
        put(doc, "tau", o.tau);
        put(doc, "copula_scale", o.copula_scale);
        doc["shape1"] = o.shape1;
        doc["shape2"] = o.shape2;
        doc["eps1_terminal"] = o.eps1_terminal;
    }
    return doc;
}

// Flattens nested objects to dotted keys for csv and markdown output.
void flatten(const json& j, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_string()) {
        out.emplace_back(prefix, j.get<std::string>());
    } else {
        out.emplace_back(prefix, j.dump());
    }
}

std::string render_payload(const json& payload, ck::Format format) {
    if (format == ck::Format::Json) return ck::service::dump_payload(payload);
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(payload, "", rows);
    std::ostringstream os;
    if (format == ck::Format::Csv) {
        for (std::size_t i = 0; i < rows.size(); ++i) os << (i ? "," : "") << rows[i].first;
        os << "\n";
        for (std::size_t i = 0; i < rows.size(); ++i) os << (i ? "," : "") << rows[i].second;
        os << "\n";
    } else if (format == ck::Format::Markdown) {
        os << "| Quantity | Value |\n|---|---|\n";
        for (const auto& [k, v] : rows) os << "| " << k << " | " << v << " |\n";
    } else {
        ck::fail_validation("format", "svg is available for sweeps only");
    }
    return os.str();
}

void emit(const std::string& text, const std::string& output) {
    if (output.empty() || output == "-") {
        std::cout << text;
        std::cout.flush();
        if (!std::cout) throw IoError("cannot write to stdout");
        return;
    }
    std::ofstream out(output, std::ios::binary);
    if (!out) throw IoError("cannot open " + output + " for writing");
    out << text;
    if (!out) throw IoError("cannot write " + output);
}

int exit_code(ck::ErrorCode code) {
    switch (code) {
        case ck::ErrorCode::QuadratureFailure:
        case ck::ErrorCode::Internal:
            return 3;
        default:
            return 2;
    }
}

void report_error(const Options& o, std::string_view code, const std::string& message,
                  const std::string& field) {
    std::cerr << "error [" << code << "]" << (field.empty() ? "" : " " + field) << ": " << message
              << "\n";
    if (o.format == "json") {
        const json err = {{"error", {{"code", code}, {"message", message}, {"field", field}}}};
        std::cout << ck::service::dump_payload(err);
    }
}

void add_binary_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--kind", o.kind, "binary or survival")
        ->check(CLI::IsMember({"binary", "survival"}));
    cmd->add_option("--p1", o.p1, "control probability of the relevant event");
    cmd->add_option("--p2", o.p2, "control probability of the additional event");
    cmd->add_option("--delta1", o.delta1, "risk reduction on the relevant event");
    cmd->add_option("--delta2", o.delta2, "risk reduction on the additional event");
    cmd->add_option("--rho", o.rho, "Pearson correlation (binary) or Spearman rho (survival)");
    cmd->add_option("--given-eps2", o.given_eps2, "P(eps1 | eps2) in place of --rho");
    cmd->add_option("--given-eps1", o.given_eps1, "P(eps2 | eps1) in place of --rho");
    cmd->add_option("--alpha", o.alpha, "significance level (default 0.05)");
    cmd->add_option("--power", o.power, "target power (default 0.80)");
    cmd->add_option("--sidedness", o.sidedness, "one or two (default one)");
    cmd->add_option("--variance", o.variance, "pooled or unpooled (default pooled)");
}

void add_survival_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--hr1", o.hr1, "hazard ratio on the relevant event");
    cmd->add_option("--hr2", o.hr2, "hazard ratio on the additional event");
    cmd->add_option("--shape1", o.shape1, "constant, increasing, decreasing or a Weibull shape");
    cmd->add_option("--shape2", o.shape2, "constant, increasing, decreasing or a Weibull shape");
    cmd->add_option("--spearman-rho", o.spearman_rho, "Spearman rho between event times");
    cmd->add_option("--tau", o.tau, "follow-up horizon (default 1)");
    cmd->add_flag("--eps1-terminal", o.eps1_terminal, "the relevant event is death");
    cmd->add_option("--copula-scale", o.copula_scale, "distribution (default) or survival");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Composite endpoint design calculator"};
    app.set_version_flag("--version", COMPARE_KIT_VERSION);
    app.require_subcommand(1);
    Options o;

    auto add_io = [&](CLI::App* cmd, bool svg) {
        cmd->add_option("--format", o.format, "json, csv or markdown" + std::string(svg ? " or svg" : ""))
            ->check(svg ? CLI::IsMember({"json", "csv", "markdown", "md", "svg"})
                        : CLI::IsMember({"json", "csv", "markdown", "md"}));
        cmd->add_option("--output,-o", o.output, "output file (default stdout)");
    };

    auto* evaluate = app.add_subcommand("evaluate", "ARE, recommendation and sample sizes");
    evaluate->add_option("--scenario", o.scenario_path, "scenario JSON file")->required();
    add_io(evaluate, false);

    auto* sweep = app.add_subcommand("sweep", "evaluate a scenario over one or two grid axes");
    sweep->add_option("--scenario", o.scenario_path, "scenario JSON file")->required();
    sweep->add_option("--grid", o.grid, "name=start:stop:step or name=v1,v2 (up to two)")
        ->required();
    add_io(sweep, true);

    auto* samplesize = app.add_subcommand("samplesize", "composite and relevant sample sizes");
    samplesize->add_option("--scenario", o.scenario_path, "scenario JSON file (replaces flags)");
    add_binary_flags(samplesize, o);
    add_survival_flags(samplesize, o);
    add_io(samplesize, false);

    auto* associate = app.add_subcommand("associate", "convert between association measures");
    associate->add_option("--p1", o.p1, "probability of the relevant event");
    associate->add_option("--p2", o.p2, "probability of the additional event");
    associate->add_option("--rho", o.rho, "Pearson correlation of the binary components");
    associate->add_option("--given-eps2", o.given_eps2, "P(eps1 | eps2)");
    associate->add_option("--given-eps1", o.given_eps1, "P(eps2 | eps1)");
    associate->add_option("--spearman-rho", o.spearman_rho, "Spearman rho (Gumbel copula)");
    associate->add_option("--theta", o.theta, "Gumbel copula parameter");
    add_io(associate, false);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo power at a given sample size");
    simulate->add_option("--scenario", o.scenario_path, "scenario JSON file")->required();
    simulate->add_option("--endpoint", o.endpoint, "composite or relevant")
        ->check(CLI::IsMember({"composite", "relevant"}));
    simulate->add_option("--n-total", o.n_total, "total sample size")->required();
    simulate->add_option("--replications", o.replications, "number of simulated trials");
    simulate->add_option("--seed", o.seed, "random seed");
    add_io(simulate, false);

    auto* bounds = app.add_subcommand("bounds", "feasible Pearson correlation range");
    bounds->add_option("--p1", o.p1, "probability of the relevant event")->required();
    bounds->add_option("--p2", o.p2, "probability of the additional event")->required();
    bounds->add_option("--delta1", o.delta1, "risk reduction on the relevant event");
    bounds->add_option("--delta2", o.delta2, "risk reduction on the additional event");
    add_io(bounds, false);

    auto* serve = app.add_subcommand("serve", "run the HTTP service (BIND_ADDR, MAX_SIM_DRAWS, "
                                              "CORS_ORIGIN, LOG_LEVEL)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const ck::Format format = ck::format_from_name(o.format);
        std::string text;
        if (evaluate->parsed()) {
            const json result = api::evaluate(scenario_doc(o));
            text = format == ck::Format::Json
                       ? ck::service::dump_payload(result)
                       : ck::render_report(ck::report_from_json(result), format);
        } else if (sweep->parsed()) {
            const json result = api::sweep({{"scenario", scenario_doc(o)}, {"grid", o.grid}});
            text = format == ck::Format::Json
                       ? ck::service::dump_payload(result)
                       : ck::render_table(ck::table_from_json(result), format);
        } else if (samplesize->parsed()) {
            const json doc = o.scenario_path.empty() ? inline_scenario(o) : scenario_doc(o);
            text = render_payload(api::samplesize(doc), format);
        } else if (associate->parsed()) {
            json body = json::object();
            put(body, "p1", o.p1);
            put(body, "p2", o.p2);
            put(body, "rho", o.rho);
            put(body, "conditional_eps1_given_eps2", o.given_eps2);
            put(body, "conditional_eps2_given_eps1", o.given_eps1);
            put(body, "spearman_rho", o.spearman_rho);
            put(body, "theta", o.theta);
            text = render_payload(api::convert_association(body), format);
        } else if (simulate->parsed()) {
            const json body = {{"scenario", scenario_doc(o)},
                               {"endpoint", o.endpoint},
                               {"n_total", o.n_total},
                               {"n_replications", o.replications},
                               {"seed", o.seed}};
            const auto config = ck::service::ServiceConfig::from_env();
            text = render_payload(api::simulate(body, config.max_sim_draws), format);
        } else if (bounds->parsed()) {
            json body = json::object();
            put(body, "p1", o.p1);
            put(body, "p2", o.p2);
            put(body, "delta1", o.delta1);
            put(body, "delta2", o.delta2);
            text = render_payload(api::bounds(body), format);
        } else if (serve->parsed()) {
            ck::service::Service(ck::service::ServiceConfig::from_env()).serve();
            return 0;
        }
        emit(text, o.output);
        return 0;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ck::Error& e) {
        report_error(o, ck::error_code_name(e.code()), e.what(), e.field());
        return exit_code(e.code());
    } catch (const json::exception& e) {
        report_error(o, "VALIDATION", e.what(), "");
        return 2;
    } catch (const std::exception& e) {
        report_error(o, "INTERNAL", e.what(), "");
        return 3;
    }
}
