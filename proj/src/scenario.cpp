#include "compare_kit/scenario.hpp"

#include "compare_kit/errors.hpp"
#include "compare_kit/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace compare_kit {

using nlohmann::json;

std::string_view to_string(ScenarioKind k) {
    return k == ScenarioKind::Binary ? "binary" : "survival";
}

std::string_view to_string(Recommendation r) {
    return r == Recommendation::Composite ? "composite" : "relevant";
}

Recommendation recommend(double are) {
    return are > 1.0 ? Recommendation::Composite : Recommendation::Relevant;
}

namespace {

const std::set<std::string> kBinaryKeys = {
    "kind",  "label", "p1",        "p2",       "delta1",
    "delta2", "rho",  "alpha",     "power",    "sidedness",
    "variance", "conditional_eps1_given_eps2", "conditional_eps2_given_eps1"};

const std::set<std::string> kSurvivalKeys = {
    "kind", "label", "p1", "p2", "hr1", "hr2", "shape1", "shape2", "spearman_rho",
    "tau", "eps1_terminal", "copula_scale", "alpha", "power", "sidedness"};

double number_field(const json& doc, const std::string& key, std::optional<double> fallback) {
    auto it = doc.find(key);
    if (it == doc.end()) {
        if (fallback) return *fallback;
        fail_validation(key, "is required");
    }
    if (!it->is_number()) fail_validation(key, "must be a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) fail_validation(key, "must be finite");
    return v;
}

std::string string_field(const json& doc, const std::string& key, const std::string& fallback) {
    auto it = doc.find(key);
    if (it == doc.end()) return fallback;
    if (!it->is_string()) fail_validation(key, "must be a string");
    return it->get<std::string>();
}

Sidedness sidedness_from_name(const std::string& name) {
    if (name == "one") return Sidedness::One;
    if (name == "two") return Sidedness::Two;
    fail_validation("sidedness", "must be \"one\" or \"two\"");
}

VarianceVariant variance_from_name(const std::string& name) {
    if (name == "pooled") return VarianceVariant::Pooled;
    if (name == "unpooled") return VarianceVariant::Unpooled;
    fail_validation("variance", "must be \"pooled\" or \"unpooled\"");
}

survival::CopulaScale copula_scale_from_name(const std::string& name) {
    if (name == "distribution") return survival::CopulaScale::Distribution;
    if (name == "survival") return survival::CopulaScale::Survival;
    fail_validation("copula_scale", "must be \"distribution\" or \"survival\"");
}

double shape_field(const json& doc, const std::string& key) {
    auto it = doc.find(key);
    if (it == doc.end()) return 1.0;
    if (it->is_number()) {
        const double v = it->get<double>();
        if (!(v > 0.0) || !std::isfinite(v)) fail_validation(key, "must be positive");
        return v;
    }
    if (!it->is_string()) fail_validation(key, "must be a shape name or a positive number");
    try {
        return survival::shape_from_name(it->get<std::string>());
    } catch (const Error& e) {
        throw Error(ErrorCode::Validation, e.what(), key);
    }
}

void reject_unknown(const json& doc, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : doc.items()) {
        if (!allowed.count(key)) fail_validation(key, "unknown field");
    }
}

json shape_to_json(double shape) {
    const std::string name = survival::shape_name(shape);
    if (name == "constant" || name == "increasing" || name == "decreasing") return name;
    return shape;
}

double parse_number(std::string_view text, const std::string& field) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || text.empty()) {
        fail_validation(field, "'" + std::string(text) + "' is not a number");
    }
    return v;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

DesignReport evaluate_binary(const Scenario& s) {
    const auto& in = s.binary;
    in.validate();
    const auto eff = binary::efficiency_binary(in);
    const auto treat = in.treatment_marginals();
    const auto bounds = binary::correlation_bounds(in.marginals);
    const auto cond = binary::conditionals_from_correlation(in.marginals, in.rho);

    DesignReport r;
    r.label = s.label;
    r.kind = ScenarioKind::Binary;
    r.p_star_control = eff.p_star_control;
    r.effect_star = eff.delta_star;
    r.are = eff.are;
    r.recommendation = recommend(eff.are);
    r.n_total_composite = 2 * static_cast<int>(std::ceil(eff.n_composite_per_arm));
    r.n_total_relevant = 2 * static_cast<int>(std::ceil(eff.n_relevant_per_arm));
    r.diagnostics = {
        {"rho", in.rho},
        {"p_star_treatment", eff.p_star_treatment},
        {"p12_control", binary::joint_prob_from_correlation(in.marginals, in.rho)},
        {"p12_treatment", binary::joint_prob_from_correlation(treat, in.rho)},
        {"conditional_eps1_given_eps2", cond.eps1_given_eps2},
        {"conditional_eps2_given_eps1", cond.eps2_given_eps1},
        {"rho_min", bounds.rho_min},
        {"rho_max", bounds.rho_max},
        {"n_composite_exact", 2.0 * eff.n_composite_per_arm},
        {"n_relevant_exact", 2.0 * eff.n_relevant_per_arm},
    };
    return r;
}

DesignReport evaluate_survival(const Scenario& s) {
    const auto& d = s.survival;
    const auto eff = survival::efficiency_survival(d.scenario, d.alpha, d.power, d.sidedness);

    DesignReport r;
    r.label = s.label;
    r.kind = ScenarioKind::Survival;
    r.p_star_control = eff.p_star_control;
    r.effect_star = eff.effective_hr;
    r.are = eff.are;
    r.recommendation = recommend(eff.are);
    r.n_total_composite = eff.composite.n_total;
    r.n_total_relevant = eff.relevant.n_total;
    r.diagnostics = {
        {"theta", eff.theta},
        {"p_star_treatment", eff.p_star_treatment},
        {"p1_treatment", eff.p1_treatment},
        {"latent_p2_control", eff.latent_p2_control},
        {"non_proportionality_index", eff.non_proportionality_index},
        {"events_composite", eff.composite.events},
        {"events_relevant", eff.relevant.events},
        {"n_composite_exact", eff.composite.n_exact},
        {"n_relevant_exact", eff.relevant.n_exact},
        {"n_relevant_over_are", eff.relevant.n_exact / eff.are},
    };
    return r;
}

void set_alpha_power(Scenario& s, std::string_view name, double v) {
    if (s.kind == ScenarioKind::Binary) {
        (name == "alpha" ? s.binary.alpha : s.binary.power) = v;
    } else {
        (name == "alpha" ? s.survival.alpha : s.survival.power) = v;
    }
}

double require_number(const GridValue& value, std::string_view name) {
    if (value.number) return *value.number;
    return parse_number(value.text, std::string(name));
}

double shape_value(const GridValue& value, const std::string& field) {
    if (value.number) return *value.number;
    try {
        return survival::shape_from_name(value.text);
    } catch (const Error& e) {
        throw Error(ErrorCode::Validation, e.what(), field);
    }
}

void check_design_levels(double alpha, double power) {
    if (!(alpha > 0.0 && alpha < 0.5)) fail_validation("alpha", "must lie in (0, 0.5)");
    if (!(power > 0.5 && power < 1.0)) fail_validation("power", "must lie in (0.5, 1)");
}

}  // namespace

void Scenario::validate() const {
    if (kind == ScenarioKind::Binary) {
        binary.validate();
        return;
    }
    survival.scenario.validate();
    check_design_levels(survival.alpha, survival.power);
}

Scenario scenario_from_json(const json& doc) {
    if (!doc.is_object()) fail_validation("scenario", "must be a JSON object");
    const std::string kind = string_field(doc, "kind", "");
    Scenario s;
    s.label = string_field(doc, "label", "");
    if (kind == "binary") {
        reject_unknown(doc, kBinaryKeys);
        s.kind = ScenarioKind::Binary;
        auto& in = s.binary;
        in.marginals.p1 = number_field(doc, "p1", std::nullopt);
        in.marginals.p2 = number_field(doc, "p2", std::nullopt);
        in.marginals.validate("");
        in.effect.delta1 = number_field(doc, "delta1", std::nullopt);
        in.effect.delta2 = number_field(doc, "delta2", std::nullopt);
        in.alpha = number_field(doc, "alpha", 0.05);
        in.power = number_field(doc, "power", 0.80);
        in.sidedness = sidedness_from_name(string_field(doc, "sidedness", "one"));
        in.variance = variance_from_name(string_field(doc, "variance", "pooled"));
        const int given = static_cast<int>(doc.contains("rho")) +
                          static_cast<int>(doc.contains("conditional_eps1_given_eps2")) +
                          static_cast<int>(doc.contains("conditional_eps2_given_eps1"));
        if (given != 1) {
            fail_validation("rho", "give exactly one of rho, conditional_eps1_given_eps2, "
                                   "conditional_eps2_given_eps1");
        }
        if (doc.contains("rho")) {
            in.rho = number_field(doc, "rho", std::nullopt);
        } else if (doc.contains("conditional_eps1_given_eps2")) {
            const double c = number_field(doc, "conditional_eps1_given_eps2", std::nullopt);
            in.rho = binary::correlation_from_conditional(in.marginals, c);
        } else {
            const double c = number_field(doc, "conditional_eps2_given_eps1", std::nullopt);
            in.rho = binary::correlation_from_reverse_conditional(in.marginals, c);
        }
    } else if (kind == "survival") {
        reject_unknown(doc, kSurvivalKeys);
        s.kind = ScenarioKind::Survival;
        auto& sc = s.survival.scenario;
        sc.p1 = number_field(doc, "p1", std::nullopt);
        sc.p2 = number_field(doc, "p2", std::nullopt);
        sc.hr1 = number_field(doc, "hr1", std::nullopt);
        sc.hr2 = number_field(doc, "hr2", std::nullopt);
        sc.shape1 = shape_field(doc, "shape1");
        sc.shape2 = shape_field(doc, "shape2");
        sc.spearman_rho = number_field(doc, "spearman_rho", std::nullopt);
        sc.tau = number_field(doc, "tau", 1.0);
        if (auto it = doc.find("eps1_terminal"); it != doc.end()) {
            if (!it->is_boolean()) fail_validation("eps1_terminal", "must be true or false");
            sc.eps1_terminal = it->get<bool>();
        }
        sc.copula_scale = copula_scale_from_name(string_field(doc, "copula_scale", "distribution"));
        s.survival.alpha = number_field(doc, "alpha", 0.05);
        s.survival.power = number_field(doc, "power", 0.80);
        s.survival.sidedness = sidedness_from_name(string_field(doc, "sidedness", "one"));
    } else {
        fail_validation("kind", "must be \"binary\" or \"survival\"");
    }
    s.validate();
    return s;
}

json scenario_to_json(const Scenario& s) {
    json j;
    j["kind"] = to_string(s.kind);
    if (!s.label.empty()) j["label"] = s.label;
    if (s.kind == ScenarioKind::Binary) {
        const auto& in = s.binary;
        j["p1"] = in.marginals.p1;
        j["p2"] = in.marginals.p2;
        j["delta1"] = in.effect.delta1;
        j["delta2"] = in.effect.delta2;
        j["rho"] = in.rho;
        j["alpha"] = in.alpha;
        j["power"] = in.power;
        j["sidedness"] = to_string(in.sidedness);
        j["variance"] = to_string(in.variance);
    } else {
        const auto& sc = s.survival.scenario;
        j["p1"] = sc.p1;
        j["p2"] = sc.p2;
        j["hr1"] = sc.hr1;
        j["hr2"] = sc.hr2;
        j["shape1"] = shape_to_json(sc.shape1);
        j["shape2"] = shape_to_json(sc.shape2);
        j["spearman_rho"] = sc.spearman_rho;
        j["tau"] = sc.tau;
        j["eps1_terminal"] = sc.eps1_terminal;
        j["copula_scale"] = survival::to_string(sc.copula_scale);
        j["alpha"] = s.survival.alpha;
        j["power"] = s.survival.power;
        j["sidedness"] = to_string(s.survival.sidedness);
    }
    return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Validation,
                    "scenario file " + path.string() + " is not valid JSON: " + e.what());
    }
    Scenario s = scenario_from_json(doc);
    if (s.label.empty()) s.label = path.stem().string();
    return s;
}

std::optional<double> DesignReport::diagnostic(std::string_view name) const {
    for (const auto& d : diagnostics) {
        if (d.name == name) return d.value;
    }
    return std::nullopt;
}

DesignReport evaluate(const Scenario& scenario) {
    return scenario.kind == ScenarioKind::Binary ? evaluate_binary(scenario)
                                                 : evaluate_survival(scenario);
}

GridAxis parse_grid(std::string_view spec) {
    const auto eq = spec.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        fail_validation("grid", "expected name=start:stop:step or name=v1,v2,... (got '" +
                                    std::string(spec) + "')");
    }
    GridAxis axis;
    axis.name = trim(spec.substr(0, eq));
    const std::string body = trim(spec.substr(eq + 1));
    const std::string field = "grid." + axis.name;
    if (body.empty()) fail_validation(field, "no values given");

    if (body.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::string_view rest = body;
        while (true) {
            const auto c = rest.find(':');
            parts.push_back(parse_number(trim(rest.substr(0, c)), field));
            if (c == std::string_view::npos) break;
            rest = rest.substr(c + 1);
        }
        if (parts.size() != 3) fail_validation(field, "range must be start:stop:step");
        const double start = parts[0], stop = parts[1], step = parts[2];
        if (!(step > 0.0)) fail_validation(field, "step must be positive");
        if (stop < start) fail_validation(field, "stop must not be below start");
        const double count = std::floor((stop - start) / step + 1e-9);
        if (count > 10000) fail_validation(field, "range has more than 10000 points");
        for (int k = 0; k <= static_cast<int>(count); ++k) {
            // Round away the accumulated binary error so 0.1 + 3 * 0.05 is 0.25.
            const double v = std::stod(format_number(start + k * step));
            axis.values.push_back({format_number(v), v});
        }
        return axis;
    }

    std::string_view rest = body;
    while (true) {
        const auto c = rest.find(',');
        const std::string item = trim(rest.substr(0, c));
        if (item.empty()) fail_validation(field, "empty list element");
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec == std::errc{} && ptr == item.data() + item.size()) {
            axis.values.push_back({item, v});
        } else {
            axis.values.push_back({item, std::nullopt});
        }
        if (c == std::string_view::npos) break;
        rest = rest.substr(c + 1);
    }
    return axis;
}

void apply_parameter(Scenario& s, std::string_view name, const GridValue& value) {
    const std::string field(name);
    if (name == "alpha" || name == "power") {
        set_alpha_power(s, name, require_number(value, name));
        return;
    }
    if (s.kind == ScenarioKind::Binary) {
        auto& in = s.binary;
        const double v = require_number(value, name);
        if (name == "p1") in.marginals.p1 = v;
        else if (name == "p2") in.marginals.p2 = v;
        else if (name == "delta1") in.effect.delta1 = v;
        else if (name == "delta2") in.effect.delta2 = v;
        else if (name == "rho") in.rho = v;
        else fail_validation(field, "unknown binary parameter '" + field +
                                        "' (expected p1, p2, delta1, delta2, rho, alpha, power)");
        return;
    }
    auto& sc = s.survival.scenario;
    if (name == "shape1") {
        sc.shape1 = shape_value(value, field);
    } else if (name == "shape2") {
        sc.shape2 = shape_value(value, field);
    } else if (name == "shapes") {
        const auto sep = value.text.find_first_of("/:");
        if (sep == std::string::npos) {
            fail_validation(field, "expected shape1/shape2, e.g. increasing/decreasing");
        }
        sc.shape1 = shape_value({value.text.substr(0, sep), std::nullopt}, field);
        sc.shape2 = shape_value({value.text.substr(sep + 1), std::nullopt}, field);
    } else {
        const double v = require_number(value, name);
        if (name == "p1") sc.p1 = v;
        else if (name == "p2") sc.p2 = v;
        else if (name == "hr1") sc.hr1 = v;
        else if (name == "hr2") sc.hr2 = v;
        else if (name == "rho" || name == "spearman_rho") sc.spearman_rho = v;
        else if (name == "tau") sc.tau = v;
        else fail_validation(field, "unknown survival parameter '" + field +
                                        "' (expected p1, p2, hr1, hr2, rho, shape1, shape2, "
                                        "shapes, tau, alpha, power)");
    }
}

SweepTable sweep(const Scenario& base, const std::vector<GridAxis>& axes) {
    if (axes.empty() || axes.size() > 2) fail_validation("grid", "give one or two grid axes");
    for (const auto& axis : axes) {
        if (axis.values.empty()) fail_validation("grid." + axis.name, "no values given");
        Scenario probe = base;
        apply_parameter(probe, axis.name, axis.values.front());  // rejects unknown names
    }
    if (axes.size() == 2 && axes[0].name == axes[1].name) {
        fail_validation("grid", "the two axes must differ");
    }

    SweepTable table;
    table.label = base.label;
    table.kind = base.kind;
    table.axis1 = axes[0];
    if (axes.size() == 2) table.axis2 = axes[1];
    const std::size_t n2 = table.axis2_size();
    table.cells.resize(table.axis1.values.size() * n2);

    std::vector<std::exception_ptr> fatal(table.cells.size());
    parallel_for(table.cells.size(), [&](std::size_t idx) {
        SweepCell& cell = table.cells[idx];
        cell.coords.push_back(table.axis1.values[idx / n2]);
        if (table.axis2) cell.coords.push_back(table.axis2->values[idx % n2]);
        try {
            Scenario s = base;
            apply_parameter(s, table.axis1.name, cell.coords[0]);
            if (table.axis2) apply_parameter(s, table.axis2->name, cell.coords[1]);
            cell.report = evaluate(s);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::QuadratureFailure || e.code() == ErrorCode::Internal) {
                fatal[idx] = std::current_exception();
                return;
            }
            cell.infeasible_code = error_code_name(e.code());
            cell.infeasible_reason = e.what();
        }
    });
    for (const auto& f : fatal) {
        if (f) std::rethrow_exception(f);
    }

    bool any = false;
    for (const auto& c : table.cells) any = any || c.report.has_value();
    if (!any) {
        const auto& first = table.cells.front();
        const ErrorCode code = first.infeasible_code == "UNDETECTABLE_EFFECT"
                                   ? ErrorCode::UndetectableEffect
                               : first.infeasible_code == "VALIDATION"
                                   ? ErrorCode::Validation
                                   : ErrorCode::InfeasibleAssociation;
        throw Error(code, "every grid cell is infeasible; first cell: " + first.infeasible_reason,
                    "grid");
    }

    const bool numeric_axis1 = std::all_of(table.axis1.values.begin(), table.axis1.values.end(),
                                           [](const GridValue& v) { return v.number.has_value(); });
    for (std::size_t i2 = 0; i2 < n2; ++i2) {
        bool decreasing = numeric_axis1;
        std::optional<double> prev;
        for (std::size_t i1 = 0; numeric_axis1 && i1 < table.axis1.values.size(); ++i1) {
            const auto& cell = table.at(i1, i2);
            if (!cell.report) continue;
            if (prev && !(cell.report->are < *prev)) decreasing = false;
            prev = cell.report->are;
        }
        table.are_decreasing_along_axis1.push_back(decreasing);
    }
    return table;
}

}  // namespace compare_kit
