#include "compare_kit/errors.hpp"
#include "compare_kit/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace compare_kit {

using nlohmann::json;

Format format_from_name(std::string_view name) {
    if (name == "json") return Format::Json;
    if (name == "csv") return Format::Csv;
    if (name == "markdown" || name == "md") return Format::Markdown;
    if (name == "svg") return Format::Svg;
    fail_validation("format", "expected json, csv, markdown or svg (got '" + std::string(name) +
                                  "')");
}

namespace {

ScenarioKind kind_from_name(const std::string& name) {
    if (name == "binary") return ScenarioKind::Binary;
    if (name == "survival") return ScenarioKind::Survival;
    fail_validation("kind", "must be \"binary\" or \"survival\"");
}

Recommendation recommendation_from_name(const std::string& name) {
    if (name == "composite") return Recommendation::Composite;
    if (name == "relevant") return Recommendation::Relevant;
    fail_validation("recommendation", "must be \"composite\" or \"relevant\"");
}

json grid_value_to_json(const GridValue& v) {
    if (v.number) return *v.number;
    return v.text;
}

GridValue grid_value_from_json(const json& j) {
    if (j.is_number()) {
        const double v = j.get<double>();
        std::ostringstream os;
        os.precision(12);
        os << v;
        return {os.str(), v};
    }
    return {j.get<std::string>(), std::nullopt};
}

json axis_to_json(const GridAxis& axis) {
    json values = json::array();
    for (const auto& v : axis.values) values.push_back(grid_value_to_json(v));
    return {{"name", axis.name}, {"values", values}};
}

GridAxis axis_from_json(const json& j) {
    GridAxis axis;
    axis.name = j.at("name").get<std::string>();
    for (const auto& v : j.at("values")) axis.values.push_back(grid_value_from_json(v));
    return axis;
}

// Shortest text that reads back to the same double.
std::string exact(double v) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string thousands(long long n) {
    std::string digits = std::to_string(n < 0 ? -n : n);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
        out += digits[i];
    }
    return n < 0 ? "-" + out : out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string association_label(double rho) {
    if (rho < 0.0) return "Negative";
    if (rho == 0.0) return "None";
    if (rho < 0.25) return "Weak";
    if (rho < 0.55) return "Moderate";
    return "Strong";
}

std::string hazard_label(double shape) {
    const std::string name = survival::shape_name(shape);
    if (name == "constant") return "Constant";
    if (name == "increasing") return "Increasing";
    if (name == "decreasing") return "Decreasing";
    return "Weibull " + name;
}

const std::vector<std::string> kReportColumns = {
    "label",           "kind",      "p_star_control", "effect_star",
    "are",             "recommendation", "n_total_composite", "n_total_relevant"};

std::vector<std::string> report_values(const DesignReport& r) {
    return {r.label,
            std::string(to_string(r.kind)),
            exact(r.p_star_control),
            exact(r.effect_star),
            exact(r.are),
            std::string(to_string(r.recommendation)),
            std::to_string(r.n_total_composite),
            std::to_string(r.n_total_relevant)};
}

std::string join_csv(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += csv_field(fields[i]);
    }
    return line + "\n";
}

std::string markdown_row(const std::vector<std::string>& cells) {
    std::string line = "|";
    for (const auto& c : cells) line += " " + c + " |";
    return line + "\n";
}

std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
    std::string out = markdown_row(header);
    out += "|";
    for (std::size_t i = 0; i < header.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& r : rows) out += markdown_row(r);
    return out;
}

const std::vector<std::string> kBinaryMarkdownHeader = {
    "Association",
    "Correlation",
    "Conditional probability ε1 given ε2",
    "Conditional probability ε2 given ε1",
    "Probability of observing ε*",
    "Percentage-point absolute reduction ε*",
    "Total Sample Size"};

std::vector<std::string> binary_markdown_row(const DesignReport& r, double rho) {
    return {association_label(rho),
            fixed(rho, 1),
            fixed(r.diagnostic("conditional_eps1_given_eps2").value_or(NAN), 2),
            fixed(r.diagnostic("conditional_eps2_given_eps1").value_or(NAN), 2),
            fixed(r.p_star_control, 2),
            fixed(100.0 * r.effect_star, 1),
            thousands(r.n_total_composite)};
}

const std::vector<std::string> kSurvivalMarkdownHeader = {"Hazard ε1", "Hazard ε2", "ARE",
                                                          "Total Sample Size"};

const std::vector<std::string> kGenericMarkdownTail = {
    "Probability of ε*", "Effect on ε*", "ARE", "Recommendation", "Total Sample Size"};

std::vector<std::string> generic_markdown_tail(const DesignReport& r) {
    const std::string effect = r.kind == ScenarioKind::Binary
                                   ? fixed(100.0 * r.effect_star, 1) + " pp"
                                   : "HR " + fixed(r.effect_star, 3);
    const int n = r.recommendation == Recommendation::Composite ? r.n_total_composite
                                                                : r.n_total_relevant;
    return {fixed(r.p_star_control, 2), effect, fixed(r.are, 2),
            std::string(to_string(r.recommendation)), thousands(n)};
}

std::vector<double> shapes_of(const SweepTable& t, std::size_t idx) {
    double s1 = 1.0, s2 = 1.0;
    const auto& c = t.cells[idx];
    auto apply = [&](const std::string& name, const GridValue& v) {
        if (name == "shape1") s1 = v.number ? *v.number : survival::shape_from_name(v.text);
        if (name == "shape2") s2 = v.number ? *v.number : survival::shape_from_name(v.text);
        if (name == "shapes") {
            const auto sep = v.text.find_first_of("/:");
            s1 = survival::shape_from_name(v.text.substr(0, sep));
            s2 = survival::shape_from_name(v.text.substr(sep + 1));
        }
    };
    apply(t.axis1.name, c.coords[0]);
    if (t.axis2) apply(t.axis2->name, c.coords[1]);
    return {s1, s2};
}

std::string render_svg(const SweepTable& t) {
    const bool numeric = std::all_of(t.axis1.values.begin(), t.axis1.values.end(),
                                     [](const GridValue& v) { return v.number.has_value(); });
    if (!numeric) fail_validation("format", "svg needs a numeric first grid axis");

    double xmin = t.axis1.values.front().number.value();
    double xmax = xmin;
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -ymin;
    for (const auto& v : t.axis1.values) {
        xmin = std::min(xmin, *v.number);
        xmax = std::max(xmax, *v.number);
    }
    for (const auto& c : t.cells) {
        if (!c.report) continue;
        ymin = std::min(ymin, c.report->are);
        ymax = std::max(ymax, c.report->are);
    }
    ymin = std::min(ymin, 1.0);
    ymax = std::max(ymax, 1.0);
    if (xmax == xmin) xmax = xmin + 1.0;
    const double pad = 0.05 * (ymax - ymin + 1e-9);
    ymin -= pad;
    ymax += pad;

    const double w = 640, h = 420, left = 60, right = 150, top = 30, bottom = 50;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (w - left - right); };
    auto py = [&](double y) { return h - bottom - (y - ymin) / (ymax - ymin) * (h - top - bottom); };
    static const char* colours[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                    "#66a61e", "#e6ab02", "#a6761d", "#666666"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    if (!t.label.empty()) {
        os << "<text x=\"" << left << "\" y=\"18\">" << t.label << "</text>\n";
    }
    os << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right
       << "\" y2=\"" << h - bottom << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
       << h - bottom << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << py(1.0) << "\" x2=\"" << w - right
       << "\" y2=\"" << py(1.0) << "\" stroke=\"grey\" stroke-dasharray=\"4 3\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double x = xmin + k * (xmax - xmin) / 4;
        const double y = ymin + k * (ymax - ymin) / 4;
        os << "<text x=\"" << px(x) << "\" y=\"" << h - bottom + 16
           << "\" text-anchor=\"middle\">" << fixed(x, 2) << "</text>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
           << fixed(y, 2) << "</text>\n";
    }
    os << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 12
       << "\" text-anchor=\"middle\">" << t.axis1.name << "</text>\n";
    os << "<text x=\"16\" y=\"" << (top + h - bottom) / 2 << "\" transform=\"rotate(-90 16 "
       << (top + h - bottom) / 2 << ")\" text-anchor=\"middle\">ARE</text>\n";

    for (std::size_t i2 = 0; i2 < t.axis2_size(); ++i2) {
        const char* colour = colours[i2 % 8];
        std::string points;
        for (std::size_t i1 = 0; i1 < t.axis1.values.size(); ++i1) {
            const auto& c = t.at(i1, i2);
            if (!c.report) continue;
            points += fixed(px(*c.coords[0].number), 1) + "," + fixed(py(c.report->are), 1) + " ";
        }
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\""
           << points << "\"/>\n";
        if (t.axis2) {
            const double ly = top + 16 * (i2 + 1);
            os << "<line x1=\"" << w - right + 10 << "\" y1=\"" << ly << "\" x2=\""
               << w - right + 30 << "\" y2=\"" << ly << "\" stroke=\"" << colour
               << "\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << w - right + 36 << "\" y=\"" << ly + 4 << "\">"
               << t.axis2->name << " = " << t.axis2->values[i2].text << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace

json report_to_json(const DesignReport& r) {
    json diagnostics = json::array();
    for (const auto& d : r.diagnostics) diagnostics.push_back({{"name", d.name}, {"value", d.value}});
    return {{"label", r.label},
            {"kind", to_string(r.kind)},
            {"p_star_control", r.p_star_control},
            {"effect_star", r.effect_star},
            {"effect_scale", r.kind == ScenarioKind::Binary ? "risk_difference" : "hazard_ratio"},
            {"are", r.are},
            {"recommendation", to_string(r.recommendation)},
            {"n_total_composite", r.n_total_composite},
            {"n_total_relevant", r.n_total_relevant},
            {"diagnostics", diagnostics}};
}

DesignReport report_from_json(const json& j) {
    DesignReport r;
    r.label = j.at("label").get<std::string>();
    r.kind = kind_from_name(j.at("kind").get<std::string>());
    r.p_star_control = j.at("p_star_control").get<double>();
    r.effect_star = j.at("effect_star").get<double>();
    r.are = j.at("are").get<double>();
    r.recommendation = recommendation_from_name(j.at("recommendation").get<std::string>());
    r.n_total_composite = j.at("n_total_composite").get<int>();
    r.n_total_relevant = j.at("n_total_relevant").get<int>();
    for (const auto& d : j.at("diagnostics")) {
        r.diagnostics.push_back({d.at("name").get<std::string>(), d.at("value").get<double>()});
    }
    return r;
}

json table_to_json(const SweepTable& t) {
    json axes = json::array({axis_to_json(t.axis1)});
    if (t.axis2) axes.push_back(axis_to_json(*t.axis2));
    json cells = json::array();
    for (const auto& c : t.cells) {
        json coords = json::array();
        for (const auto& v : c.coords) coords.push_back(grid_value_to_json(v));
        json cell = {{"coords", coords}};
        if (c.report) {
            cell["report"] = report_to_json(*c.report);
        } else {
            cell["infeasible"] = {{"code", c.infeasible_code}, {"reason", c.infeasible_reason}};
        }
        cells.push_back(cell);
    }
    return {{"label", t.label},
            {"kind", to_string(t.kind)},
            {"axes", axes},
            {"cells", cells},
            {"are_decreasing_along_axis1", t.are_decreasing_along_axis1}};
}

SweepTable table_from_json(const json& j) {
    SweepTable t;
    t.label = j.at("label").get<std::string>();
    t.kind = kind_from_name(j.at("kind").get<std::string>());
    const auto& axes = j.at("axes");
    t.axis1 = axis_from_json(axes.at(0));
    if (axes.size() > 1) t.axis2 = axis_from_json(axes.at(1));
    for (const auto& c : j.at("cells")) {
        SweepCell cell;
        for (const auto& v : c.at("coords")) cell.coords.push_back(grid_value_from_json(v));
        if (c.contains("report")) {
            cell.report = report_from_json(c.at("report"));
        } else {
            cell.infeasible_code = c.at("infeasible").at("code").get<std::string>();
            cell.infeasible_reason = c.at("infeasible").at("reason").get<std::string>();
        }
        t.cells.push_back(std::move(cell));
    }
    t.are_decreasing_along_axis1 = j.at("are_decreasing_along_axis1").get<std::vector<bool>>();
    return t;
}

std::string render_report(const DesignReport& r, Format format) {
    switch (format) {
        case Format::Json:
            return report_to_json(r).dump(2) + "\n";
        case Format::Csv: {
            std::vector<std::string> header = kReportColumns;
            std::vector<std::string> row = report_values(r);
            for (const auto& d : r.diagnostics) {
                header.push_back(d.name);
                row.push_back(exact(d.value));
            }
            return join_csv(header) + join_csv(row);
        }
        case Format::Markdown: {
            if (r.kind == ScenarioKind::Binary) {
                const double rho = r.diagnostic("rho").value_or(NAN);
                return markdown_table(kBinaryMarkdownHeader, {binary_markdown_row(r, rho)});
            }
            std::vector<std::string> header = {"Probability of ε*", "Effect on ε*", "ARE",
                                               "Recommendation", "Total Sample Size"};
            return markdown_table(header, {generic_markdown_tail(r)});
        }
        case Format::Svg:
            fail_validation("format", "svg is available for sweeps only");
    }
    return {};
}

std::string render_table(const SweepTable& t, Format format) {
    switch (format) {
        case Format::Json:
            return table_to_json(t).dump(2) + "\n";
        case Format::Csv: {
            std::vector<std::string> diag_names;
            for (const auto& c : t.cells) {
                if (c.report) {
                    for (const auto& d : c.report->diagnostics) diag_names.push_back(d.name);
                    break;
                }
            }
            std::vector<std::string> header = {t.axis1.name};
            if (t.axis2) header.push_back(t.axis2->name);
            header.push_back("feasible");
            header.insert(header.end(), kReportColumns.begin(), kReportColumns.end());
            header.insert(header.end(), diag_names.begin(), diag_names.end());
            header.push_back("reason");
            std::string out = join_csv(header);
            for (const auto& c : t.cells) {
                std::vector<std::string> row;
                for (const auto& v : c.coords) row.push_back(v.text);
                if (c.report) {
                    row.push_back("true");
                    const auto values = report_values(*c.report);
                    row.insert(row.end(), values.begin(), values.end());
                    for (const auto& name : diag_names) {
                        const auto v = c.report->diagnostic(name);
                        row.push_back(v ? exact(*v) : "");
                    }
                    row.push_back("");
                } else {
                    row.push_back("false");
                    row.push_back(t.label);
                    row.push_back(std::string(to_string(t.kind)));
                    row.resize(row.size() + kReportColumns.size() - 2 + diag_names.size());
                    row.push_back(c.infeasible_code + ": " + c.infeasible_reason);
                }
                out += join_csv(row);
            }
            return out;
        }
        case Format::Markdown: {
            std::vector<std::vector<std::string>> rows;
            const bool binary_rho = t.kind == ScenarioKind::Binary && !t.axis2 &&
                                    t.axis1.name == "rho";
            const bool shape_sweep =
                t.kind == ScenarioKind::Survival &&
                (t.axis1.name == "shapes" || t.axis1.name == "shape1" ||
                 t.axis1.name == "shape2") &&
                (!t.axis2 || t.axis2->name == "shape1" || t.axis2->name == "shape2");
            if (binary_rho) {
                for (const auto& c : t.cells) {
                    if (c.report) {
                        rows.push_back(binary_markdown_row(*c.report, *c.coords[0].number));
                    } else {
                        rows.push_back({association_label(*c.coords[0].number),
                                        fixed(*c.coords[0].number, 1), "infeasible", "", "", "",
                                        ""});
                    }
                }
                return markdown_table(kBinaryMarkdownHeader, rows);
            }
            if (shape_sweep) {
                for (std::size_t i = 0; i < t.cells.size(); ++i) {
                    const auto& c = t.cells[i];
                    const auto s = shapes_of(t, i);
                    if (c.report) {
                        rows.push_back({hazard_label(s[0]), hazard_label(s[1]),
                                        fixed(c.report->are, 2),
                                        thousands(c.report->n_total_composite)});
                    } else {
                        rows.push_back({hazard_label(s[0]), hazard_label(s[1]), "infeasible", ""});
                    }
                }
                return markdown_table(kSurvivalMarkdownHeader, rows);
            }
            std::vector<std::string> header = {t.axis1.name};
            if (t.axis2) header.push_back(t.axis2->name);
            header.insert(header.end(), kGenericMarkdownTail.begin(), kGenericMarkdownTail.end());
            for (std::size_t i = 0; i < t.cells.size(); ++i) {
                const auto& c = t.cells[i];
                std::vector<std::string> row;
                for (const auto& v : c.coords) row.push_back(v.text);
                if (c.report) {
                    const auto tail = generic_markdown_tail(*c.report);
                    row.insert(row.end(), tail.begin(), tail.end());
                } else {
                    row.push_back("infeasible: " + c.infeasible_reason);
                    row.resize(header.size());
                }
                rows.push_back(row);
            }
            return markdown_table(header, rows);
        }
        case Format::Svg:
            return render_svg(t);
    }
    return {};
}

}  // namespace compare_kit
