#pragma once

#include "compare_kit/binary.hpp"
#include "compare_kit/survival.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace compare_kit {

enum class ScenarioKind { Binary, Survival };
std::string_view to_string(ScenarioKind k);

struct SurvivalDesign {
    survival::SurvivalScenario scenario;
    double alpha = 0.05;
    double power = 0.80;
    Sidedness sidedness = Sidedness::One;
};

struct Scenario {
    ScenarioKind kind = ScenarioKind::Binary;
    std::string label;
    binary::BinaryDesignInput binary;  // used when kind == Binary
    SurvivalDesign survival;           // used when kind == Survival

    void validate() const;
};

// Scenario JSON: a flat object with a "kind" discriminator. Probabilities and
// effects are decimals. Unknown keys are rejected. See docs/scenario-schema.md.
Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);

enum class Recommendation { Composite, Relevant };
std::string_view to_string(Recommendation r);

// Composite only when ARE > 1 strictly.
Recommendation recommend(double are);

struct Diagnostic {
    std::string name;
    double value = 0.0;

    bool operator==(const Diagnostic&) const = default;
};

struct DesignReport {
    std::string label;
    ScenarioKind kind = ScenarioKind::Binary;
    double p_star_control = 0.0;
    // Risk difference (binary) or geometric-average hazard ratio (survival).
    double effect_star = 0.0;
    double are = 0.0;
    Recommendation recommendation = Recommendation::Relevant;
    int n_total_composite = 0;
    int n_total_relevant = 0;
    std::vector<Diagnostic> diagnostics;

    std::optional<double> diagnostic(std::string_view name) const;
    bool operator==(const DesignReport&) const = default;
};

DesignReport evaluate(const Scenario& scenario);

// A grid coordinate: numeric, or a category such as a hazard shape.
struct GridValue {
    std::string text;
    std::optional<double> number;

    bool operator==(const GridValue&) const = default;
};

struct GridAxis {
    std::string name;
    std::vector<GridValue> values;

    bool operator==(const GridAxis&) const = default;
};

// "name=start:stop:step" or "name=v1,v2,...".
GridAxis parse_grid(std::string_view spec);

// Sets a named parameter; throws VALIDATION for unknown names or values.
void apply_parameter(Scenario& scenario, std::string_view name, const GridValue& value);

struct SweepCell {
    std::vector<GridValue> coords;
    std::optional<DesignReport> report;
    std::string infeasible_code;  // set when report is empty
    std::string infeasible_reason;

    bool operator==(const SweepCell&) const = default;
};

struct SweepTable {
    std::string label;
    ScenarioKind kind = ScenarioKind::Binary;
    GridAxis axis1;
    std::optional<GridAxis> axis2;
    // Row-major: index = i1 * |axis2| + i2.
    std::vector<SweepCell> cells;
    // One flag per axis2 level (one in total without axis2): ARE strictly
    // decreasing along a numeric axis1 over the feasible cells.
    std::vector<bool> are_decreasing_along_axis1;

    std::size_t axis2_size() const { return axis2 ? axis2->values.size() : 1; }
    const SweepCell& at(std::size_t i1, std::size_t i2 = 0) const {
        return cells[i1 * axis2_size() + i2];
    }
    bool operator==(const SweepTable&) const = default;
};

// One or two axes. Infeasible cells are kept with a reason; a grid with no
// feasible cell is an error.
SweepTable sweep(const Scenario& base, const std::vector<GridAxis>& axes);

enum class Format { Json, Csv, Markdown, Svg };
Format format_from_name(std::string_view name);

nlohmann::json report_to_json(const DesignReport& report);
DesignReport report_from_json(const nlohmann::json& doc);
nlohmann::json table_to_json(const SweepTable& table);
SweepTable table_from_json(const nlohmann::json& doc);

// JSON keeps full precision; markdown rounds for display (2 d.p.
// probabilities, 1 d.p. percentage points, integer sample sizes).
std::string render_report(const DesignReport& report, Format format);
std::string render_table(const SweepTable& table, Format format);

}  // namespace compare_kit
