#include "compare_kit/errors.hpp"
#include "compare_kit/numerics.hpp"
#include "compare_kit/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace compare_kit;
using nlohmann::json;

namespace {

json tuxedo_doc(double rho) {
    return {{"kind", "binary"}, {"label", "tuxedo"}, {"p1", 0.059},      {"p2", 0.032},
            {"delta1", 0.0196}, {"delta2", 0.0098},  {"rho", rho}};
}

json oasis_doc() {
    return {{"kind", "survival"}, {"p1", 0.125},         {"p2", 0.05},
            {"hr1", 0.83},        {"hr2", 0.66},         {"spearman_rho", 0.7},
            {"eps1_terminal", true}};
}

std::string field_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.field();
    }
    return "<no error>";
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::size_t count(const std::string& s, char c) { return std::count(s.begin(), s.end(), c); }

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("binary scenario JSON with defaults") {
    const Scenario s = scenario_from_json(tuxedo_doc(0.4));
    CHECK(s.kind == ScenarioKind::Binary);
    CHECK(s.binary.alpha == 0.05);
    CHECK(s.binary.power == 0.80);
    CHECK(s.binary.sidedness == Sidedness::One);
    CHECK(s.binary.variance == VarianceVariant::Pooled);
    CHECK(scenario_from_json(scenario_to_json(s)).binary.rho == 0.4);
    CHECK(scenario_to_json(scenario_from_json(scenario_to_json(s))) == scenario_to_json(s));
}

TEST_CASE("association given as a conditional probability") {
    json doc = tuxedo_doc(0.0);
    doc.erase("rho");
    doc["conditional_eps1_given_eps2"] = 0.58;
    CHECK(scenario_from_json(doc).binary.rho == doctest::Approx(0.40202606979454786));
    doc["rho"] = 0.4;
    CHECK(field_of([&] { scenario_from_json(doc); }) == "rho");
}

TEST_CASE("survival scenario JSON") {
    json doc = oasis_doc();
    doc["shape1"] = "increasing";
    doc["shape2"] = 0.5;
    const Scenario s = scenario_from_json(doc);
    CHECK(s.survival.scenario.shape1 == 2.0);
    CHECK(s.survival.scenario.shape2 == 0.5);
    CHECK(s.survival.scenario.copula_scale == survival::CopulaScale::Distribution);
    const json back = scenario_to_json(s);
    CHECK(back["shape1"] == "increasing");
    CHECK(back["shape2"] == "decreasing");
    CHECK(scenario_to_json(scenario_from_json(back)) == back);
}

TEST_CASE("validation errors carry field paths") {
    json doc = tuxedo_doc(0.4);
    doc["colour"] = "blue";
    CHECK(field_of([&] { scenario_from_json(doc); }) == "colour");
    doc = tuxedo_doc(0.4);
    doc.erase("p1");
    CHECK(field_of([&] { scenario_from_json(doc); }) == "p1");
    doc = tuxedo_doc(0.4);
    doc["delta2"] = "small";
    CHECK(field_of([&] { scenario_from_json(doc); }) == "delta2");
    doc = oasis_doc();
    doc["shape2"] = "bathtub";
    CHECK(field_of([&] { scenario_from_json(doc); }) == "shape2");
    CHECK(field_of([&] { scenario_from_json(json{{"kind", "ordinal"}}); }) == "kind");
    CHECK(field_of([&] { scenario_from_json(tuxedo_doc(0.9)); }) == "rho");
}

TEST_CASE("evaluating the moderate binary row") {
    const auto r = evaluate(scenario_from_json(tuxedo_doc(0.4)));
    CHECK(std::round(r.p_star_control * 100) / 100 == doctest::Approx(0.07));
    CHECK(std::round(r.effect_star * 1000) / 10 == doctest::Approx(2.3));
    CHECK(std::abs(r.n_total_composite - 2561) <= 0.05 * 2561);
    CHECK(r.are == doctest::Approx(1.1525937429).epsilon(1e-9));
    CHECK(r.recommendation == Recommendation::Composite);
    CHECK(r.diagnostic("rho_max").value() == doctest::Approx(0.726116).epsilon(1e-6));
}

TEST_CASE("evaluating the survival case study") {
    const auto r = evaluate(scenario_from_json(oasis_doc()));
    CHECK(r.are == doctest::Approx(2.0205350261).epsilon(1e-8));
    CHECK(r.effect_star == doctest::Approx(0.790926828477).epsilon(1e-9));
    CHECK(r.n_total_composite == 3154);
    CHECK(r.recommendation == Recommendation::Composite);
    CHECK(r.diagnostic("theta").value() == doctest::Approx(2.06550793297458).epsilon(1e-9));
}

TEST_CASE("recommendation flips exactly where the sample sizes cross") {
    Scenario s = scenario_from_json(tuxedo_doc(0.1));
    auto are_at = [&](double rho) {
        s.binary.rho = rho;
        return evaluate(s).are - 1.0;
    };
    const double crossing = numerics::find_root(are_at, 0.4, 0.7, {1e-12, 1e-12, 200});
    for (double offset : {-1e-6, 1e-6}) {
        s.binary.rho = crossing + offset;
        const auto r = evaluate(s);
        const bool composite_smaller =
            r.diagnostic("n_composite_exact").value() < r.diagnostic("n_relevant_exact").value();
        CHECK((r.recommendation == Recommendation::Composite) == composite_smaller);
        CHECK((r.recommendation == Recommendation::Composite) == (offset < 0));
    }
    CHECK(recommend(1.0) == Recommendation::Relevant);
    CHECK(recommend(std::nextafter(1.0, 2.0)) == Recommendation::Composite);
}

TEST_CASE("grid parsing") {
    const auto range = parse_grid("rho=0.1:0.8:0.05");
    CHECK(range.name == "rho");
    REQUIRE(range.values.size() == 15);
    CHECK(range.values[3].number.value() == 0.25);
    CHECK(range.values.back().number.value() == 0.8);
    CHECK(range.values[3].text == "0.25");

    const auto list = parse_grid("hr2=0.65,0.75, 0.85,0.90");
    REQUIRE(list.values.size() == 4);
    CHECK(list.values[2].number.value() == 0.85);

    const auto shapes = parse_grid("shape1=constant,increasing,decreasing");
    CHECK(shapes.values.size() == 3);
    CHECK_FALSE(shapes.values[0].number.has_value());

    CHECK_THROWS_AS(parse_grid("rho"), Error);
    CHECK_THROWS_AS(parse_grid("rho=0.1:0.8"), Error);
    CHECK_THROWS_AS(parse_grid("rho=0.8:0.1:0.1"), Error);
    CHECK_THROWS_AS(parse_grid("rho=0.1,,0.2"), Error);
}

TEST_CASE("parameters by name") {
    Scenario s = scenario_from_json(oasis_doc());
    apply_parameter(s, "shapes", {"decreasing/increasing", std::nullopt});
    CHECK(s.survival.scenario.shape1 == 0.5);
    CHECK(s.survival.scenario.shape2 == 2.0);
    apply_parameter(s, "rho", {"0.3", 0.3});
    CHECK(s.survival.scenario.spearman_rho == 0.3);
    CHECK(field_of([&] { apply_parameter(s, "delta1", {"0.1", 0.1}); }) == "delta1");
    Scenario b = scenario_from_json(tuxedo_doc(0.4));
    CHECK(field_of([&] { apply_parameter(b, "hr2", {"0.1", 0.1}); }) == "hr2");
}

TEST_CASE("sweeps keep infeasible cells") {
    const Scenario s = scenario_from_json(tuxedo_doc(0.4));
    const auto table = sweep(s, {parse_grid("rho=0.5:0.9:0.1")});
    REQUIRE(table.cells.size() == 5);
    CHECK(table.cells[1].report.has_value());       // 0.6
    CHECK_FALSE(table.cells[3].report.has_value());  // 0.8
    CHECK(table.cells[3].infeasible_code == "INFEASIBLE_ASSOCIATION");
    CHECK(table.cells[3].infeasible_reason.find("0.726") != std::string::npos);
    CHECK(table.are_decreasing_along_axis1 == std::vector<bool>{true});

    try {
        sweep(s, {parse_grid("rho=0.8,0.9")});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InfeasibleAssociation);
    }
    CHECK_THROWS_AS(sweep(s, {parse_grid("gamma=1,2")}), Error);
    CHECK_THROWS_AS(sweep(s, {parse_grid("rho=0.1"), parse_grid("p1=0.1"), parse_grid("p2=0.1")}),
                    Error);
}

TEST_CASE("two-axis survival sweep") {
    const Scenario s = scenario_from_json(oasis_doc());
    const auto table = sweep(s, {parse_grid("rho=0.1:0.8:0.1"), parse_grid("hr2=0.65,0.75,0.85,0.90")});
    CHECK(table.cells.size() == 32);
    CHECK(table.are_decreasing_along_axis1 == std::vector<bool>(4, true));
    for (std::size_t i1 = 0; i1 < 8; ++i1) {
        for (std::size_t i2 = 1; i2 < 4; ++i2) {
            CHECK(table.at(i1, i2).report->are < table.at(i1, i2 - 1).report->are);
        }
    }
    CHECK(table.at(2, 1).coords[0].number.value() == doctest::Approx(0.3));
    CHECK(table.at(2, 1).coords[1].number.value() == 0.75);
}

TEST_CASE("markdown reproduces the binary table layout") {
    const Scenario s = scenario_from_json(tuxedo_doc(0.4));
    const auto md = render_table(sweep(s, {parse_grid("rho=0.1,0.4,0.7")}), Format::Markdown);
    const auto rows = lines(md);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].rfind("| Association | Correlation |", 0) == 0);
    CHECK(rows[0].find("Total Sample Size |") != std::string::npos);
    for (const auto& row : rows) CHECK(count(row, '|') == 8);
    CHECK(rows[2] == "| Weak | 0.1 | 0.19 | 0.10 | 0.08 | 2.7 | 2,230 |");
    CHECK(rows[3] == "| Moderate | 0.4 | 0.58 | 0.31 | 0.07 | 2.3 | 2,612 |");
    CHECK(rows[4].rfind("| Strong | 0.7 | 0.97 | 0.52 | 0.06 |", 0) == 0);

    const auto single = render_report(evaluate(scenario_from_json(tuxedo_doc(0.1))), Format::Markdown);
    CHECK(lines(single)[2] == rows[2]);
}

TEST_CASE("markdown reproduces the survival table layout") {
    const Scenario s = scenario_from_json(oasis_doc());
    const auto md = render_table(
        sweep(s, {parse_grid("shapes=increasing/decreasing,constant/constant")}), Format::Markdown);
    const auto rows = lines(md);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "| Hazard ε1 | Hazard ε2 | ARE | Total Sample Size |");
    CHECK(rows[2] == "| Increasing | Decreasing | 1.84 | 3,444 |");
    CHECK(rows[3] == "| Constant | Constant | 2.02 | 3,154 |");
}

TEST_CASE("csv output") {
    DesignReport r = evaluate(scenario_from_json(tuxedo_doc(0.4)));
    auto csv = render_report(r, Format::Csv);
    CHECK(csv.find('\r') == std::string::npos);
    auto rows = lines(csv);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].rfind("label,kind,p_star_control,effect_star,are,recommendation,"
                        "n_total_composite,n_total_relevant,rho,",
                        0) == 0);
    CHECK(count(rows[0], ',') == count(rows[1], ','));

    r.diagnostics.clear();
    rows = lines(render_report(r, Format::Csv));
    CHECK(rows[0] ==
          "label,kind,p_star_control,effect_star,are,recommendation,n_total_composite,"
          "n_total_relevant");
    // Full precision survives the text form.
    std::vector<std::string> fields;
    std::istringstream row(rows[1]);
    for (std::string f; std::getline(row, f, ',');) fields.push_back(f);
    CHECK(std::stod(fields[2]) == r.p_star_control);

    const auto table = sweep(scenario_from_json(tuxedo_doc(0.4)), {parse_grid("rho=0.7,0.8")});
    const auto trows = lines(render_table(table, Format::Csv));
    REQUIRE(trows.size() == 3);
    CHECK(trows[0].rfind("rho,feasible,label", 0) == 0);
    CHECK(trows[0].substr(trows[0].size() - 7) == ",reason");
    CHECK(trows[2].rfind("0.8,false,", 0) == 0);
    CHECK(trows[2].find("INFEASIBLE_ASSOCIATION") != std::string::npos);
}

TEST_CASE("json round trips") {
    const DesignReport r = evaluate(scenario_from_json(oasis_doc()));
    CHECK(report_from_json(json::parse(render_report(r, Format::Json))) == r);

    const auto table = sweep(scenario_from_json(tuxedo_doc(0.4)),
                             {parse_grid("rho=0.6:0.8:0.1"), parse_grid("delta2=0.005,0.0098")});
    CHECK(table_from_json(json::parse(render_table(table, Format::Json))) == table);
}

TEST_CASE("svg chart") {
    const auto table = sweep(scenario_from_json(oasis_doc()),
                             {parse_grid("rho=0.2:0.6:0.2"), parse_grid("hr2=0.65,0.9")});
    const auto svg = render_table(table, Format::Svg);
    CHECK(svg.rfind("<svg", 0) == 0);
    std::size_t polylines = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1)) {
        ++polylines;
    }
    CHECK(polylines == 2);
    CHECK(svg.find("hr2 = 0.65") != std::string::npos);
    CHECK_THROWS_AS(render_report(evaluate(scenario_from_json(oasis_doc())), Format::Svg), Error);
    CHECK_THROWS_AS(format_from_name("xlsx"), Error);
}

}  // TEST_SUITE
