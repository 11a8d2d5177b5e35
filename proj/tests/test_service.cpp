#include "compare_kit/service.hpp"

#include <doctest.h>

#include <atomic>
#include <thread>
#include <vector>

using namespace compare_kit::service;
using nlohmann::json;

namespace {

const Service& service() {
    static const Service s(ServiceConfig{});
    return s;
}

json post(const std::string& path, const json& body, int expected_status) {
    const auto r = service().handle("POST", path, body.dump());
    CHECK(r.status == expected_status);
    return json::parse(r.body);
}

json tuxedo(double rho) {
    return {{"kind", "binary"}, {"p1", 0.059},      {"p2", 0.032},
            {"delta1", 0.0196}, {"delta2", 0.0098}, {"rho", rho}};
}

json oasis() {
    return {{"kind", "survival"}, {"p1", 0.125},       {"p2", 0.05},
            {"hr1", 0.83},        {"hr2", 0.66},       {"spearman_rho", 0.7},
            {"eps1_terminal", true}};
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("health check") {
    const auto r = service().handle("GET", "/healthz", "");
    CHECK(r.status == 200);
    const auto body = json::parse(r.body);
    CHECK(body["result"]["status"] == "ok");
    CHECK(body["result"]["version"] == COMPARE_KIT_VERSION);
    CHECK(body.contains("request_id"));
    CHECK(body.contains("elapsed_ms"));
    CHECK_FALSE(body.contains("error"));
}

TEST_CASE("evaluate") {
    const auto body = post("/v1/evaluate", tuxedo(0.1), 200);
    CHECK(body["result"]["are"].get<double>() > 1.0);
    const int n = body["result"]["n_total_composite"];
    CHECK(std::abs(n - 2187) <= 0.05 * 2187);
    CHECK_FALSE(body.contains("error"));
}

TEST_CASE("infeasible association is a 422 naming the bound") {
    const auto body = post("/v1/evaluate", tuxedo(0.9), 422);
    CHECK(body["error"]["code"] == "INFEASIBLE_ASSOCIATION");
    CHECK(body["error"]["field"] == "rho");
    CHECK(body["error"]["message"].get<std::string>().find("0.726") != std::string::npos);
    CHECK_FALSE(body.contains("result"));
}

TEST_CASE("malformed requests") {
    auto r = service().handle("POST", "/v1/evaluate", "");
    CHECK(r.status == 400);
    CHECK(json::parse(r.body)["error"]["code"] == "VALIDATION");
    r = service().handle("POST", "/v1/evaluate", "{\"kind\": ");
    CHECK(r.status == 400);
    r = service().handle("POST", "/v1/nothing", "{}");
    CHECK(r.status == 404);
    r = service().handle("DELETE", "/v1/evaluate", "{}");
    CHECK(r.status == 405);
}

TEST_CASE("every 4xx names a field") {
    json missing = tuxedo(0.4);
    missing.erase("delta1");
    json nulls = oasis();
    nulls["hr1"] = 1.0;
    const std::vector<std::pair<std::string, json>> cases = {
        {"/v1/evaluate", missing},
        {"/v1/evaluate", nulls},
        {"/v1/evaluate", json::array()},
        {"/v1/bounds", json{{"p1", 0.2}}},
        {"/v1/association/convert", json{{"p1", 0.2}, {"p2", 0.1}}},
        {"/v1/sweep", json{{"scenario", tuxedo(0.4)}, {"grid", {"rho=0.8,0.9"}}}},
        {"/v1/sweep", json{{"scenario", missing}, {"grid", {"rho=0.1"}}}},
        {"/v1/simulate", json{{"scenario", tuxedo(0.4)}, {"n_total", 10}}},
    };
    for (const auto& [path, body] : cases) {
        const auto r = service().handle("POST", path, body.dump());
        CAPTURE(path);
        CAPTURE(r.body);
        CHECK(r.status >= 400);
        CHECK(r.status < 500);
        CHECK_FALSE(json::parse(r.body)["error"]["field"].get<std::string>().empty());
    }
    const auto undetectable = post("/v1/evaluate", nulls, 422);
    CHECK(undetectable["error"]["code"] == "UNDETECTABLE_EFFECT");
    const auto nested = post("/v1/sweep", json{{"scenario", missing}, {"grid", {"rho=0.1"}}}, 422);
    CHECK(nested["error"]["field"] == "scenario.delta1");
}

TEST_CASE("association conversion") {
    auto body = post("/v1/association/convert",
                     json{{"p1", 0.059}, {"p2", 0.032}, {"conditional_eps1_given_eps2", 0.58}}, 200);
    CHECK(body["result"]["rho"].get<double>() == doctest::Approx(0.4).epsilon(0.01));
    CHECK(body["result"]["rho_max"].get<double>() == doctest::Approx(0.726116).epsilon(1e-6));
    body = post("/v1/association/convert", json{{"spearman_rho", 0.7}}, 200);
    CHECK(body["result"]["theta"].get<double>() == doctest::Approx(2.06550793297458));
    CHECK(body["result"]["kendall_tau"].get<double>() ==
          doctest::Approx(1.0 - 1.0 / 2.06550793297458));
}

TEST_CASE("bounds") {
    auto body = post("/v1/bounds", json{{"p1", 0.059}, {"p2", 0.032}}, 200);
    CHECK(body["result"]["rho_max"].get<double>() == doctest::Approx(0.726116).epsilon(1e-6));
    body = post("/v1/bounds", json{{"p1", 0.059}, {"p2", 0.032}, {"delta1", 0.0196}, {"delta2", 0.0098}},
                200);
    CHECK(body["result"]["treatment"]["rho_max"].get<double>() > 0.726116);
    CHECK(body["result"]["rho_max"].get<double>() == doctest::Approx(0.726116).epsilon(1e-6));
}

TEST_CASE("sample size") {
    const auto body = post("/v1/samplesize", tuxedo(0.7), 200);
    const int n = body["result"]["composite"]["n_total"];
    CHECK(std::abs(n - 3076) <= 0.05 * 3076);
    const auto surv = post("/v1/samplesize", oasis(), 200);
    CHECK(surv["result"]["composite"]["n_total"] == 3154);
    CHECK(surv["result"]["relevant"]["hazard_ratio"] == 0.83);
}

TEST_CASE("sweep over the survival grid") {
    const auto body = post("/v1/sweep",
                           json{{"scenario", oasis()},
                                {"grid", {"rho=0.1:0.8:0.1", "hr2=0.65,0.75,0.85,0.90"}}},
                           200);
    CHECK(body["result"]["cells"].size() == 32);
    const auto objects = post("/v1/sweep",
                              json{{"scenario", oasis()},
                                   {"grid", {{{"name", "shapes"},
                                              {"values", {"increasing/decreasing"}}}}}},
                              200);
    CHECK(objects["result"]["cells"][0]["report"]["are"].get<double>() ==
          doctest::Approx(1.843).epsilon(1e-3));
}

TEST_CASE("simulation is deterministic and capped") {
    const json req = {{"scenario", tuxedo(0.1)},
                      {"n_total", 2000},
                      {"n_replications", 200},
                      {"seed", 17}};
    const auto a = post("/v1/simulate", req, 200);
    const auto b = post("/v1/simulate", req, 200);
    CHECK(a["result"].dump() == b["result"].dump());
    CHECK(a["request_id"] != b["request_id"]);

    const Service capped(ServiceConfig{"127.0.0.1:0", 1000, "", "info"});
    const auto r = capped.handle("POST", "/v1/simulate", req.dump());
    CHECK(r.status == 429);
    CHECK(json::parse(r.body)["error"]["code"] == "BUSY");
}

TEST_CASE("responses do not depend on request order") {
    const std::vector<std::pair<std::string, json>> requests = {
        {"/v1/evaluate", tuxedo(0.4)},
        {"/v1/evaluate", oasis()},
        {"/v1/bounds", json{{"p1", 0.1}, {"p2", 0.3}}},
        {"/v1/samplesize", tuxedo(0.1)},
    };
    std::vector<std::string> forward, backward(requests.size());
    for (const auto& [path, body] : requests) {
        forward.push_back(json::parse(service().handle("POST", path, body.dump()).body)["result"].dump());
    }
    for (std::size_t i = requests.size(); i-- > 0;) {
        backward[i] =
            json::parse(service().handle("POST", requests[i].first, requests[i].second.dump()).body)["result"]
                .dump();
    }
    CHECK(forward == backward);
}

TEST_CASE("concurrent evaluate calls") {
    const std::string reference =
        json::parse(service().handle("POST", "/v1/evaluate", oasis().dump()).body)["result"].dump();
    std::atomic<int> mismatches{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 100; ++i) {
        threads.emplace_back([&] {
            const auto r = service().handle("POST", "/v1/evaluate", oasis().dump());
            if (r.status != 200 || json::parse(r.body)["result"].dump() != reference) ++mismatches;
        });
    }
    for (auto& t : threads) t.join();
    CHECK(mismatches == 0);
    CHECK(service().handle("GET", "/healthz", "").status == 200);
}

TEST_CASE("configuration from the environment") {
    setenv("MAX_SIM_DRAWS", "5e6", 1);
    setenv("BIND_ADDR", "0.0.0.0:9000", 1);
    const auto c = ServiceConfig::from_env();
    CHECK(c.max_sim_draws == 5'000'000);
    CHECK(c.bind_addr == "0.0.0.0:9000");
    unsetenv("MAX_SIM_DRAWS");
    unsetenv("BIND_ADDR");
    CHECK(ServiceConfig::from_env().max_sim_draws == 1'000'000'000);
}

}  // TEST_SUITE
