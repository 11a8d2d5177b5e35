#include "compare_kit/service.hpp"

#include "compare_kit/copula.hpp"
#include "compare_kit/errors.hpp"
#include "compare_kit/scenario.hpp"
#include "compare_kit/simulation.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <random>

namespace compare_kit::service {

using nlohmann::json;

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

const json& object_body(const json& body) {
    if (!body.is_object()) fail_validation("body", "must be a JSON object");
    return body;
}

double number_at(const json& body, const std::string& key) {
    auto it = body.find(key);
    if (it == body.end()) fail_validation(key, "is required");
    if (!it->is_number()) fail_validation(key, "must be a number");
    return it->get<double>();
}

std::int64_t integer_at(const json& body, const std::string& key) {
    auto it = body.find(key);
    if (it == body.end()) fail_validation(key, "is required");
    if (!it->is_number_integer()) fail_validation(key, "must be an integer");
    return it->get<std::int64_t>();
}

const json& scenario_at(const json& body) {
    auto it = body.find("scenario");
    if (it == body.end()) fail_validation("scenario", "is required");
    return *it;
}

// Re-throws scenario errors with the field path prefixed by "scenario.".
Scenario nested_scenario(const json& body) {
    try {
        return scenario_from_json(scenario_at(body));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::Validation && e.code() != ErrorCode::InfeasibleAssociation) {
            throw;
        }
        throw Error(e.code(), e.what(), e.field().empty() || e.field() == "scenario" ? "scenario" : "scenario." + e.field());
    }
}

json bounds_json(const binary::CorrelationBounds& b) {
    return {{"rho_min", b.rho_min}, {"rho_max", b.rho_max}};
}

json estimate_json(const simulation::PowerEstimate& e) {
    return {{"power_hat", e.power_hat},
            {"mc_standard_error", e.mc_standard_error},
            {"n_replications", e.n_replications},
            {"rejections", e.rejections}};
}

std::string make_request_id() {
    static std::atomic<std::uint64_t> counter{0};
    static const std::uint64_t salt = std::random_device{}();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%08llx-%06llx",
                  static_cast<unsigned long long>(salt & 0xffffffffULL),
                  static_cast<unsigned long long>(++counter));
    return buf;
}

int log_rank(const std::string& level) {
    if (level == "debug") return 0;
    if (level == "info") return 1;
    if (level == "warn" || level == "warning") return 2;
    if (level == "error") return 3;
    return 1;
}

}  // namespace

ServiceConfig ServiceConfig::from_env() {
    ServiceConfig c;
    c.bind_addr = env_or("BIND_ADDR", c.bind_addr);
    const std::string draws = env_or("MAX_SIM_DRAWS", "");
    if (!draws.empty()) {
        char* end = nullptr;
        const double v = std::strtod(draws.c_str(), &end);
        if (end == draws.c_str() || *end != '\0' || !(v >= 1.0)) {
            fail_validation("MAX_SIM_DRAWS", "must be a positive number");
        }
        c.max_sim_draws = static_cast<std::int64_t>(v);
    }
    c.cors_origin = env_or("CORS_ORIGIN", "");
    c.log_level = env_or("LOG_LEVEL", c.log_level);
    return c;
}

namespace api {

json evaluate(const json& body) {
    return report_to_json(compare_kit::evaluate(scenario_from_json(object_body(body))));
}

json sweep(const json& body) {
    object_body(body);
    const Scenario base = nested_scenario(body);
    auto it = body.find("grid");
    if (it == body.end() || !it->is_array()) fail_validation("grid", "must be an array");
    std::vector<GridAxis> axes;
    for (const auto& g : *it) {
        if (g.is_string()) {
            axes.push_back(parse_grid(g.get<std::string>()));
        } else if (g.is_object() && g.contains("name") && g.contains("values")) {
            std::string spec = g.at("name").get<std::string>() + "=";
            bool first = true;
            for (const auto& v : g.at("values")) {
                if (!first) spec += ",";
                spec += v.is_string() ? v.get<std::string>() : v.dump();
                first = false;
            }
            axes.push_back(parse_grid(spec));
        } else {
            fail_validation("grid", "entries must be strings or {name, values} objects");
        }
    }
    return table_to_json(compare_kit::sweep(base, axes));
}

json samplesize(const json& body) {
    const Scenario s = scenario_from_json(object_body(body));
    if (s.kind == ScenarioKind::Binary) {
        const auto& in = s.binary;
        in.validate();
        const auto eff = binary::efficiency_binary(in);
        const auto treat = in.treatment_marginals();
        auto entry = [&](double pc, double pt, double per_arm) {
            return json{{"p_control", pc},
                        {"p_treatment", pt},
                        {"n_per_arm_exact", per_arm},
                        {"n_total", 2 * static_cast<int>(std::ceil(per_arm))}};
        };
        return {{"kind", "binary"},
                {"test", {{"sidedness", to_string(in.sidedness)},
                          {"variance", to_string(in.variance)},
                          {"alpha", in.alpha},
                          {"power", in.power}}},
                {"composite", entry(eff.p_star_control, eff.p_star_treatment,
                                    eff.n_composite_per_arm)},
                {"relevant", entry(in.marginals.p1, treat.p1, eff.n_relevant_per_arm)}};
    }
    const auto& d = s.survival;
    const auto eff = survival::efficiency_survival(d.scenario, d.alpha, d.power, d.sidedness);
    auto entry = [](double hr, double p_avg, const survival::FreedmanResult& f) {
        return json{{"hazard_ratio", hr},
                    {"event_prob_avg", p_avg},
                    {"events", f.events},
                    {"n_exact", f.n_exact},
                    {"n_total", f.n_total}};
    };
    return {{"kind", "survival"},
            {"test", {{"sidedness", to_string(d.sidedness)},
                      {"alpha", d.alpha},
                      {"power", d.power}}},
            {"composite", entry(eff.effective_hr,
                                0.5 * (eff.p_star_control + eff.p_star_treatment), eff.composite)},
            {"relevant", entry(d.scenario.hr1, 0.5 * (eff.p1_control + eff.p1_treatment),
                               eff.relevant)}};
}

json convert_association(const json& body) {
    object_body(body);
    if (body.contains("spearman_rho") || body.contains("theta")) {
        if (body.contains("spearman_rho") && body.contains("theta")) {
            fail_validation("theta", "give either spearman_rho or theta");
        }
        double theta = 0.0;
        if (body.contains("theta")) {
            theta = number_at(body, "theta");
            if (!(theta >= 1.0) || !std::isfinite(theta)) fail_validation("theta", "must be >= 1");
        } else {
            theta = copula::gumbel_theta_from_spearman(number_at(body, "spearman_rho"));
        }
        return {{"family", "gumbel"},
                {"theta", theta},
                {"spearman_rho", copula::spearman_of_gumbel(theta)},
                {"kendall_tau", copula::kendall_of_gumbel(theta)}};
    }
    binary::BinaryMarginals m{number_at(body, "p1"), number_at(body, "p2")};
    m.validate("");
    const int given = static_cast<int>(body.contains("rho")) +
                      static_cast<int>(body.contains("conditional_eps1_given_eps2")) +
                      static_cast<int>(body.contains("conditional_eps2_given_eps1"));
    if (given != 1) {
        fail_validation("rho", "give exactly one of rho, conditional_eps1_given_eps2, "
                               "conditional_eps2_given_eps1 (or spearman_rho / theta)");
    }
    double rho = 0.0;
    if (body.contains("rho")) {
        rho = number_at(body, "rho");
    } else if (body.contains("conditional_eps1_given_eps2")) {
        rho = binary::correlation_from_conditional(m, number_at(body, "conditional_eps1_given_eps2"));
    } else {
        rho = binary::correlation_from_reverse_conditional(
            m, number_at(body, "conditional_eps2_given_eps1"));
    }
    const double p12 = binary::joint_prob_from_correlation(m, rho);
    const auto cond = binary::conditionals_from_correlation(m, rho);
    json out = {{"rho", rho},
                {"p12", p12},
                {"conditional_eps1_given_eps2", cond.eps1_given_eps2},
                {"conditional_eps2_given_eps1", cond.eps2_given_eps1},
                {"composite_probability", binary::composite_probability(m, rho)}};
    out.update(bounds_json(binary::correlation_bounds(m)));
    return out;
}

json bounds(const json& body) {
    object_body(body);
    binary::BinaryMarginals control{number_at(body, "p1"), number_at(body, "p2")};
    const auto bc = binary::correlation_bounds(control);
    json out = {{"control", bounds_json(bc)}, {"rho_min", bc.rho_min}, {"rho_max", bc.rho_max}};
    if (body.contains("delta1") || body.contains("delta2")) {
        const double d1 = body.contains("delta1") ? number_at(body, "delta1") : 0.0;
        const double d2 = body.contains("delta2") ? number_at(body, "delta2") : 0.0;
        if (!(d1 >= 0.0 && d1 < control.p1)) fail_validation("delta1", "must lie in [0, p1)");
        if (!(d2 >= 0.0 && d2 < control.p2)) fail_validation("delta2", "must lie in [0, p2)");
        const auto bt = binary::correlation_bounds({control.p1 - d1, control.p2 - d2});
        out["treatment"] = bounds_json(bt);
        out["rho_min"] = std::max(bc.rho_min, bt.rho_min);
        out["rho_max"] = std::min(bc.rho_max, bt.rho_max);
    }
    return out;
}

json simulate(const json& body, std::int64_t max_draws) {
    object_body(body);
    const Scenario s = nested_scenario(body);
    const auto endpoint = simulation::endpoint_from_name(
        body.contains("endpoint") ? body.at("endpoint").get<std::string>() : "composite");
    const std::int64_t n_total = integer_at(body, "n_total");
    const std::int64_t reps = integer_at(body, "n_replications");
    std::uint64_t seed = 0;
    if (auto it = body.find("seed"); it != body.end()) {
        if (!it->is_number_unsigned()) fail_validation("seed", "must be a nonnegative integer");
        seed = it->get<std::uint64_t>();
    }
    if (n_total < 2) fail_validation("n_total", "must be at least 2");
    if (reps < 1) fail_validation("n_replications", "must be at least 1");
    if (static_cast<double>(n_total) * static_cast<double>(reps) > static_cast<double>(max_draws)) {
        throw Error(ErrorCode::Busy,
                    "n_total * n_replications exceeds the simulation cap of " +
                        std::to_string(max_draws) + " draws",
                    "n_replications");
    }
    simulation::SimConfig config{n_total, reps, seed};
    simulation::PowerEstimate est;
    if (s.kind == ScenarioKind::Binary) {
        est = simulation::simulate_power_binary(s.binary, endpoint, n_total, config);
    } else {
        simulation::TestSpec test{s.survival.alpha, s.survival.sidedness};
        est = simulation::simulate_power_survival(s.survival.scenario, endpoint, n_total, config,
                                                  test);
    }
    json out = estimate_json(est);
    out["endpoint"] = simulation::to_string(endpoint);
    out["n_total"] = n_total;
    out["seed"] = seed;
    out["test"] = s.kind == ScenarioKind::Binary ? "two_proportion_z" : "logrank";
    return out;
}

}  // namespace api

std::string dump_payload(const json& payload) { return payload.dump(2) + "\n"; }

int http_status(std::string_view code) {
    if (code == "VALIDATION" || code == "INFEASIBLE_ASSOCIATION" ||
        code == "UNDETECTABLE_EFFECT") {
        return 422;
    }
    if (code == "BUSY") return 429;
    return 500;
}

HttpResponse Service::handle(std::string_view method, std::string_view path,
                             std::string_view body) const {
    const auto start = std::chrono::steady_clock::now();
    json envelope = {{"request_id", make_request_id()}};
    int status = 200;
    auto fail = [&](int st, std::string_view code, const std::string& message,
                    const std::string& field) {
        status = st;
        envelope["error"] = {{"code", code}, {"message", message}, {"field", field}};
    };

    try {
        if (method == "GET" && path == "/healthz") {
            envelope["result"] = {{"status", "ok"}, {"version", COMPARE_KIT_VERSION}};
        } else if (method != "POST") {
            fail(405, "VALIDATION", "method " + std::string(method) + " not allowed", "method");
        } else {
            using Handler = json (*)(const json&);
            Handler handler = nullptr;
            if (path == "/v1/evaluate") handler = api::evaluate;
            else if (path == "/v1/sweep") handler = api::sweep;
            else if (path == "/v1/samplesize") handler = api::samplesize;
            else if (path == "/v1/association/convert") handler = api::convert_association;
            else if (path == "/v1/bounds") handler = api::bounds;

            if (!handler && path != "/v1/simulate") {
                fail(404, "VALIDATION", "unknown endpoint " + std::string(path), "path");
            } else if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) {
                fail(400, "VALIDATION", "request body is empty", "body");
            } else {
                json doc;
                bool parsed = true;
                try {
                    doc = json::parse(body);
                } catch (const json::parse_error& e) {
                    parsed = false;
                    fail(400, "VALIDATION", std::string("malformed JSON: ") + e.what(), "body");
                }
                if (parsed) {
                    envelope["result"] = handler ? handler(doc)
                                                 : api::simulate(doc, config_.max_sim_draws);
                }
            }
        }
    } catch (const Error& e) {
        const std::string code(error_code_name(e.code()));
        fail(http_status(code), code, e.what(), e.field());
    } catch (const json::exception& e) {
        fail(422, "VALIDATION", std::string("unexpected JSON type: ") + e.what(), "body");
    } catch (const std::exception& e) {
        fail(500, "INTERNAL", e.what(), "");
    }

    envelope["elapsed_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
    return {status, envelope.dump()};
}

void Service::serve() const {
    const auto colon = config_.bind_addr.rfind(':');
    if (colon == std::string::npos) fail_validation("BIND_ADDR", "expected host:port");
    const std::string host = config_.bind_addr.substr(0, colon);
    const int port = std::atoi(config_.bind_addr.c_str() + colon + 1);
    if (port <= 0 || port > 65535) fail_validation("BIND_ADDR", "invalid port");
    const int level = log_rank(config_.log_level);
    std::mutex log_mutex;

    httplib::Server server;
    if (!config_.cors_origin.empty()) {
        server.set_default_headers({{"Access-Control-Allow-Origin", config_.cors_origin},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                    {"Access-Control-Allow-Headers", "Content-Type"}});
    }
    auto route = [&](const httplib::Request& req, httplib::Response& res) {
        const HttpResponse out = handle(req.method, req.path, req.body);
        res.status = out.status;
        res.set_content(out.body, "application/json");
        if (level <= 1 || (level <= 2 && out.status >= 400) || out.status >= 500) {
            std::lock_guard lock(log_mutex);
            std::cerr << req.method << " " << req.path << " " << out.status << "\n";
        }
    };
    server.Get(".*", route);
    server.Post(".*", route);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    if (level <= 1) {
        std::cerr << "compare-kit " << COMPARE_KIT_VERSION << " listening on " << host << ":"
                  << port << "\n";
    }
    if (!server.listen(host, port)) {
        throw std::runtime_error("cannot bind " + config_.bind_addr);
    }
}

}  // namespace compare_kit::service
