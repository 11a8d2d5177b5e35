#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace compare_kit::service {

struct ServiceConfig {
    std::string bind_addr = "127.0.0.1:8080";
    std::int64_t max_sim_draws = 1'000'000'000;
    std::string cors_origin;  // empty: no CORS headers
    std::string log_level = "info";

    // Reads BIND_ADDR, MAX_SIM_DRAWS, CORS_ORIGIN and LOG_LEVEL.
    static ServiceConfig from_env();
};

// Request payload handlers shared by the service and the CLI. Each takes the
// parsed request body and returns the result payload; errors are thrown as
// compare_kit::Error.
namespace api {

nlohmann::json evaluate(const nlohmann::json& body);
// {"scenario": {...}, "grid": ["rho=0.1:0.8:0.05", ...]}
nlohmann::json sweep(const nlohmann::json& body);
// A scenario; returns composite and relevant sample sizes.
nlohmann::json samplesize(const nlohmann::json& body);
// {p1, p2} plus one of rho / conditional_eps1_given_eps2 /
// conditional_eps2_given_eps1, or {spearman_rho} / {theta} for the Gumbel
// copula.
nlohmann::json convert_association(const nlohmann::json& body);
// {p1, p2} with optional delta1, delta2.
nlohmann::json bounds(const nlohmann::json& body);
// {"scenario": {...}, "endpoint", "n_total", "n_replications", "seed"}.
// Throws BUSY when n_total * n_replications exceeds max_draws.
nlohmann::json simulate(const nlohmann::json& body, std::int64_t max_draws);

}  // namespace api

// Canonical text of a result payload, used verbatim by the CLI.
std::string dump_payload(const nlohmann::json& payload);

struct HttpResponse {
    int status = 200;
    std::string body;
};

int http_status(std::string_view error_code);

class Service {
public:
    explicit Service(ServiceConfig config) : config_(std::move(config)) {}

    const ServiceConfig& config() const { return config_; }

    // Routes one request and wraps the outcome in the response envelope
    // {request_id, elapsed_ms, result | error}.
    HttpResponse handle(std::string_view method, std::string_view path,
                        std::string_view body) const;

    // Blocks serving HTTP on config().bind_addr.
    void serve() const;

private:
    ServiceConfig config_;
};

}  // namespace compare_kit::service
