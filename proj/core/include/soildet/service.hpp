#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "soildet/store.hpp"
#include "soildet/webhook.hpp"

namespace soildet {

struct ServiceConfig {
    StoreConfig store;
    std::string bind_address = "127.0.0.1";
    int http_port = 8080;   // 0 = pick an ephemeral port
    int tcp_port = -1;      // line-protocol listener; -1 disabled, 0 ephemeral
    std::vector<AlertRule> rules;
    WebhookOptions webhook;
    bool alerts_enabled = true;
};

/// Load a service config JSON file (all fields optional; flags may override).
ServiceConfig load_service_config(const std::filesystem::path& path);

/// Ingestion service: HTTP POST /ingest (newline-delimited records),
/// GET /datastream/{name}/latest, GET /health, plus an optional raw TCP line
/// listener. Webhook notifications are delivered by a background worker so
/// ingestion never blocks on alert endpoints.
class TelemetryService {
public:
    explicit TelemetryService(ServiceConfig config);
    ~TelemetryService();

    TelemetryService(const TelemetryService&) = delete;
    TelemetryService& operator=(const TelemetryService&) = delete;

    /// Bind and serve on background threads. Throws std::runtime_error when
    /// the port cannot be bound.
    void start();

    /// Stop listeners, drain the webhook queue, flush partitions.
    void stop();

    int http_port() const;
    int tcp_port() const;

    /// Blocks until stop() is called (for the CLI serve loop).
    void wait();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace soildet
