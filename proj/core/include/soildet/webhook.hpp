#pragma once

#include <cstdint>
#include <string>

namespace soildet {

struct WebhookOptions {
    int max_attempts = 3;
    std::int64_t base_delay_ms = 1000;  // 1 s, 2 s, 4 s, ... between attempts
    std::int64_t timeout_ms = 5000;
};

struct DeliveryResult {
    bool delivered = false;
    int attempts = 0;
    int last_status = 0;  // HTTP status, 0 when the connection failed
};

/// POST `body` (application/json) to `url`, retrying transient failures
/// (connection errors and 5xx) with exponential backoff. 4xx responses are
/// permanent and stop the retry loop.
DeliveryResult deliver_webhook(const std::string& url, const std::string& body,
                               const WebhookOptions& options = {});

}  // namespace soildet
