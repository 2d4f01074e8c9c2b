#include "soildet/webhook.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"

namespace soildet {

namespace {

// split "http://host:port/path" -> (host:port base, path)
bool split_url(const std::string& url, std::string& base, std::string& path) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) return false;
    const auto slash = url.find('/', scheme.size());
    if (slash == std::string::npos) {
        base = url;
        path = "/";
    } else {
        base = url.substr(0, slash);
        path = url.substr(slash);
    }
    return true;
}

}  // namespace

DeliveryResult deliver_webhook(const std::string& url, const std::string& body,
                               const WebhookOptions& options) {
    DeliveryResult result;
    std::string base, path;
    if (!split_url(url, base, path)) return result;

    std::int64_t delay = options.base_delay_ms;
    for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
        result.attempts = attempt;
        httplib::Client client(base);
        client.set_connection_timeout(0, options.timeout_ms * 1000);
        client.set_read_timeout(0, options.timeout_ms * 1000);
        auto res = client.Post(path, body, "application/json");
        if (res) {
            result.last_status = res->status;
            if (res->status >= 200 && res->status < 300) {
                result.delivered = true;
                return result;
            }
            if (res->status < 500) return result;  // permanent
        } else {
            result.last_status = 0;
        }
        if (attempt < options.max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            delay *= 2;
        }
    }
    return result;
}

}  // namespace soildet
