#include "soildet/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <ctime>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "nlohmann/json.hpp"

namespace soildet {

using nlohmann::json;

ServiceConfig load_service_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("config: bad JSON: " + std::string(e.what()));
    }
    ServiceConfig cfg;
    try {
        if (j.contains("data_dir"))
            cfg.store.data_dir = j["data_dir"].get<std::string>();
        cfg.store.utc_offset_min =
            j.value("utc_offset_min", cfg.store.utc_offset_min);
        cfg.store.pairing_window_ms =
            j.value("pairing_window_ms", cfg.store.pairing_window_ms);
        cfg.store.day_validity_floor_lux =
            j.value("day_validity_floor_lux", cfg.store.day_validity_floor_lux);
        if (j.contains("led_reference"))
            for (auto& [node, v] : j["led_reference"].items())
                cfg.store.led_reference[node] = v.get<double>();
        if (j.contains("led_reference_default"))
            cfg.store.led_reference_default = j["led_reference_default"].get<double>();
        cfg.bind_address = j.value("bind_address", cfg.bind_address);
        cfg.http_port = j.value("http_port", cfg.http_port);
        cfg.tcp_port = j.value("tcp_port", cfg.tcp_port);
        cfg.alerts_enabled = j.value("alerts_enabled", cfg.alerts_enabled);
        if (j.contains("rules_file"))
            cfg.rules = load_rules(j["rules_file"].get<std::string>());
        if (j.contains("webhook")) {
            const auto& w = j["webhook"];
            cfg.webhook.max_attempts = w.value("max_attempts", cfg.webhook.max_attempts);
            cfg.webhook.base_delay_ms = w.value("base_delay_ms", cfg.webhook.base_delay_ms);
            cfg.webhook.timeout_ms = w.value("timeout_ms", cfg.webhook.timeout_ms);
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("config: " + std::string(e.what()));
    }
    return cfg;
}

struct TelemetryService::Impl {
    explicit Impl(ServiceConfig cfg)
        : config(std::move(cfg)), store(config.store) {}

    ServiceConfig config;
    std::mutex mutex;  // guards store and last_fired
    IngestStore store;
    std::map<std::string, UtcMillis> last_fired;

    httplib::Server http;
    std::thread http_thread;
    int bound_http_port = 0;

    int tcp_listen_fd = -1;
    int bound_tcp_port = 0;
    std::thread tcp_thread;
    std::vector<std::thread> tcp_conns;
    std::mutex tcp_conns_mutex;

    struct QueuedDelivery {
        std::string url;
        std::string body;
        std::string rule_id;
    };
    std::deque<QueuedDelivery> webhook_queue;
    std::mutex webhook_mutex;
    std::condition_variable webhook_cv;
    std::thread webhook_thread;

    std::atomic<bool> running{false};
    std::mutex wait_mutex;
    std::condition_variable wait_cv;

    void on_point(const std::string& node, const BlockagePoint& point) {
        // called under `mutex` from the ingest path
        if (!config.alerts_enabled || config.rules.empty()) return;
        auto fired = evaluate_alerts(point, node, config.rules, last_fired,
                                     config.store.bands);
        if (fired.empty()) return;
        std::lock_guard lk(webhook_mutex);
        for (const Notification& n : fired)
            for (const AlertRule& rule : config.rules)
                if (rule.rule_id == n.rule_id)
                    webhook_queue.push_back(
                        {rule.webhook_url, notification_json(n), n.rule_id});
        webhook_cv.notify_one();
    }

    void webhook_worker() {
        std::ofstream log(config.store.data_dir / "webhook.log", std::ios::app);
        for (;;) {
            QueuedDelivery item;
            {
                std::unique_lock lk(webhook_mutex);
                webhook_cv.wait(lk, [&] {
                    return !webhook_queue.empty() || !running.load();
                });
                if (webhook_queue.empty()) {
                    if (!running.load()) return;
                    continue;
                }
                item = std::move(webhook_queue.front());
                webhook_queue.pop_front();
            }
            const DeliveryResult r =
                deliver_webhook(item.url, item.body, config.webhook);
            log << format_rfc3339(static_cast<UtcMillis>(time(nullptr)) * 1000)
                << ' ' << item.rule_id << ' ' << item.url << " attempts="
                << r.attempts << " status=" << r.last_status << ' '
                << (r.delivered ? "delivered" : "failed") << '\n';
            log.flush();
        }
    }

    std::string ingest_body(const std::string& body, int& status) {
        std::size_t accepted = 0, duplicate = 0, rejected = 0;
        bool io_error = false;
        {
            std::lock_guard lk(mutex);
            std::size_t pos = 0;
            while (pos < body.size()) {
                std::size_t eol = body.find('\n', pos);
                if (eol == std::string::npos) eol = body.size();
                std::string_view line(body.data() + pos, eol - pos);
                if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
                pos = eol + 1;
                if (line.empty()) continue;
                const IngestResult r = store.ingest_line(line);
                switch (r.outcome) {
                    case IngestOutcome::Accepted: ++accepted; break;
                    case IngestOutcome::Duplicate: ++duplicate; break;
                    case IngestOutcome::Rejected: ++rejected; break;
                    case IngestOutcome::IoError: io_error = true; break;
                }
                if (io_error) break;
            }
        }
        status = io_error ? 500 : 200;
        json res{{"accepted", accepted},
                 {"duplicate", duplicate},
                 {"rejected", rejected}};
        if (io_error) res["error"] = "io_error";
        return res.dump();
    }

    void setup_routes() {
        http.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"status\":\"ok\"}", "application/json");
        });

        http.Post("/ingest", [this](const httplib::Request& req,
                                    httplib::Response& res) {
            int status = 200;
            const std::string body = ingest_body(req.body, status);
            res.status = status;
            res.set_content(body, "application/json");
        });

        http.Get(R"(/datastream/(.+)/latest)", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
            const std::string name = req.matches[1];
            std::optional<std::pair<UtcMillis, double>> latest;
            {
                std::lock_guard lk(mutex);
                latest = store.get_latest(name);
            }
            if (!latest) {
                res.status = 404;
                res.set_content("{\"error\":\"not_found\"}", "application/json");
                return;
            }
            json j{{"ts", format_rfc3339(latest->first)}, {"value", latest->second}};
            res.set_content(j.dump(), "application/json");
        });

        http.Get("/counters", [this](const httplib::Request&, httplib::Response& res) {
            json j = json::object();
            {
                std::lock_guard lk(mutex);
                for (const auto& [k, v] : store.counters()) j[k] = v;
            }
            res.set_content(j.dump(), "application/json");
        });
    }

    void tcp_connection(int fd) {
        std::string buffer;
        char chunk[4096];
        timeval tv{0, 200000};
        setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        while (running.load()) {
            const ssize_t n = recv(fd, chunk, sizeof(chunk), 0);
            if (n == 0) break;  // peer closed
            if (n < 0) {
                if (errno == EAGAIN || errno == EWOULDBLOCK) continue;
                break;
            }
            buffer.append(chunk, static_cast<std::size_t>(n));
            std::size_t pos = 0;
            for (;;) {
                const std::size_t eol = buffer.find('\n', pos);
                if (eol == std::string::npos) break;
                std::string_view line(buffer.data() + pos, eol - pos);
                if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
                if (!line.empty()) {
                    std::lock_guard lk(mutex);
                    store.ingest_line(line);
                }
                pos = eol + 1;
            }
            buffer.erase(0, pos);
        }
        // trailing line without newline
        if (!buffer.empty()) {
            std::lock_guard lk(mutex);
            store.ingest_line(buffer);
        }
        close(fd);
    }

    void tcp_listener() {
        while (running.load()) {
            pollfd pfd{tcp_listen_fd, POLLIN, 0};
            const int r = poll(&pfd, 1, 200);
            if (r <= 0) continue;
            sockaddr_in peer{};
            socklen_t len = sizeof(peer);
            const int fd = accept(tcp_listen_fd,
                                  reinterpret_cast<sockaddr*>(&peer), &len);
            if (fd < 0) continue;
            std::lock_guard lk(tcp_conns_mutex);
            tcp_conns.emplace_back([this, fd] { tcp_connection(fd); });
        }
    }
};

TelemetryService::TelemetryService(ServiceConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {
    impl_->store.set_point_hook(
        [this](const std::string& node, const BlockagePoint& p) {
            impl_->on_point(node, p);
        });
    impl_->setup_routes();
}

TelemetryService::~TelemetryService() {
    if (impl_ && impl_->running.load()) stop();
}

void TelemetryService::start() {
    Impl& s = *impl_;
    s.running.store(true);

    if (s.config.http_port == 0) {
        s.bound_http_port = s.http.bind_to_any_port(s.config.bind_address);
        if (s.bound_http_port <= 0)
            throw std::runtime_error("service: cannot bind HTTP port");
    } else {
        if (!s.http.bind_to_port(s.config.bind_address, s.config.http_port))
            throw std::runtime_error("service: cannot bind HTTP port " +
                                     std::to_string(s.config.http_port));
        s.bound_http_port = s.config.http_port;
    }
    s.http_thread = std::thread([&s] { s.http.listen_after_bind(); });

    if (s.config.tcp_port >= 0) {
        s.tcp_listen_fd = socket(AF_INET, SOCK_STREAM, 0);
        if (s.tcp_listen_fd < 0) throw std::runtime_error("service: socket() failed");
        const int one = 1;
        setsockopt(s.tcp_listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<uint16_t>(s.config.tcp_port));
        if (inet_pton(AF_INET, s.config.bind_address.c_str(), &addr.sin_addr) != 1)
            addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        if (bind(s.tcp_listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
            listen(s.tcp_listen_fd, 16) != 0)
            throw std::runtime_error("service: cannot bind TCP port " +
                                     std::to_string(s.config.tcp_port));
        socklen_t len = sizeof(addr);
        getsockname(s.tcp_listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
        s.bound_tcp_port = ntohs(addr.sin_port);
        s.tcp_thread = std::thread([&s] { s.tcp_listener(); });
    }

    s.webhook_thread = std::thread([&s] { s.webhook_worker(); });
}

void TelemetryService::stop() {
    Impl& s = *impl_;
    if (!s.running.exchange(false)) return;

    s.http.stop();
    if (s.http_thread.joinable()) s.http_thread.join();

    if (s.tcp_thread.joinable()) s.tcp_thread.join();
    if (s.tcp_listen_fd >= 0) {
        close(s.tcp_listen_fd);
        s.tcp_listen_fd = -1;
    }
    {
        std::lock_guard lk(s.tcp_conns_mutex);
        for (std::thread& t : s.tcp_conns)
            if (t.joinable()) t.join();
        s.tcp_conns.clear();
    }

    s.webhook_cv.notify_all();
    if (s.webhook_thread.joinable()) s.webhook_thread.join();

    {
        std::lock_guard lk(s.mutex);
        s.store.flush();
    }
    s.wait_cv.notify_all();
}

int TelemetryService::http_port() const { return impl_->bound_http_port; }
int TelemetryService::tcp_port() const { return impl_->bound_tcp_port; }

void TelemetryService::wait() {
    std::unique_lock lk(impl_->wait_mutex);
    impl_->wait_cv.wait(lk, [this] { return !impl_->running.load(); });
}

}  // namespace soildet
