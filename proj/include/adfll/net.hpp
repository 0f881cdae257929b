#pragma once

// Multi-process mode: hubs serve the framed protocol over TCP and agents run
// their task schedule against a live hub.
//
// Per connection the hub answers one reply per request:
//   UPLOAD(erb bytes)          -> ACK | ERR
//   DOWNLOAD_REQ(request)      -> DOWNLOAD_RESP(erb list)
//   SYNC_DIGEST(id list)       -> SYNC_DIGEST(own id list)
//   SYNC_PULL(id list)         -> SYNC_RESP(erb list)
//   anything else              -> ERR, connection kept

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "adfll/hubnet.hpp"
#include "adfll/orchestrator.hpp"
#include "adfll/wire.hpp"

namespace adfll {

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
};

// "host:port" or ":port". Throws ConfigError.
Endpoint parse_endpoint(const std::string& text);
std::string to_string(const Endpoint& e);

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Blocking request/reply connection.
class Connection {
public:
    // Retries refused or reset connects `attempts` times with doubling
    // backoff capped at 1 s. Throws NetError once the budget is spent.
    static Connection open(const Endpoint& ep, int attempts = 8,
                           std::chrono::milliseconds first_backoff = std::chrono::milliseconds(50));
    Connection(Connection&& other) noexcept;
    Connection& operator=(Connection&& other) noexcept;
    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;
    ~Connection();

    void send(const Message& m);
    Message receive();
    Message request(const Message& m) {
        send(m);
        return receive();
    }
    // Writes raw bytes; used to exercise the hub with malformed input.
    void send_raw(std::span<const std::uint8_t> bytes);

private:
    explicit Connection(int fd) : fd_(fd) {}
    int fd_ = -1;
    FrameDecoder decoder_;
};

struct HubServerOptions {
    std::string hub_id = "H1";
    Endpoint listen;
    std::vector<Endpoint> peers;
    double dropout_p = 0.0;
    std::uint64_t seed = 1;
    std::size_t patch_length = 27;
    // 0 disables the background sync thread.
    std::chrono::milliseconds sync_interval{0};
};

class HubServer {
public:
    explicit HubServer(HubServerOptions options);
    ~HubServer();
    HubServer(const HubServer&) = delete;
    HubServer& operator=(const HubServer&) = delete;

    // Binds and starts serving. Throws NetError when the address is taken.
    void start();
    void stop();
    [[nodiscard]] std::uint16_t port() const { return port_; }
    [[nodiscard]] bool running() const { return running_; }

    // One reconciliation pass with every peer. Returns the number of peers
    // reached.
    std::size_t sync_with_peers();

    [[nodiscard]] std::vector<ErbId> digest() const;
    [[nodiscard]] std::string manifest() const;
    [[nodiscard]] std::uint64_t requests_served() const { return served_; }

private:
    void accept_loop();
    void serve(int fd);
    Message handle(const Message& m);
    void sync_loop();
    void sync_one(const Endpoint& peer);

    HubServerOptions opt_;
    mutable std::mutex mu_;
    HubDatabase db_;
    Pcg32 rng_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> served_{0};
    std::thread acceptor_;
    std::thread syncer_;
    std::mutex conn_mu_;
    std::vector<std::thread> workers_;
    std::vector<int> client_fds_;
};

struct AgentRunOptions {
    std::string agent_id;
    Endpoint hub;
    // Directory for metrics.csv; empty skips the file.
    std::string out_dir;
    int connect_attempts = 8;
};

struct AgentRunResult {
    int rounds_done = 0;
    std::vector<ErbId> uploaded;
    std::size_t downloaded = 0;
    Evaluation evaluation;
};

// Runs the agent's schedule from `cfg` for rounds_to_complete rounds:
// train, upload, download. Training and network randomness are derived the
// same way as in the simulator. Throws NetError when the hub is unreachable.
AgentRunResult run_agent(const ExperimentConfig& cfg, const AgentRunOptions& options);

enum class NetRole : std::uint8_t { Hub, Agent };

struct NetworkedOptions {
    HubServerOptions hub;
    AgentRunOptions agent;
    // Hub role: file receiving the manifest at shutdown; empty skips it.
    std::string manifest_path;
    // Hub role: serve until this flag turns true.
    const std::atomic<bool>* stop_flag = nullptr;
};

// Process entry for either role. Returns 0 on success, 1 on failure.
int run_networked(NetRole role, const NetworkedOptions& options, const ExperimentConfig& cfg);

} // namespace adfll
