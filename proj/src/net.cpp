#include "adfll/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "adfll/errors.hpp"

namespace adfll {

Endpoint parse_endpoint(const std::string& text) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos) throw ConfigError("address must be host:port: " + text);
    Endpoint ep;
    if (colon > 0) ep.host = text.substr(0, colon);
    const std::string port = text.substr(colon + 1);
    try {
        std::size_t used = 0;
        int p = std::stoi(port, &used);
        if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range("port");
        ep.port = static_cast<std::uint16_t>(p);
    } catch (const std::exception&) {
        throw ConfigError("bad port in address: " + text);
    }
    return ep;
}

std::string to_string(const Endpoint& e) { return e.host + ":" + std::to_string(e.port); }

namespace {

sockaddr_in resolve(const Endpoint& ep) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr)
        throw NetError("cannot resolve host " + ep.host);
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return addr;
}

void write_all(int fd, std::span<const std::uint8_t> bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
        ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NetError(std::string("send failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

// Blocks until a frame is complete. Returns nullopt on orderly EOF.
std::optional<Message> read_frame(int fd, FrameDecoder& decoder) {
    std::uint8_t buf[16384];
    for (;;) {
        if (auto m = decoder.next()) return m;
        ssize_t n = ::recv(fd, buf, sizeof buf, 0);
        if (n == 0) {
            if (decoder.buffered() > 0) throw NetError("connection closed mid-frame");
            return std::nullopt;
        }
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NetError(std::string("recv failed: ") + std::strerror(errno));
        }
        decoder.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    }
}

Message error_message(const std::string& text) {
    return {MsgType::Err, Bytes(text.begin(), text.end())};
}

std::string payload_text(const Message& m) { return std::string(m.payload.begin(), m.payload.end()); }

} // namespace

// ---- connection ----

Connection Connection::open(const Endpoint& ep, int attempts, std::chrono::milliseconds first_backoff) {
    const sockaddr_in addr = resolve(ep);
    auto backoff = first_backoff;
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < attempts; ++attempt) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw NetError(std::string("socket failed: ") + std::strerror(errno));
        if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
            int one = 1;
            setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return Connection(fd);
        }
        last_error = std::strerror(errno);
        ::close(fd);
        if (attempt + 1 < attempts) {
            std::this_thread::sleep_for(backoff);
            backoff = std::min(backoff * 2, std::chrono::milliseconds(1000));
        }
    }
    throw NetError("cannot connect to " + to_string(ep) + ": " + last_error);
}

Connection::Connection(Connection&& other) noexcept : fd_(other.fd_), decoder_(std::move(other.decoder_)) {
    other.fd_ = -1;
}

Connection& Connection::operator=(Connection&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = other.fd_;
        decoder_ = std::move(other.decoder_);
        other.fd_ = -1;
    }
    return *this;
}

Connection::~Connection() {
    if (fd_ >= 0) ::close(fd_);
}

void Connection::send(const Message& m) { write_all(fd_, encode_message(m)); }

void Connection::send_raw(std::span<const std::uint8_t> bytes) { write_all(fd_, bytes); }

Message Connection::receive() {
    auto m = read_frame(fd_, decoder_);
    if (!m) throw NetError("peer closed the connection");
    return *m;
}

// ---- hub server ----

HubServer::HubServer(HubServerOptions options)
    : opt_(std::move(options)), db_(opt_.hub_id), rng_(derive_rng(opt_.seed, "hub/" + opt_.hub_id)) {
    if (!(opt_.dropout_p >= 0.0 && opt_.dropout_p <= 1.0)) throw ConfigError("dropout_p must lie in [0, 1]");
}

HubServer::~HubServer() { stop(); }

void HubServer::start() {
    if (running_) return;
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw NetError(std::string("socket failed: ") + std::strerror(errno));
    int one = 1;
    setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = resolve(opt_.listen);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
        std::string err = std::strerror(errno);
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw NetError("cannot listen on " + to_string(opt_.listen) + ": " + err);
    }
    socklen_t len = sizeof addr;
    getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    acceptor_ = std::thread(&HubServer::accept_loop, this);
    if (opt_.sync_interval.count() > 0 && !opt_.peers.empty()) syncer_ = std::thread(&HubServer::sync_loop, this);
}

void HubServer::stop() {
    if (!running_.exchange(false)) return;
    if (acceptor_.joinable()) acceptor_.join();
    if (syncer_.joinable()) syncer_.join();
    ::close(listen_fd_);
    listen_fd_ = -1;
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(conn_mu_);
        for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
}

void HubServer::accept_loop() {
    while (running_) {
        pollfd p{listen_fd_, POLLIN, 0};
        int r = ::poll(&p, 1, 50);
        if (r <= 0) continue;
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        int one = 1;
        setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(conn_mu_);
        client_fds_.push_back(fd);
        workers_.emplace_back(&HubServer::serve, this, fd);
    }
}

void HubServer::serve(int fd) {
    FrameDecoder decoder;
    try {
        for (;;) {
            auto m = read_frame(fd, decoder);
            if (!m) break;
            write_all(fd, encode_message(handle(*m)));
            ++served_;
        }
    } catch (const WireError& e) {
        // Framing is lost; report and drop the peer.
        try {
            write_all(fd, encode_message(error_message(std::string("protocol error: ") + e.what())));
        } catch (const NetError&) {
        }
        std::cerr << "hub " << opt_.hub_id << ": disconnecting peer: " << e.what() << "\n";
    } catch (const NetError&) {
    }
    std::lock_guard lock(conn_mu_);
    std::erase(client_fds_, fd);
    ::close(fd);
}

Message HubServer::handle(const Message& m) {
    try {
        switch (m.type) {
        case MsgType::Upload: {
            auto erb = PublishedErb::publish(deserialize_erb(m.payload, opt_.patch_length));
            std::lock_guard lock(mu_);
            auto out = upload(db_, erb, opt_.dropout_p, rng_);
            return out.delivered.empty() ? error_message("dropped") : Message{MsgType::Ack, {}};
        }
        case MsgType::DownloadReq: {
            auto req = decode_download_request(m.payload);
            std::vector<Bytes> payloads;
            {
                std::lock_guard lock(mu_);
                auto res = download_new(db_, req.agent_id, req.exclude_self, opt_.dropout_p, rng_);
                for (const auto& e : res.erbs) payloads.push_back(serialize_erb(*e.erb));
            }
            return {MsgType::DownloadResp, encode_erb_list(payloads)};
        }
        case MsgType::SyncDigest: {
            decode_id_list(m.payload);
            return {MsgType::SyncDigest, encode_id_list(digest())};
        }
        case MsgType::SyncPull: {
            auto ids = decode_id_list(m.payload);
            std::vector<Bytes> payloads;
            std::lock_guard lock(mu_);
            for (ErbId id : ids) {
                auto it = db_.records().find(id);
                if (it != db_.records().end()) payloads.push_back(serialize_erb(*it->second.payload.erb));
            }
            return {MsgType::SyncResp, encode_erb_list(payloads)};
        }
        case MsgType::Err:
            return error_message("unexpected message: " + payload_text(m));
        default:
            return error_message("unsupported request " + to_string(m.type));
        }
    } catch (const WireError& e) {
        return error_message(std::string("malformed payload: ") + e.what());
    } catch (const IntegrityError& e) {
        return error_message(std::string("integrity: ") + e.what());
    }
}

std::vector<ErbId> HubServer::digest() const {
    std::lock_guard lock(mu_);
    return db_digest(db_);
}

std::string HubServer::manifest() const {
    std::lock_guard lock(mu_);
    return render_manifest(db_);
}

void HubServer::sync_one(const Endpoint& peer) {
    Connection c = Connection::open(peer, 1);
    const auto mine = digest();
    Message reply = c.request({MsgType::SyncDigest, encode_id_list(mine)});
    if (reply.type != MsgType::SyncDigest) throw NetError("peer refused digest: " + payload_text(reply));
    const auto theirs = decode_id_list(reply.payload);

    std::vector<ErbId> missing;
    std::set<ErbId> their_set(theirs.begin(), theirs.end());
    std::set<ErbId> my_set(mine.begin(), mine.end());
    for (ErbId id : theirs)
        if (!my_set.contains(id)) missing.push_back(id);
    if (!missing.empty()) {
        Message resp = c.request({MsgType::SyncPull, encode_id_list(missing)});
        if (resp.type != MsgType::SyncResp) throw NetError("peer refused pull: " + payload_text(resp));
        for (const auto& bytes : decode_erb_list(resp.payload)) {
            auto erb = PublishedErb::publish(deserialize_erb(bytes, opt_.patch_length));
            std::lock_guard lock(mu_);
            if (!rng_.bernoulli(opt_.dropout_p)) db_.insert(erb);
        }
    }
    // Push what the peer lacks.
    for (ErbId id : mine) {
        if (their_set.contains(id)) continue;
        Bytes bytes;
        {
            std::lock_guard lock(mu_);
            bytes = serialize_erb(*db_.records().at(id).payload.erb);
        }
        c.request({MsgType::Upload, std::move(bytes)});
    }
}

std::size_t HubServer::sync_with_peers() {
    std::size_t reached = 0;
    for (const auto& peer : opt_.peers) {
        try {
            sync_one(peer);
            ++reached;
        } catch (const std::exception& e) {
            std::cerr << "hub " << opt_.hub_id << ": sync with " << to_string(peer) << " failed: " << e.what() << "\n";
        }
    }
    return reached;
}

void HubServer::sync_loop() {
    auto next = std::chrono::steady_clock::now() + opt_.sync_interval;
    while (running_) {
        if (std::chrono::steady_clock::now() >= next) {
            sync_with_peers();
            next = std::chrono::steady_clock::now() + opt_.sync_interval;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

// ---- agent ----

AgentRunResult run_agent(const ExperimentConfig& cfg, const AgentRunOptions& options) {
    cfg.validate();
    const AgentSpec* spec = nullptr;
    for (const auto& a : cfg.agents)
        if (a.agent_id == options.agent_id) spec = &a;
    if (spec == nullptr) throw ConfigError("agent " + options.agent_id + " is not in the config");

    const auto catalog = environment_catalog(cfg.environment);
    std::map<std::string, TaskEnvironment> envs;
    auto env = [&](const std::string& id) -> const TaskEnvironment& {
        auto it = envs.find(id);
        if (it == envs.end()) it = envs.emplace(id, make_environment(catalog.at(id))).first;
        return it->second;
    };

    Connection hub = Connection::open(options.hub, options.connect_attempts);
    QFunction qf = QFunction::make(cfg.train.backend, cfg.train.observation_length());
    Pcg32 rng = derive_rng(cfg.seed, "train/" + spec->agent_id);
    std::vector<PublishedErb> personal;
    std::vector<PublishedErb> incoming;
    std::vector<const TaskEnvironment*> eval_envs;
    for (const auto& id : cfg.eval_tasks) eval_envs.push_back(&env(id));

    AgentRunResult result;
    std::string metrics = "phase,round,agent_id,task_id,mean_error\n";
    auto add_rows = [&](const char* phase, int round, const Evaluation& ev) {
        for (const auto& [task, err] : ev.mean_error) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.6f", err);
            metrics += std::string(phase) + "," + std::to_string(round) + "," + spec->agent_id + "," + task + "," + buf + "\n";
        }
    };

    for (int r = 0; r < cfg.rounds_to_complete; ++r) {
        const std::string& task = spec->task_schedule[static_cast<std::size_t>(r) % spec->task_schedule.size()];
        ErbMeta meta{spec->agent_id, task, static_cast<std::uint32_t>(r), 0};
        RoundResult rr = train_round(qf, env(task), personal, incoming, cfg.train, rng, meta);
        PublishedErb erb = PublishedErb::publish(std::move(rr.published_erb));
        personal.push_back(erb);
        result.rounds_done = r + 1;

        bool stored = false;
        for (int attempt = 0; attempt < cfg.max_transfer_attempts && !stored; ++attempt) {
            Message reply = hub.request({MsgType::Upload, serialize_erb(*erb.erb)});
            stored = reply.type == MsgType::Ack;
        }
        if (stored) result.uploaded.push_back(erb.id);

        for (int attempt = 0; attempt < cfg.max_transfer_attempts; ++attempt) {
            Message reply = hub.request({MsgType::DownloadReq, encode_download_request({spec->agent_id, true})});
            if (reply.type != MsgType::DownloadResp) throw NetError("download refused: " + payload_text(reply));
            auto list = decode_erb_list(reply.payload);
            for (const auto& bytes : list)
                incoming.push_back(PublishedErb::publish(deserialize_erb(bytes, cfg.train.observation_length())));
            result.downloaded += list.size();
            if (list.empty() || cfg.dropout_p == 0.0) break;
        }

        const bool last = r + 1 == cfg.rounds_to_complete;
        if (!eval_envs.empty() && (cfg.eval_every_round || last)) {
            result.evaluation = evaluate(qf, eval_envs, cfg.eval, cfg.train);
            add_rows("round", r + 1, result.evaluation);
        }
    }
    if (!eval_envs.empty()) add_rows("final", cfg.rounds_to_complete, result.evaluation);

    if (!options.out_dir.empty()) {
        std::filesystem::create_directories(options.out_dir);
        std::ofstream f(std::filesystem::path(options.out_dir) / "metrics.csv", std::ios::binary);
        if (!f) throw ConfigError("cannot write metrics to " + options.out_dir);
        f << metrics;
    }
    return result;
}

int run_networked(NetRole role, const NetworkedOptions& options, const ExperimentConfig& cfg) {
    try {
        if (role == NetRole::Agent) {
            run_agent(cfg, options.agent);
            return 0;
        }
        HubServer server(options.hub);
        server.start();
        std::cerr << "hub " << options.hub.hub_id << " listening on port " << server.port() << "\n";
        while (options.stop_flag == nullptr || !options.stop_flag->load())
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        server.sync_with_peers();
        server.stop();
        if (!options.manifest_path.empty()) {
            std::ofstream f(options.manifest_path, std::ios::binary);
            f << server.manifest();
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace adfll
