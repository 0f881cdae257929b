#include "adfll/wire.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace adfll {

namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'D', 'F', 'L'};
constexpr std::uint8_t kMaxLevel = 7;

[[noreturn]] void fail(WireErrorKind kind, const std::string& what) { throw WireError(kind, what); }

void write_patch(ByteWriter& w, const Observation& patch) { w.raw(patch); }

Observation read_patch(ByteReader& r, std::size_t len) {
    const auto raw = r.raw(len);
    for (std::uint8_t v : raw) {
        if (v > kMaxLevel) fail(WireErrorKind::InvalidField, "patch level out of range");
    }
    return {raw.begin(), raw.end()};
}

} // namespace

std::string to_string(WireErrorKind kind) {
    switch (kind) {
    case WireErrorKind::Truncated: return "truncated";
    case WireErrorKind::BadMagic: return "bad-magic";
    case WireErrorKind::VersionMismatch: return "version-mismatch";
    case WireErrorKind::CountLengthMismatch: return "count-length-mismatch";
    case WireErrorKind::InvalidField: return "invalid-field";
    case WireErrorKind::OversizeFrame: return "oversize-frame";
    case WireErrorKind::EmptyFrame: return "empty-frame";
    }
    return "unknown";
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str16(std::string_view s) {
    if (s.size() > 0xffff) fail(WireErrorKind::InvalidField, "string longer than 65535 bytes");
    u16(static_cast<std::uint16_t>(s.size()));
    for (char c : s) out_.push_back(static_cast<std::uint8_t>(c));
}

std::uint64_t ByteReader::le(int width) {
    if (remaining() < static_cast<std::size_t>(width)) fail(WireErrorKind::Truncated, "unexpected end of input");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(le(1)); }
std::uint16_t ByteReader::u16() { return static_cast<std::uint16_t>(le(2)); }
std::uint32_t ByteReader::u32() { return static_cast<std::uint32_t>(le(4)); }
std::uint64_t ByteReader::u64() { return le(8); }
double ByteReader::f64() { return std::bit_cast<double>(le(8)); }

std::string ByteReader::str16() {
    const std::size_t n = u16();
    const auto raw = this->raw(n);
    return {reinterpret_cast<const char*>(raw.data()), raw.size()};
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
    if (remaining() < n) fail(WireErrorKind::Truncated, "unexpected end of input");
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::size_t erb_header_size(const ErbMeta& meta) {
    return 4 + 2 + 2 + meta.agent_id.size() + 2 + meta.task_id.size() + 4 + 4 + 8 + 4;
}

std::size_t transition_wire_size(std::size_t patch_len) { return patch_len + 1 + 8 + patch_len + 1; }

Bytes serialize_erb(const ExperienceReplayBuffer& erb) {
    const std::size_t patch_len = erb.entries.empty() ? 0 : erb.entries.front().state.size();
    ByteWriter w;
    w.raw(kMagic);
    w.u16(kErbFormatVersion);
    w.str16(erb.meta.agent_id);
    w.str16(erb.meta.task_id);
    w.u32(erb.meta.round);
    w.u32(erb.capacity);
    w.u64(erb.seen_count);
    w.u32(static_cast<std::uint32_t>(erb.entries.size()));
    for (const auto& t : erb.entries) {
        if (t.state.size() != patch_len || t.next_state.size() != patch_len) {
            fail(WireErrorKind::InvalidField, "transition observation lengths differ");
        }
        if (!std::isfinite(t.reward)) fail(WireErrorKind::InvalidField, "non-finite reward");
        write_patch(w, t.state);
        w.u8(static_cast<std::uint8_t>(t.action));
        w.f64(t.reward);
        write_patch(w, t.next_state);
        w.u8(t.terminal ? 1 : 0);
    }
    return std::move(w).take();
}

ExperienceReplayBuffer deserialize_erb(std::span<const std::uint8_t> bytes, std::size_t patch_len) {
    ByteReader r(bytes);
    if (bytes.size() < 4) fail(WireErrorKind::Truncated, "erb shorter than magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(WireErrorKind::BadMagic, "bad erb magic");
    r.raw(4);
    const std::uint16_t version = r.u16();
    if (version != kErbFormatVersion) {
        fail(WireErrorKind::VersionMismatch, "unsupported erb version " + std::to_string(version));
    }
    ExperienceReplayBuffer erb;
    erb.meta.agent_id = r.str16();
    erb.meta.task_id = r.str16();
    erb.meta.round = r.u32();
    erb.capacity = r.u32();
    erb.seen_count = r.u64();
    const std::uint32_t count = r.u32();

    const std::uint64_t needed = static_cast<std::uint64_t>(count) * transition_wire_size(patch_len);
    if (needed != r.remaining()) {
        fail(WireErrorKind::CountLengthMismatch, "declared " + std::to_string(count) + " entries but " +
                                                     std::to_string(r.remaining()) + " payload bytes");
    }
    if (erb.capacity == 0 || count > erb.capacity || erb.seen_count < count) {
        fail(WireErrorKind::InvalidField, "inconsistent capacity/seen_count/count");
    }

    erb.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Transition t;
        t.state = read_patch(r, patch_len);
        const std::uint8_t action = r.u8();
        if (action >= kActionCount) fail(WireErrorKind::InvalidField, "action code out of range");
        t.action = static_cast<Action>(action);
        t.reward = r.f64();
        if (!std::isfinite(t.reward)) fail(WireErrorKind::InvalidField, "non-finite reward");
        t.next_state = read_patch(r, patch_len);
        const std::uint8_t terminal = r.u8();
        if (terminal > 1) fail(WireErrorKind::InvalidField, "terminal flag not 0/1");
        t.terminal = terminal == 1;
        erb.entries.push_back(std::move(t));
    }
    return erb;
}

std::string to_string(MsgType t) {
    switch (t) {
    case MsgType::Upload: return "UPLOAD";
    case MsgType::DownloadReq: return "DOWNLOAD_REQ";
    case MsgType::DownloadResp: return "DOWNLOAD_RESP";
    case MsgType::SyncDigest: return "SYNC_DIGEST";
    case MsgType::SyncPull: return "SYNC_PULL";
    case MsgType::SyncResp: return "SYNC_RESP";
    case MsgType::Ack: return "ACK";
    case MsgType::Err: return "ERR";
    }
    return "UNKNOWN";
}

Bytes encode_message(const Message& m) {
    const std::size_t length = m.payload.size() + 1;
    if (length > kMaxFrameLength) fail(WireErrorKind::OversizeFrame, "frame exceeds 64 MiB");
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(length));
    w.u8(static_cast<std::uint8_t>(m.type));
    w.raw(m.payload);
    return std::move(w).take();
}

DecodedFrame decode_message(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const std::uint32_t length = r.u32();
    if (length == 0) fail(WireErrorKind::EmptyFrame, "frame length 0 has no type byte");
    if (length > kMaxFrameLength) {
        fail(WireErrorKind::OversizeFrame, "frame length " + std::to_string(length) + " exceeds 64 MiB");
    }
    if (r.remaining() < length) fail(WireErrorKind::Truncated, "incomplete frame");
    const std::uint8_t type = r.u8();
    const auto payload = r.raw(length - 1);

    DecodedFrame out;
    out.consumed = 4 + static_cast<std::size_t>(length);
    if (type < static_cast<std::uint8_t>(MsgType::Upload) || type > static_cast<std::uint8_t>(MsgType::Err)) {
        const std::string text = "unknown message type " + std::to_string(type);
        out.message = Message{MsgType::Err, Bytes(text.begin(), text.end())};
        return out;
    }
    out.message = Message{static_cast<MsgType>(type), Bytes(payload.begin(), payload.end())};
    return out;
}

std::optional<Message> FrameDecoder::next() {
    if (buffer_.size() < 4) return std::nullopt;
    const std::uint32_t length = static_cast<std::uint32_t>(buffer_[0]) | (static_cast<std::uint32_t>(buffer_[1]) << 8) |
                                 (static_cast<std::uint32_t>(buffer_[2]) << 16) |
                                 (static_cast<std::uint32_t>(buffer_[3]) << 24);
    if (length == 0) fail(WireErrorKind::EmptyFrame, "frame length 0 has no type byte");
    if (length > kMaxFrameLength) fail(WireErrorKind::OversizeFrame, "frame exceeds 64 MiB");
    if (buffer_.size() < 4 + static_cast<std::size_t>(length)) return std::nullopt;
    auto decoded = decode_message(buffer_);
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(decoded.consumed));
    return std::move(decoded.message);
}

Bytes encode_download_request(const DownloadRequest& req) {
    ByteWriter w;
    w.str16(req.agent_id);
    w.u8(req.exclude_self ? 1 : 0);
    return std::move(w).take();
}

DownloadRequest decode_download_request(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    DownloadRequest req;
    req.agent_id = r.str16();
    const std::uint8_t flag = r.u8();
    if (flag > 1) fail(WireErrorKind::InvalidField, "exclude_self flag not 0/1");
    req.exclude_self = flag == 1;
    if (r.remaining() != 0) fail(WireErrorKind::CountLengthMismatch, "trailing bytes in download request");
    return req;
}

Bytes encode_erb_list(std::span<const Bytes> erbs) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(erbs.size()));
    for (const auto& e : erbs) {
        w.u32(static_cast<std::uint32_t>(e.size()));
        w.raw(e);
    }
    return std::move(w).take();
}

std::vector<Bytes> decode_erb_list(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    const std::uint32_t count = r.u32();
    // Each entry needs at least its 4-byte length.
    if (static_cast<std::uint64_t>(count) * 4 > r.remaining()) {
        fail(WireErrorKind::CountLengthMismatch, "erb list count exceeds payload");
    }
    std::vector<Bytes> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t len = r.u32();
        const auto raw = r.raw(len);
        out.emplace_back(raw.begin(), raw.end());
    }
    if (r.remaining() != 0) fail(WireErrorKind::CountLengthMismatch, "trailing bytes in erb list");
    return out;
}

Bytes encode_id_list(std::span<const ErbId> ids) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(ids.size()));
    for (ErbId id : ids) w.u64(id);
    return std::move(w).take();
}

std::vector<ErbId> decode_id_list(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    const std::uint32_t count = r.u32();
    if (static_cast<std::uint64_t>(count) * 8 != r.remaining()) {
        fail(WireErrorKind::CountLengthMismatch, "id list count does not match payload");
    }
    std::vector<ErbId> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) out.push_back(r.u64());
    return out;
}

} // namespace adfll
