#pragma once

// Canonical byte formats.
//
// ERB layout (all integers little-endian):
//   "ADFL" | version u16 | agent_id (u16 len + UTF-8) | task_id (u16 len + UTF-8)
//   | round u32 | capacity u32 | seen_count u64 | entry count u32 | entries...
// Each entry: state (patch_len x u8) | action u8 | reward f64 | next_state
// (patch_len x u8) | terminal u8.
//
// Frame layout: length u32 (type byte + payload) | type u8 | payload.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adfll/replay.hpp"

namespace adfll {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint16_t kErbFormatVersion = 1;
inline constexpr std::size_t kMaxFrameLength = 64U * 1024U * 1024U;

enum class WireErrorKind : std::uint8_t {
    Truncated,
    BadMagic,
    VersionMismatch,
    CountLengthMismatch,
    InvalidField,
    OversizeFrame,
    EmptyFrame,
};

std::string to_string(WireErrorKind kind);

class WireError : public std::runtime_error {
public:
    WireError(WireErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] WireErrorKind kind() const { return kind_; }

private:
    WireErrorKind kind_;
};

class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f64(double v);
    void str16(std::string_view s);
    void raw(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

    [[nodiscard]] const Bytes& bytes() const& { return out_; }
    Bytes take() && { return std::move(out_); }

private:
    void le(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    Bytes out_;
};

// Bounds-checked reader; every short read throws WireError{Truncated}.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::string str16();
    std::span<const std::uint8_t> raw(std::size_t n);

    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }
    [[nodiscard]] std::size_t position() const { return pos_; }

private:
    std::uint64_t le(int width);
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

inline constexpr std::size_t kDefaultPatchLength = 27;

std::size_t erb_header_size(const ErbMeta& meta);
std::size_t transition_wire_size(std::size_t patch_len);

// Throws WireError{InvalidField} for transitions whose state lengths differ
// from the first entry's or whose reward is non-finite.
Bytes serialize_erb(const ExperienceReplayBuffer& erb);

// `patch_len` is the configured observation length; it is not stored in the
// header.
ExperienceReplayBuffer deserialize_erb(std::span<const std::uint8_t> bytes,
                                       std::size_t patch_len = kDefaultPatchLength);

enum class MsgType : std::uint8_t {
    Upload = 1,
    DownloadReq = 2,
    DownloadResp = 3,
    SyncDigest = 4,
    SyncPull = 5,
    SyncResp = 6,
    Ack = 7,
    Err = 8,
};

std::string to_string(MsgType t);

struct Message {
    MsgType type = MsgType::Ack;
    Bytes payload;
    bool operator==(const Message&) const = default;
};

Bytes encode_message(const Message& m);

struct DecodedFrame {
    Message message;
    std::size_t consumed = 0;
};

// Decodes the first frame in `bytes`. Unknown type bytes decode to an Err
// message describing the problem. Throws WireError for truncated, empty or
// oversize frames; the length guard runs before any payload is touched.
DecodedFrame decode_message(std::span<const std::uint8_t> bytes);

// Incremental decoder for a byte stream.
class FrameDecoder {
public:
    void feed(std::span<const std::uint8_t> bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }
    // Returns the next complete frame, or nullopt when more bytes are needed.
    // Oversize or empty frames throw; the stream cannot be resynchronized
    // after that.
    std::optional<Message> next();
    [[nodiscard]] std::size_t buffered() const { return buffer_.size(); }

private:
    Bytes buffer_;
};

// Payload codecs.
struct DownloadRequest {
    std::string agent_id;
    bool exclude_self = true;
};
Bytes encode_download_request(const DownloadRequest& req);
DownloadRequest decode_download_request(std::span<const std::uint8_t> payload);

Bytes encode_erb_list(std::span<const Bytes> erbs);
std::vector<Bytes> decode_erb_list(std::span<const std::uint8_t> payload);

Bytes encode_id_list(std::span<const ErbId> ids);
std::vector<ErbId> decode_id_list(std::span<const std::uint8_t> payload);

} // namespace adfll
