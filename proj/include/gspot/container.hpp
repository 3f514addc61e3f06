#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gspot/skeleton.hpp"

namespace gspot {

// ---------------------------------------------------------------------------
// Depth pixels: 13-bit depth in millimeters in the high bits, 3-bit player id
// (0 = background) in the low bits.

inline constexpr int kMaxDepthMm = 8191;
inline constexpr int kMaxPlayerId = 7;

std::uint16_t pack_depth_pixel(int depth_mm, int player_id);

struct DepthPixel {
  std::uint16_t depth_mm;
  std::uint8_t player_id;
};

constexpr DepthPixel unpack_depth_pixel(std::uint16_t packed) {
  return {static_cast<std::uint16_t>(packed >> 3), static_cast<std::uint8_t>(packed & 0x7)};
}

// ---------------------------------------------------------------------------
// Frames

inline constexpr std::uint16_t kDefaultWidth = 640;
inline constexpr std::uint16_t kDefaultHeight = 480;
inline constexpr std::size_t kMaxSkeletonsPerFrame = 2;

struct DepthFrame {
  std::uint64_t timestamp_ms = 0;
  std::uint16_t width = kDefaultWidth;
  std::uint16_t height = kDefaultHeight;
  std::vector<std::uint16_t> pixels;  // packed, row-major

  friend bool operator==(const DepthFrame&, const DepthFrame&) = default;
};

struct RgbFrame {
  std::uint64_t timestamp_ms = 0;
  std::uint16_t width = kDefaultWidth;
  std::uint16_t height = kDefaultHeight;
  std::vector<std::uint8_t> jpeg;  // opaque; only SOI/EOI framing is checked

  friend bool operator==(const RgbFrame&, const RgbFrame&) = default;
};

struct SkeletonFrameRecord {
  std::uint64_t timestamp_ms = 0;
  std::vector<Skeleton> skeletons;  // at most two

  friend bool operator==(const SkeletonFrameRecord&, const SkeletonFrameRecord&) = default;
};

using Frame = std::variant<DepthFrame, RgbFrame, SkeletonFrameRecord>;

enum class StreamKind : std::uint8_t { Depth = 0, Rgb = 1, Skeleton = 2 };

std::string_view to_string(StreamKind kind);
StreamKind stream_of(const Frame& frame);
std::uint64_t timestamp_of(const Frame& frame);

bool has_jpeg_framing(std::span<const std::uint8_t> payload);

// ---------------------------------------------------------------------------
// Session header

namespace stream_flags {
inline constexpr std::uint32_t kDepth = 1u << 0;
inline constexpr std::uint32_t kRgb = 1u << 1;
inline constexpr std::uint32_t kSkeleton = 1u << 2;
inline constexpr std::uint32_t kAudioReserved = 1u << 3;
}  // namespace stream_flags

inline constexpr std::uint32_t kFormatVersion = 1;

struct SessionHeader {
  std::uint32_t format_version = kFormatVersion;
  std::string sensor_id;
  std::uint64_t start_epoch_ms = 0;
  std::uint32_t stream_flags = 0;

  friend bool operator==(const SessionHeader&, const SessionHeader&) = default;
};

struct CaptureSession {
  SessionHeader header;
  std::vector<Frame> frames;

  friend bool operator==(const CaptureSession&, const CaptureSession&) = default;
};

// ---------------------------------------------------------------------------
// Writer
//
// RIFF form "BGAC": HDRS first, then DPTH / RGBF / SKEL chunks in the order
// written. Memory use is one encoded frame. The RIFF size is patched by
// finish() when the sink is seekable; unseekable sinks and files over 4 GiB
// carry 0xFFFFFFFF, which readers treat as "until end of file".

class SessionWriter {
 public:
  SessionWriter(std::ostream& sink, const SessionHeader& header);
  SessionWriter(const SessionWriter&) = delete;
  SessionWriter& operator=(const SessionWriter&) = delete;

  void write(const Frame& frame);
  void write(const DepthFrame& frame);
  void write(const RgbFrame& frame);
  void write(const SkeletonFrameRecord& frame);

  // Finalizes the RIFF size field. Returns total bytes written.
  std::uint64_t finish();

  std::uint64_t bytes_written() const { return bytes_; }

 private:
  void emit_chunk(const char (&id)[5], std::span<const std::uint8_t> payload);
  void check_order(StreamKind kind, std::uint64_t ts);

  std::ostream& sink_;
  std::uint64_t bytes_ = 0;
  std::array<std::optional<std::uint64_t>, 3> last_ts_{};
  bool finished_ = false;
};

std::uint64_t write_session(const CaptureSession& session, std::ostream& sink);
std::uint64_t write_session_file(const CaptureSession& session, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Reader

struct ReaderOptions {
  // Bitset of stream_flags; chunks of other streams are skipped undecoded.
  std::uint32_t streams = stream_flags::kDepth | stream_flags::kRgb | stream_flags::kSkeleton;
};

class SessionReader {
 public:
  explicit SessionReader(std::istream& source, ReaderOptions options = {});
  SessionReader(const SessionReader&) = delete;
  SessionReader& operator=(const SessionReader&) = delete;

  const SessionHeader& header() const { return header_; }

  // Next frame in file order, or nullopt at end of data.
  std::optional<Frame> next();

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  struct ChunkHead {
    std::array<char, 4> id;
    std::uint32_t size;
    std::uint64_t offset;  // of the chunk id
  };

  std::optional<ChunkHead> next_chunk_head();
  std::vector<std::uint8_t> read_payload(const ChunkHead& head);
  void skip_payload(const ChunkHead& head);

  std::istream& source_;
  ReaderOptions options_;
  SessionHeader header_;
  std::uint64_t pos_ = 0;
  std::optional<std::uint64_t> end_;  // absolute end of RIFF data if known
  std::vector<std::string> warnings_;
};

CaptureSession read_session(std::istream& source, ReaderOptions options = {});
CaptureSession read_session_file(const std::filesystem::path& path, ReaderOptions options = {});

// ---------------------------------------------------------------------------
// Frame-rate statistics

struct GapStats {
  double min_ms = 0.0;
  double median_ms = 0.0;
  double max_ms = 0.0;
  std::size_t frames = 0;
};

// Throws InsufficientDataError for fewer than two timestamps.
GapStats gap_stats(std::span<const std::uint64_t> timestamps);

// Per stream with at least two frames.
std::map<StreamKind, GapStats> frame_rate_stats(const CaptureSession& session);
std::map<StreamKind, GapStats> frame_rate_stats(
    const std::map<StreamKind, std::vector<std::uint64_t>>& timestamps);

// Skeleton frames regrouped into one track per player id.
std::map<std::uint8_t, std::vector<TimedSkeleton>> skeleton_tracks(std::span<const Frame> frames);

}  // namespace gspot
