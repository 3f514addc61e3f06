#include "gspot/container.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "bytes.hpp"
#include "gspot/error.hpp"
#include "gspot/log.hpp"
#include "gspot/lzf.hpp"

namespace gspot {

using detail::ByteReader;
using detail::ByteWriter;

std::uint16_t pack_depth_pixel(int depth_mm, int player_id) {
  if (depth_mm < 0 || depth_mm > kMaxDepthMm)
    throw RangeError("depth " + std::to_string(depth_mm) + " mm outside [0, 8191]");
  if (player_id < 0 || player_id > kMaxPlayerId)
    throw RangeError("player id " + std::to_string(player_id) + " outside [0, 7]");
  return static_cast<std::uint16_t>((depth_mm << 3) | player_id);
}

std::string_view to_string(StreamKind kind) {
  switch (kind) {
    case StreamKind::Depth:
      return "depth";
    case StreamKind::Rgb:
      return "rgb";
    case StreamKind::Skeleton:
      return "skeleton";
  }
  return "?";
}

StreamKind stream_of(const Frame& frame) { return static_cast<StreamKind>(frame.index()); }

std::uint64_t timestamp_of(const Frame& frame) {
  return std::visit([](const auto& f) { return f.timestamp_ms; }, frame);
}

bool has_jpeg_framing(std::span<const std::uint8_t> p) {
  return p.size() >= 4 && p[0] == 0xFF && p[1] == 0xD8 && p[p.size() - 2] == 0xFF &&
         p[p.size() - 1] == 0xD9;
}

namespace {

constexpr char kRiff[5] = "RIFF";
constexpr char kForm[5] = "BGAC";
constexpr char kHeaderId[5] = "HDRS";
constexpr char kDepthId[5] = "DPTH";
constexpr char kRgbId[5] = "RGBF";
constexpr char kSkelId[5] = "SKEL";
constexpr std::uint32_t kUnknownSize = 0xFFFFFFFFu;

bool id_is(const std::array<char, 4>& id, const char (&tag)[5]) {
  return std::memcmp(id.data(), tag, 4) == 0;
}

std::string printable(const std::array<char, 4>& id) {
  std::string s;
  for (char c : id) s += (c >= 0x20 && c < 0x7f) ? c : '?';
  return s;
}

std::uint32_t stream_bit(StreamKind kind) { return 1u << static_cast<unsigned>(kind); }

}  // namespace

// ---------------------------------------------------------------------------

SessionWriter::SessionWriter(std::ostream& sink, const SessionHeader& header) : sink_(sink) {
  if (header.format_version != kFormatVersion)
    throw FormatError("only container format version 1 can be written");
  ByteWriter riff;
  riff.tag(kRiff);
  riff.u32(kUnknownSize);
  riff.tag(kForm);
  sink_.write(reinterpret_cast<const char*>(riff.buffer().data()),
              static_cast<std::streamsize>(riff.size()));
  if (!sink_) throw IoError("failed to write RIFF header");
  bytes_ += riff.size();

  ByteWriter hdr;
  hdr.u32(header.format_version);
  hdr.u64(header.start_epoch_ms);
  hdr.u32(header.stream_flags);
  hdr.str(header.sensor_id);
  emit_chunk(kHeaderId, hdr.buffer());
}

void SessionWriter::emit_chunk(const char (&id)[5], std::span<const std::uint8_t> payload) {
  if (finished_) throw IoError("session writer already finished");
  ByteWriter head;
  head.tag(id);
  head.u32(static_cast<std::uint32_t>(payload.size()));
  sink_.write(reinterpret_cast<const char*>(head.buffer().data()), 8);
  sink_.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
  if (payload.size() % 2 != 0) sink_.put('\0');
  if (!sink_) throw IoError(std::string("failed to write chunk ") + id);
  bytes_ += 8 + payload.size() + payload.size() % 2;
}

void SessionWriter::check_order(StreamKind kind, std::uint64_t ts) {
  auto& last = last_ts_[static_cast<std::size_t>(kind)];
  if (last && ts < *last) {
    throw OrderingError(std::string(to_string(kind)) + " frame at " + std::to_string(ts) +
                        " ms precedes previous frame at " + std::to_string(*last) + " ms");
  }
  last = ts;
}

void SessionWriter::write(const Frame& frame) {
  std::visit([this](const auto& f) { write(f); }, frame);
}

void SessionWriter::write(const DepthFrame& f) {
  if (f.pixels.size() != std::size_t{f.width} * f.height)
    throw InputError("depth frame pixel count does not match width x height");
  check_order(StreamKind::Depth, f.timestamp_ms);

  std::vector<std::uint8_t> raw(f.pixels.size() * 2);
  for (std::size_t i = 0; i < f.pixels.size(); ++i) {
    raw[2 * i] = static_cast<std::uint8_t>(f.pixels[i]);
    raw[2 * i + 1] = static_cast<std::uint8_t>(f.pixels[i] >> 8);
  }
  const auto block = lzf::compress(raw);

  ByteWriter w;
  w.u64(f.timestamp_ms);
  w.u16(f.width);
  w.u16(f.height);
  w.u32(static_cast<std::uint32_t>(block.size()));
  w.bytes(block);
  emit_chunk(kDepthId, w.buffer());
}

void SessionWriter::write(const RgbFrame& f) {
  if (!has_jpeg_framing(f.jpeg)) throw InputError("RGB payload is not SOI/EOI framed JPEG");
  check_order(StreamKind::Rgb, f.timestamp_ms);
  ByteWriter w;
  w.u64(f.timestamp_ms);
  w.u16(f.width);
  w.u16(f.height);
  w.u32(static_cast<std::uint32_t>(f.jpeg.size()));
  w.bytes(f.jpeg);
  emit_chunk(kRgbId, w.buffer());
}

void SessionWriter::write(const SkeletonFrameRecord& f) {
  if (f.skeletons.size() > kMaxSkeletonsPerFrame)
    throw InputError("at most two skeletons per frame");
  check_order(StreamKind::Skeleton, f.timestamp_ms);
  ByteWriter w;
  w.u64(f.timestamp_ms);
  w.u8(static_cast<std::uint8_t>(f.skeletons.size()));
  for (const Skeleton& s : f.skeletons) {
    if (s.player_id < 1 || s.player_id > kMaxPlayerId)
      throw RangeError("skeleton player id must be in [1, 7]");
    w.u8(s.player_id);
    for (const Joint& j : s.joints) {
      w.u8(static_cast<std::uint8_t>(j.state));
      w.f32(j.x);
      w.f32(j.y);
      w.f32(j.z);
    }
  }
  emit_chunk(kSkelId, w.buffer());
}

std::uint64_t SessionWriter::finish() {
  if (finished_) return bytes_;
  finished_ = true;
  sink_.flush();
  const std::uint64_t riff_size = bytes_ - 8;
  if (riff_size < kUnknownSize) {
    const auto end = sink_.tellp();
    if (end != std::streampos(-1)) {
      sink_.seekp(end - static_cast<std::streamoff>(bytes_ - 4));
      ByteWriter w;
      w.u32(static_cast<std::uint32_t>(riff_size));
      sink_.write(reinterpret_cast<const char*>(w.buffer().data()), 4);
      sink_.seekp(end);
    }
    if (!sink_) {
      sink_.clear();
      log::warn("container sink is not seekable; RIFF size left open-ended");
    }
  }
  sink_.flush();
  if (!sink_) throw IoError("failed to flush container");
  return bytes_;
}

std::uint64_t write_session(const CaptureSession& session, std::ostream& sink) {
  SessionWriter writer(sink, session.header);
  for (const Frame& f : session.frames) writer.write(f);
  return writer.finish();
}

std::uint64_t write_session_file(const CaptureSession& session, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return write_session(session, out);
}

// ---------------------------------------------------------------------------

SessionReader::SessionReader(std::istream& source, ReaderOptions options)
    : source_(source), options_(options) {
  std::array<std::uint8_t, 12> riff{};
  source_.read(reinterpret_cast<char*>(riff.data()), 12);
  if (source_.gcount() != 12 || std::memcmp(riff.data(), kRiff, 4) != 0 ||
      std::memcmp(riff.data() + 8, kForm, 4) != 0) {
    throw FormatError("not a BGAC RIFF container (bad magic)");
  }
  pos_ = 12;
  ByteReader r(std::span<const std::uint8_t>(riff).subspan(4, 4), 4);
  const std::uint32_t size = r.u32();
  if (size != kUnknownSize) end_ = std::uint64_t{size} + 8;

  const auto head = next_chunk_head();
  if (!head || !id_is(head->id, kHeaderId)) throw FormatError("container does not start with HDRS");
  const auto payload = read_payload(*head);
  ByteReader h(payload, head->offset + 8);
  header_.format_version = h.u32();
  if (header_.format_version != kFormatVersion)
    throw FormatError("unsupported container version " + std::to_string(header_.format_version));
  header_.start_epoch_ms = h.u64();
  header_.stream_flags = h.u32();
  header_.sensor_id = h.str();
}

std::optional<SessionReader::ChunkHead> SessionReader::next_chunk_head() {
  if (end_ && pos_ >= *end_) return std::nullopt;
  std::array<std::uint8_t, 8> raw{};
  source_.read(reinterpret_cast<char*>(raw.data()), 8);
  const auto got = static_cast<std::size_t>(source_.gcount());
  if (got == 0 && !end_) return std::nullopt;
  if (got != 8) throw CorruptStreamError("truncated chunk header", pos_);
  ChunkHead head{};
  std::memcpy(head.id.data(), raw.data(), 4);
  head.size = ByteReader(std::span(raw).subspan(4), pos_ + 4).u32();
  head.offset = pos_;
  pos_ += 8;
  if (end_ && pos_ + head.size > *end_)
    throw CorruptStreamError("chunk '" + printable(head.id) + "' overruns RIFF size", head.offset);
  return head;
}

std::vector<std::uint8_t> SessionReader::read_payload(const ChunkHead& head) {
  const std::size_t padded = head.size + (head.size % 2);
  std::vector<std::uint8_t> buf(padded);
  source_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(padded));
  const auto got = static_cast<std::size_t>(source_.gcount());
  // A missing final pad byte is tolerated only when the file ends right there.
  const bool pad_missing_at_eof = got == head.size && padded != head.size && !end_;
  if (got != padded && !pad_missing_at_eof) {
    throw CorruptStreamError("truncated chunk '" + printable(head.id) + "'", head.offset);
  }
  pos_ += got;
  buf.resize(head.size);
  return buf;
}

void SessionReader::skip_payload(const ChunkHead& head) {
  // Read rather than seek so truncation is detected on pipes too.
  const std::size_t padded = head.size + (head.size % 2);
  std::array<char, 65536> scratch;
  std::size_t left = padded;
  while (left > 0) {
    const std::size_t n = std::min(left, scratch.size());
    source_.read(scratch.data(), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(source_.gcount());
    pos_ += got;
    left -= got;
    if (got != n) {
      if (left == 1 && padded != head.size && !end_) return;
      throw CorruptStreamError("truncated chunk '" + printable(head.id) + "'", head.offset);
    }
  }
}

std::optional<Frame> SessionReader::next() {
  while (true) {
    const auto head = next_chunk_head();
    if (!head) return std::nullopt;

    StreamKind kind;
    if (id_is(head->id, kDepthId)) {
      kind = StreamKind::Depth;
    } else if (id_is(head->id, kRgbId)) {
      kind = StreamKind::Rgb;
    } else if (id_is(head->id, kSkelId)) {
      kind = StreamKind::Skeleton;
    } else {
      const std::string msg = "skipping unknown chunk '" + printable(head->id) + "' at offset " +
                              std::to_string(head->offset);
      log::warn(msg);
      warnings_.push_back(msg);
      skip_payload(*head);
      continue;
    }
    if ((options_.streams & stream_bit(kind)) == 0) {
      skip_payload(*head);
      continue;
    }

    const auto payload = read_payload(*head);
    ByteReader r(payload, head->offset + 8);
    switch (kind) {
      case StreamKind::Depth: {
        DepthFrame f;
        f.timestamp_ms = r.u64();
        f.width = r.u16();
        f.height = r.u16();
        const std::uint32_t len = r.u32();
        const std::uint64_t block_at = r.offset();
        const auto block = r.bytes(len);
        const std::size_t n = std::size_t{f.width} * f.height;
        std::vector<std::uint8_t> raw;
        try {
          raw = lzf::decompress(block, n * 2);
        } catch (const CorruptStreamError& e) {
          throw CorruptStreamError("corrupt depth block", block_at + e.offset());
        }
        f.pixels.resize(n);
        for (std::size_t i = 0; i < n; ++i)
          f.pixels[i] = static_cast<std::uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
        return f;
      }
      case StreamKind::Rgb: {
        RgbFrame f;
        f.timestamp_ms = r.u64();
        f.width = r.u16();
        f.height = r.u16();
        const std::uint32_t len = r.u32();
        const std::uint64_t at = r.offset();
        const auto bytes = r.bytes(len);
        f.jpeg.assign(bytes.begin(), bytes.end());
        if (!has_jpeg_framing(f.jpeg)) throw CorruptStreamError("RGB payload lacks SOI/EOI", at);
        return f;
      }
      case StreamKind::Skeleton: {
        SkeletonFrameRecord f;
        f.timestamp_ms = r.u64();
        const std::uint64_t count_at = r.offset();
        const std::uint8_t count = r.u8();
        if (count > kMaxSkeletonsPerFrame)
          throw CorruptStreamError("skeleton count exceeds two", count_at);
        f.skeletons.resize(count);
        for (Skeleton& s : f.skeletons) {
          s.player_id = r.u8();
          for (Joint& j : s.joints) {
            const std::uint64_t state_at = r.offset();
            const std::uint8_t state = r.u8();
            if (state > static_cast<std::uint8_t>(JointState::Tracked))
              throw CorruptStreamError("invalid joint state", state_at);
            j.state = static_cast<JointState>(state);
            j.x = r.f32();
            j.y = r.f32();
            j.z = r.f32();
          }
        }
        return f;
      }
    }
  }
}

CaptureSession read_session(std::istream& source, ReaderOptions options) {
  SessionReader reader(source, options);
  CaptureSession session{reader.header(), {}};
  while (auto f = reader.next()) session.frames.push_back(std::move(*f));
  return session;
}

CaptureSession read_session_file(const std::filesystem::path& path, ReaderOptions options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_session(in, options);
}

// ---------------------------------------------------------------------------

GapStats gap_stats(std::span<const std::uint64_t> ts) {
  if (ts.size() < 2) throw InsufficientDataError("frame-rate statistics need at least two frames");
  std::vector<double> gaps;
  gaps.reserve(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i)
    gaps.push_back(static_cast<double>(ts[i]) - static_cast<double>(ts[i - 1]));
  std::sort(gaps.begin(), gaps.end());
  const std::size_t m = gaps.size();
  const double median = m % 2 ? gaps[m / 2] : 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]);
  return {gaps.front(), median, gaps.back(), ts.size()};
}

std::map<StreamKind, GapStats> frame_rate_stats(
    const std::map<StreamKind, std::vector<std::uint64_t>>& timestamps) {
  std::map<StreamKind, GapStats> out;
  for (const auto& [kind, ts] : timestamps)
    if (ts.size() >= 2) out[kind] = gap_stats(ts);
  return out;
}

std::map<StreamKind, GapStats> frame_rate_stats(const CaptureSession& session) {
  std::map<StreamKind, std::vector<std::uint64_t>> ts;
  for (const Frame& f : session.frames) ts[stream_of(f)].push_back(timestamp_of(f));
  return frame_rate_stats(ts);
}

std::map<std::uint8_t, std::vector<TimedSkeleton>> skeleton_tracks(std::span<const Frame> frames) {
  std::map<std::uint8_t, std::vector<TimedSkeleton>> tracks;
  for (const Frame& f : frames) {
    const auto* rec = std::get_if<SkeletonFrameRecord>(&f);
    if (rec == nullptr) continue;
    for (const Skeleton& s : rec->skeletons) {
      auto& track = tracks[s.player_id];
      const double t = static_cast<double>(rec->timestamp_ms);
      // Duplicate timestamps keep the first record.
      if (!track.empty() && track.back().t_ms >= t) continue;
      track.push_back({t, s});
    }
  }
  return tracks;
}

}  // namespace gspot
