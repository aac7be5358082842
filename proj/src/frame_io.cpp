#include "neuroflow/frame_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace neuroflow {

namespace fs = std::filesystem;

FlowField crop(const FlowField& src, int x0, int y0, int w, int h) {
  require(x0 >= 0 && y0 >= 0 && w >= 0 && h >= 0 && x0 + w <= src.width && y0 + h <= src.height,
          "crop rectangle outside flow field");
  FlowField out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      out.u[out.index(x, y)] = src.u[src.index(x0 + x, y0 + y)];
      out.v[out.index(x, y)] = src.v[src.index(x0 + x, y0 + y)];
    }
  return out;
}

namespace {

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

// Netpbm header token reader: skips whitespace and '#' comments.
class HeaderReader {
 public:
  HeaderReader(const std::vector<std::uint8_t>& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

  long long next_int() {
    skip_space();
    long long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > (1LL << 31)) fail(ErrorCode::kUnsupportedFormat, "header value overflow in " + path_.string());
      ++digits;
    }
    if (digits == 0) fail(ErrorCode::kTruncated, "malformed or truncated header in " + path_.string());
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      fail(ErrorCode::kTruncated, "missing raster in " + path_.string());
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  const fs::path& path_;
  std::size_t pos_ = 2;
};

std::vector<std::uint8_t> pgm_bytes(int width, int height, std::span<const std::uint8_t> payload) {
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  return bytes;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) value |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return value;
}

long long trailing_index(const std::string& stem) {
  auto end = stem.find_last_of("0123456789");
  if (end == std::string::npos) return -1;
  auto begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  return std::stoll(stem.substr(begin, end - begin + 1));
}

}  // namespace

LumaFrame read_pgm(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::kIo, "no such file: " + path.string());
  const auto bytes = slurp(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    fail(ErrorCode::kUnsupportedFormat, "not a binary P5 image: " + path.string());
  HeaderReader header(bytes, path);
  const long long width = header.next_int();
  const long long height = header.next_int();
  const long long maxval = header.next_int();
  if (width < 1 || height < 1) fail(ErrorCode::kUnsupportedFormat, "zero-sized image: " + path.string());
  if (maxval != 255) fail(ErrorCode::kBadMaxval, "maxval must be 255 in " + path.string());
  const std::size_t offset = header.payload_offset();
  const std::size_t expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < offset + expected) fail(ErrorCode::kTruncated, "truncated raster in " + path.string());
  LumaFrame frame(static_cast<int>(width), static_cast<int>(height));
  std::memcpy(frame.data.data(), bytes.data() + offset, expected);
  return frame;
}

void write_pgm(const LumaFrame& frame, const fs::path& path) {
  require(frame.width >= 1 && frame.height >= 1 && frame.size() == static_cast<std::size_t>(frame.width) * frame.height,
          "invalid frame");
  dump(path, pgm_bytes(frame.width, frame.height, frame.data));
}

void write_mask_pgm(const BinaryImage& mask, const fs::path& path) {
  std::vector<std::uint8_t> payload(mask.size());
  std::transform(mask.data.begin(), mask.data.end(), payload.begin(), [](std::uint8_t b) -> std::uint8_t { return b ? 255 : 0; });
  dump(path, pgm_bytes(mask.width, mask.height, payload));
}

BinaryImage read_mask_pgm(const fs::path& path) {
  const LumaFrame raw = read_pgm(path);
  BinaryImage mask(raw.width, raw.height);
  for (std::size_t i = 0; i < raw.size(); ++i) mask.data[i] = raw.data[i] >= 128 ? 1 : 0;
  return mask;
}

void write_ppm(int width, int height, const std::vector<std::uint8_t>& rgb, const fs::path& path) {
  require(rgb.size() == static_cast<std::size_t>(width) * height * 3, "rgb buffer size mismatch");
  const std::string header = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), rgb.begin(), rgb.end());
  dump(path, bytes);
}

FlowField read_flo(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::kIo, "no such file: " + path.string());
  const auto bytes = slurp(path);
  if (bytes.size() < 12) fail(ErrorCode::kSizeMismatch, "flo header truncated: " + path.string());
  if (std::bit_cast<float>(get_u32(bytes, 0)) != kFloMagic) fail(ErrorCode::kBadMagic, "bad .flo magic: " + path.string());
  const auto width = static_cast<std::int32_t>(get_u32(bytes, 4));
  const auto height = static_cast<std::int32_t>(get_u32(bytes, 8));
  if (width < 1 || height < 1) fail(ErrorCode::kSizeMismatch, "non-positive .flo dimensions: " + path.string());
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() != 12 + count * 8) fail(ErrorCode::kSizeMismatch, "payload does not match .flo header: " + path.string());
  FlowField field(width, height);
  for (std::size_t i = 0; i < count; ++i) {
    field.u[i] = std::bit_cast<float>(get_u32(bytes, 12 + 8 * i));
    field.v[i] = std::bit_cast<float>(get_u32(bytes, 16 + 8 * i));
  }
  return field;
}

void write_flo(const FlowField& field, const fs::path& path) {
  const std::size_t count = static_cast<std::size_t>(field.width) * field.height;
  require(field.width >= 1 && field.height >= 1 && field.u.size() == count && field.v.size() == count,
          "invalid flow field");
  std::vector<std::uint8_t> bytes;
  bytes.reserve(12 + count * 8);
  put_u32(bytes, std::bit_cast<std::uint32_t>(kFloMagic));
  put_u32(bytes, static_cast<std::uint32_t>(field.width));
  put_u32(bytes, static_cast<std::uint32_t>(field.height));
  for (std::size_t i = 0; i < count; ++i) {
    require(std::isfinite(field.u[i]) && std::isfinite(field.v[i]), "flow field contains non-finite values");
    put_u32(bytes, std::bit_cast<std::uint32_t>(field.u[i]));
    put_u32(bytes, std::bit_cast<std::uint32_t>(field.v[i]));
  }
  dump(path, bytes);
}

std::vector<LumaFrame> load_sequence(const fs::path& dir, const std::string& pattern) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<std::pair<long long, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".pgm") continue;
    const std::string stem = entry.path().stem().string();
    if (!pattern.empty() && stem.find(pattern) == std::string::npos) continue;
    files.emplace_back(trailing_index(stem), entry.path());
  }
  if (files.empty()) fail(ErrorCode::kEmptySequence, "no frames in " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<LumaFrame> frames;
  frames.reserve(files.size());
  for (const auto& [index, path] : files) {
    frames.push_back(read_pgm(path));
    if (!frames.back().same_shape(frames.front()))
      fail(ErrorCode::kDimensionMismatch, "frame " + path.filename().string() + " differs in size from the first frame");
  }
  return frames;
}

void write_rois(const RoiSet& rois, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& r : rois) out << r.x << ' ' << r.y << ' ' << r.w << ' ' << r.h << '\n';
}

RoiSet read_rois(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  RoiSet rois;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    RoiRect r;
    if (!(fields >> r.x >> r.y >> r.w >> r.h)) fail(ErrorCode::kConfig, "malformed roi line: " + line);
    rois.push_back(r);
  }
  return rois;
}

}  // namespace neuroflow
