#include "rimamba/cloud_io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "rimamba/errors.hpp"

namespace rimamba {

// ---------------------------------------------------------------- Prng

double Prng::normal() {
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Prng::below(std::uint64_t n) {
  if (n == 0) throw ArgumentError("Prng::below: n must be positive");
  // Rejection keeps the result exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  Prng mix(seed ^ (stream * 0xD1B54A32D192ED03ULL));
  mix.next_u64();
  return mix.next_u64();
}

// ---------------------------------------------------------------- PointCloud

void PointCloud::validate() const {
  if (points.empty()) throw ArgumentError("empty cloud");
  for (std::size_t i = 0; i < points.size(); ++i)
    for (double v : points[i])
      if (!std::isfinite(v)) throw ArgumentError("non-finite coordinate at point " + std::to_string(i));
  if (colors) {
    if (colors->size() != points.size())
      throw ArgumentError("color count " + std::to_string(colors->size()) + " does not match point count " +
                          std::to_string(points.size()));
    for (std::size_t i = 0; i < colors->size(); ++i)
      for (float v : (*colors)[i])
        if (!(v >= 0.0f && v <= 1.0f)) throw ArgumentError("color out of [0,1] at point " + std::to_string(i));
  }
}

// ---------------------------------------------------------------- PCB1

namespace {

constexpr char kPcbMagic[4] = {'P', 'C', 'B', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw FormatError(std::string("truncated ") + what + " at byte offset " + std::to_string(pos_));
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_pcb1(const PointCloud& cloud) {
  cloud.validate();
  if (cloud.size() > UINT32_MAX) throw ArgumentError("cloud too large for PCB1");
  std::vector<std::uint8_t> out(std::begin(kPcbMagic), std::end(kPcbMagic));
  put_u32(out, static_cast<std::uint32_t>(cloud.size()));
  out.push_back(cloud.colors ? 1 : 0);
  for (const Vec3& p : cloud.points)
    for (double v : p) put_f32(out, static_cast<float>(v));
  if (cloud.colors)
    for (const Rgb& c : *cloud.colors)
      for (float v : c) put_f32(out, v);
  return out;
}

PointCloud decode_pcb1(std::string_view bytes) {
  ByteReader r(bytes);
  r.need(4, "magic");
  if (bytes.substr(0, 4) != std::string_view(kPcbMagic, 4)) throw FormatError("bad magic at byte offset 0");
  r.u32("magic");
  const std::uint32_t n = r.u32("point count");
  const std::uint8_t has_colors = r.u8("color flag");
  if (has_colors > 1) throw FormatError("invalid color flag at byte offset 8");
  if (n == 0) throw FormatError("empty cloud");

  PointCloud cloud;
  cloud.points.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    r.need(12, "point record");
    for (int a = 0; a < 3; ++a) cloud.points[i][a] = static_cast<double>(r.f32("point record"));
  }
  if (has_colors) {
    cloud.colors.emplace(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      r.need(12, "color record");
      for (int a = 0; a < 3; ++a) (*cloud.colors)[i][a] = r.f32("color record");
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing data at byte offset " + std::to_string(r.offset()));
  try {
    cloud.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(e.what());
  }
  return cloud;
}

// ---------------------------------------------------------------- XYZ

namespace {

template <class T>
void append_number(std::string& out, T v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string encode_xyz(const PointCloud& cloud) {
  cloud.validate();
  std::string out;
  out.reserve(cloud.size() * 48);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    append_number(out, p[0]);
    out += ' ';
    append_number(out, p[1]);
    out += ' ';
    append_number(out, p[2]);
    if (cloud.colors) {
      for (float c : (*cloud.colors)[i]) {
        out += ' ';
        append_number(out, c);
      }
    }
    out += '\n';
  }
  return out;
}

PointCloud decode_xyz(std::string_view text) {
  PointCloud cloud;
  std::vector<Rgb> colors;
  int columns = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::array<double, 6> vals{};
    int count = 0;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && !(line[j] == ' ' || line[j] == '\t' || line[j] == '\r')) ++j;
      if (count == 6) throw FormatError("line " + std::to_string(line_no) + ": too many fields");
      const char* first = line.data() + i;
      const char* last = line.data() + j;
      if (*first == '+') ++first;
      auto res = std::from_chars(first, last, vals[count]);
      if (res.ec != std::errc() || res.ptr != last)
        throw FormatError("line " + std::to_string(line_no) + ": bad number '" + std::string(line.substr(i, j - i)) +
                          "'");
      ++count;
      i = j;
    }
    if (count == 0) continue;
    if (count != 3 && count != 6)
      throw FormatError("line " + std::to_string(line_no) + ": expected 3 or 6 fields, got " + std::to_string(count));
    if (columns == 0) columns = count;
    if (count != columns)
      throw FormatError("line " + std::to_string(line_no) + ": inconsistent field count (expected " +
                        std::to_string(columns) + ")");
    cloud.points.push_back({vals[0], vals[1], vals[2]});
    if (count == 6)
      colors.push_back({static_cast<float>(vals[3]), static_cast<float>(vals[4]), static_cast<float>(vals[5])});
  }
  if (cloud.points.empty()) throw FormatError("empty cloud");
  if (columns == 6) cloud.colors = std::move(colors);
  try {
    cloud.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(e.what());
  }
  return cloud;
}

// ---------------------------------------------------------------- files

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  const std::string data = read_file(path);
  PointCloud cloud;
  try {
    cloud = format == CloudFormat::pcb1_binary ? decode_pcb1(data) : decode_xyz(data);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  cloud.id = path.stem().string();
  return cloud;
}

PointCloud load_cloud(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char head[4] = {};
  in.read(head, 4);
  const bool binary = in.gcount() == 4 && std::memcmp(head, kPcbMagic, 4) == 0;
  return load_cloud(path, binary ? CloudFormat::pcb1_binary : CloudFormat::xyz_ascii);
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  if (format == CloudFormat::pcb1_binary) {
    const auto bytes = encode_pcb1(cloud);
    write_file(path, bytes.data(), bytes.size());
  } else {
    const auto text = encode_xyz(cloud);
    write_file(path, text.data(), text.size());
  }
}

// ---------------------------------------------------------------- normalize

PointCloud normalize_cloud(const PointCloud& cloud) {
  cloud.validate();
  Vec3 centroid{0.0, 0.0, 0.0};
  for (const Vec3& p : cloud.points) centroid = centroid + p;
  centroid = centroid * (1.0 / static_cast<double>(cloud.size()));

  PointCloud out = cloud;
  double max_norm = 0.0;
  for (Vec3& p : out.points) {
    p = p - centroid;
    max_norm = std::max(max_norm, norm(p));
  }
  const double extent = std::max({1.0, std::abs(centroid[0]), std::abs(centroid[1]), std::abs(centroid[2])});
  if (!(max_norm > 1e-12 * extent)) throw DegenerateError("degenerate cloud: all points coincide (zero scale)");
  const double inv = 1.0 / max_norm;
  for (Vec3& p : out.points) p = p * inv;
  return out;
}

// ---------------------------------------------------------------- generators

std::string_view to_string(CloudKind kind) {
  switch (kind) {
    case CloudKind::ellipsoid: return "ellipsoid";
    case CloudKind::box_surface: return "box_surface";
    case CloudKind::two_lobes: return "two_lobes";
    case CloudKind::helix: return "helix";
  }
  return "?";
}

CloudKind parse_cloud_kind(std::string_view name) {
  for (CloudKind k : {CloudKind::ellipsoid, CloudKind::box_surface, CloudKind::two_lobes, CloudKind::helix})
    if (to_string(k) == name) return k;
  throw ArgumentError("unknown cloud kind '" + std::string(name) + "'");
}

namespace {

Vec3 round_f32(const Vec3& p) {
  return {static_cast<double>(static_cast<float>(p[0])), static_cast<double>(static_cast<float>(p[1])),
          static_cast<double>(static_cast<float>(p[2]))};
}

Vec3 sample_ellipsoid(Prng& rng) {
  Vec3 u;
  do {
    u = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  } while (squared_norm(u) > 1.0);
  return {3.0 * u[0], 2.0 * u[1], 1.0 * u[2]};
}

Vec3 sample_box_surface(Prng& rng) {
  constexpr double a = 1.5, b = 1.0, c = 0.5;  // half extents
  constexpr double area_xy = a * b, area_xz = a * c, area_yz = b * c;
  const double total = area_xy + area_xz + area_yz;
  const double pick = rng.uniform() * total;
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double s = rng.uniform(-1.0, 1.0);
  const double t = rng.uniform(-1.0, 1.0);
  if (pick < area_xy) return {a * s, b * t, c * sign};
  if (pick < area_xy + area_xz) return {a * s, b * sign, c * t};
  return {a * sign, b * s, c * t};
}

Vec3 sample_two_lobes(Prng& rng) {
  if (rng.uniform() < 0.7) {
    return {-0.8 + 0.55 * rng.normal(), 0.35 * rng.normal(), 0.2 * rng.normal()};
  }
  return {1.1 + 0.25 * rng.normal(), 0.45 + 0.18 * rng.normal(), 0.1 + 0.3 * rng.normal()};
}

Vec3 sample_helix(Prng& rng) {
  const double t = rng.uniform(0.0, 3.0 * 2.0 * std::numbers::pi);
  const double radius = 0.6 + 0.08 * t;  // taper breaks the helix's symmetry
  const double tube = 0.12 + 0.01 * t;
  return {radius * std::cos(t) + tube * rng.normal(), radius * std::sin(t) + tube * rng.normal(),
          0.18 * t + tube * rng.normal()};
}

}  // namespace

PointCloud gen_cloud(CloudKind kind, std::size_t n, Prng& rng) {
  if (n == 0) throw ArgumentError("gen_cloud: n must be at least 1");
  PointCloud cloud;
  cloud.id = std::string(to_string(kind));
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 p;
    switch (kind) {
      case CloudKind::ellipsoid: p = sample_ellipsoid(rng); break;
      case CloudKind::box_surface: p = sample_box_surface(rng); break;
      case CloudKind::two_lobes: p = sample_two_lobes(rng); break;
      case CloudKind::helix: p = sample_helix(rng); break;
    }
    cloud.points.push_back(round_f32(p));
  }
  return cloud;
}

PointCloud rotate_cloud(const PointCloud& cloud, const Mat3& rotation) {
  PointCloud out = cloud;
  for (Vec3& p : out.points) p = p * rotation;
  return out;
}

}  // namespace rimamba
