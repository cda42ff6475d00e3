#include "monoocc/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "monoocc/binary.hpp"
#include "monoocc/fileio.hpp"

namespace monoocc {

namespace {

// Cursor over a text header followed by raw bytes.
class HeaderScanner {
 public:
  HeaderScanner(std::span<const char> bytes, bool allow_comments)
      : bytes_(bytes), comments_(allow_comments) {}

  std::string token() {
    skip_space();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      out.push_back(bytes_[pos_++]);
    }
    if (out.empty()) throw Error(ErrorCode::MalformedHeader, "header ended early");
    return out;
  }

  std::size_t positive_int(const char* what) {
    const std::string t = token();
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || end != t.data() + t.size() || v == 0) {
      throw Error(ErrorCode::MalformedHeader, std::string("bad ") + what + " '" + t + "'");
    }
    return v;
  }

  /// Exactly one whitespace byte separates the header from the payload.
  std::span<const char> payload() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw Error(ErrorCode::MalformedHeader, "missing separator after header");
    }
    return bytes_.subspan(pos_ + 1);
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (comments_ && c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const char> bytes_;
  bool comments_;
  std::size_t pos_ = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad number for " + what + ": '" + text + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// PFM

DisparityMap decode_pfm(std::span<const char> bytes) {
  HeaderScanner h(bytes, false);
  const std::string magic = h.token();
  if (magic != "Pf") throw Error(ErrorCode::MalformedHeader, "expected grayscale PFM 'Pf', got '" + magic + "'");
  const std::size_t w = h.positive_int("width");
  const std::size_t ht = h.positive_int("height");
  const std::string scale_text = h.token();
  double scale = 0.0;
  try {
    scale = std::stod(scale_text);
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedHeader, "bad PFM scale '" + scale_text + "'");
  }
  if (scale == 0.0 || !std::isfinite(scale)) throw Error(ErrorCode::MalformedHeader, "PFM scale must be nonzero");
  const bool little = scale < 0.0;

  binary::Reader r(h.payload());
  if (r.remaining() / 4 / w < ht) throw Error(ErrorCode::TruncatedData, "PFM payload shorter than W*H floats");
  DisparityMap out(w, ht);
  for (std::size_t row = 0; row < ht; ++row) {
    const std::size_t v = ht - 1 - row;
    for (std::size_t u = 0; u < w; ++u) {
      std::uint32_t bits = r.u32();
      if (!little) bits = binary::byteswap(bits);
      out(u, v) = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  return out;
}

std::vector<char> encode_pfm(const DisparityMap& raster) {
  binary::Writer w;
  w.text("Pf\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n-1\n");
  for (std::size_t row = 0; row < raster.height(); ++row) {
    const std::size_t v = raster.height() - 1 - row;
    for (std::size_t u = 0; u < raster.width(); ++u) w.f32(static_cast<float>(raster(u, v)));
  }
  return w.buffer();
}

DisparityMap read_pfm(const std::filesystem::path& path) {
  try {
    return decode_pfm(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MissingFile) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_pfm(const std::filesystem::path& path, const DisparityMap& raster) {
  write_file(path, encode_pfm(raster));
}

// ---------------------------------------------------------------------------
// PGM

LabelMap decode_pgm(std::span<const char> bytes) {
  HeaderScanner h(bytes, true);
  const std::string magic = h.token();
  if (magic != "P5") throw Error(ErrorCode::MalformedHeader, "expected binary PGM 'P5', got '" + magic + "'");
  const std::size_t w = h.positive_int("width");
  const std::size_t ht = h.positive_int("height");
  const std::size_t maxval = h.positive_int("maxval");
  if (maxval > 255) throw Error(ErrorCode::MaxvalUnsupported, "maxval " + std::to_string(maxval) + " needs 16-bit samples");
  const std::span<const char> data = h.payload();
  if (data.size() / w < ht) throw Error(ErrorCode::TruncatedData, "PGM payload shorter than W*H bytes");
  LabelMap out(w, ht);
  for (std::size_t i = 0; i < w * ht; ++i) out[i] = static_cast<ClassId>(data[i]);
  return out;
}

std::vector<char> encode_pgm(const LabelMap& raster) {
  binary::Writer w;
  w.text("P5\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n255\n");
  for (ClassId c : raster.values()) w.u8(c);
  return w.buffer();
}

LabelMap read_pgm(const std::filesystem::path& path) {
  try {
    return decode_pgm(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MissingFile) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_pgm(const std::filesystem::path& path, const LabelMap& raster) {
  write_file(path, encode_pgm(raster));
}

// ---------------------------------------------------------------------------
// SOG1

SemanticGrid decode_sog(std::span<const char> bytes) {
  binary::Reader r(bytes);
  if (bytes.size() < 4 || std::string(bytes.data(), 4) != "SOG1") {
    throw Error(ErrorCode::BadMagic, "not a SOG1 grid");
  }
  r.take(4);
  SemanticGrid g;
  try {
    for (auto& d : g.spec.dims) d = r.u32();
    g.spec.voxel_size = r.f32();
    for (auto& o : g.spec.origin) o = r.f32();
  } catch (const Error&) {
    throw Error(ErrorCode::SizeMismatch, "SOG1 header truncated");
  }
  try {
    g.spec.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedHeader, e.what());
  }
  // Each voxel takes 5 payload bytes; reject dims whose product cannot fit
  // before multiplying.
  std::size_t capacity = r.remaining() / 5;
  for (auto d : g.spec.dims) {
    if (d > capacity) throw Error(ErrorCode::SizeMismatch, "SOG1 dims exceed the payload");
    capacity /= d;
  }
  const std::size_t n = g.spec.voxel_count();
  if (r.remaining() != n * 5) {
    throw Error(ErrorCode::SizeMismatch, "SOG1 payload has " + std::to_string(r.remaining()) +
                                             " bytes, expected " + std::to_string(n * 5));
  }
  g.counts.resize(n);
  g.labels.resize(n);
  for (auto& c : g.counts) c = r.u32();
  for (auto& l : g.labels) l = r.u8();
  return g;
}

std::vector<char> encode_sog(const SemanticGrid& grid) {
  const std::size_t n = grid.spec.voxel_count();
  if (grid.counts.size() != n || grid.labels.size() != n) {
    throw Error(ErrorCode::SizeMismatch, "grid arrays do not match its spec");
  }
  binary::Writer w;
  w.text("SOG1");
  for (auto d : grid.spec.dims) w.u32(static_cast<std::uint32_t>(d));
  w.f32(static_cast<float>(grid.spec.voxel_size));
  for (auto o : grid.spec.origin) w.f32(static_cast<float>(o));
  for (auto c : grid.counts) w.u32(c);
  for (auto l : grid.labels) w.u8(l);
  return w.buffer();
}

SemanticGrid read_sog(const std::filesystem::path& path) { return decode_sog(read_file(path)); }

void write_sog(const std::filesystem::path& path, const SemanticGrid& grid) {
  write_file(path, encode_sog(grid));
}

void write_sog(const std::filesystem::path& path, const OccupancyGrid& grid) {
  write_sog(path, resolve_semantics(grid));
}

// ---------------------------------------------------------------------------
// Manifest and key=value files

std::vector<FrameRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "manifest has no header");
  const auto header = split_csv(line);
  const bool has_scale = header.size() == 4 && header[3] == "scale";
  if (header.size() < 3 || header[0] != "frame_id" || header[1] != "disparity" ||
      header[2] != "labels" || (header.size() == 4 && !has_scale) || header.size() > 4) {
    throw Error(ErrorCode::MalformedHeader, "manifest header must be frame_id,disparity,labels[,scale]");
  }

  const std::filesystem::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  std::vector<FrameRecord> out;
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() < 3 || cells.size() > header.size() || cells[0].empty()) {
      throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(line_no) + ": bad row");
    }
    FrameRecord rec;
    rec.frame_id = cells[0];
    rec.disparity = resolve(cells[1]);
    rec.labels = resolve(cells[2]);
    if (cells.size() == 4 && !cells[3].empty()) rec.scale = parse_double(cells[3], "scale");
    if (!seen.insert(rec.frame_id).second) {
      throw Error(ErrorCode::DuplicateFrameId, "frame id '" + rec.frame_id + "' repeats in " + path.string());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
  const auto kv = read_key_values(path);
  auto get = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (auto it = kv.find(k); it != kv.end()) return parse_double(it->second, k);
    }
    throw Error(ErrorCode::InvalidArgument, path.string() + ": missing intrinsics key '" +
                                                std::string(*keys.begin()) + "'");
  };
  CameraIntrinsics k;
  k.fx = get({"fx", "f_x"});
  k.fy = get({"fy", "f_y"});
  k.ox = get({"ox", "o_x"});
  k.oy = get({"oy", "o_y"});
  k.baseline = get({"b", "baseline"});
  k.validate();
  return k;
}

void write_point_cloud(std::ostream& out, const LabeledCloud& cloud) {
  char buf[128];
  for (const Point3& p : cloud.points) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %d\n", p.x, p.y, p.z,
                  static_cast<int>(p.label.value_or(kUnlabeled)));
    out << buf;
  }
}

void write_point_cloud(const std::filesystem::path& path, const LabeledCloud& cloud) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  write_point_cloud(out, cloud);
}

}  // namespace monoocc
