#include "relief/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <system_error>

#include "relief/error.hpp"

namespace relief {

namespace fs = std::filesystem;

DepthFormat depth_format_from_path(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pfm") return DepthFormat::pfm;
  if (ext == ".png") return DepthFormat::png16;
  throw IoError("cannot infer depth format from extension of " + path.string());
}

DepthFormat parse_depth_format(std::string_view name) {
  if (name == "pfm") return DepthFormat::pfm;
  if (name == "png16") return DepthFormat::png16;
  throw ConfigError("unknown depth format '" + std::string(name) + "' (expected pfm or png16)");
}

std::string_view to_string(DepthFormat format) {
  return format == DepthFormat::pfm ? "pfm" : "png16";
}

fs::path sidecar_path(const fs::path& png_path) {
  fs::path p = png_path;
  p.replace_extension(".json");
  return p;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

// ---------------------------------------------------------------------------
// PFM

namespace {

struct PfmHeader {
  int channels = 1;
  std::size_t width = 0;
  std::size_t height = 0;
  bool little_endian = true;
  std::size_t payload_offset = 0;
};

class HeaderCursor {
 public:
  explicit HeaderCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space() {
    while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
  }

  std::string_view token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) ++pos_;
    if (start == pos_) throw FormatError("PFM: truncated header", pos_);
    return {reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start};
  }

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }
  std::uint8_t at(std::size_t i) const { return bytes_[i]; }
  void advance() { ++pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

PfmHeader parse_pfm_header(std::span<const std::uint8_t> bytes) {
  HeaderCursor cur(bytes);
  PfmHeader h;
  const std::string_view magic = cur.token();
  if (magic == "Pf") {
    h.channels = 1;
  } else if (magic == "PF") {
    h.channels = 3;
  } else {
    throw FormatError("PFM: bad magic", 0);
  }

  auto parse_dim = [&](const char* what) {
    const std::size_t at = cur.pos();
    const std::string_view tok = cur.token();
    std::size_t value = 0;
    auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || end != tok.data() + tok.size())
      throw FormatError(std::string("PFM: bad ") + what, at);
    if (value < 2)
      throw FormatError(std::string("PFM: ") + what + " must be at least 2", at);
    return value;
  };
  h.width = parse_dim("width");
  h.height = parse_dim("height");

  const std::size_t scale_at = cur.pos();
  const std::string scale_tok(cur.token());
  char* end = nullptr;
  const double scale = std::strtod(scale_tok.c_str(), &end);
  if (end != scale_tok.c_str() + scale_tok.size() || scale == 0.0 || !std::isfinite(scale))
    throw FormatError("PFM: bad scale line", scale_at);
  h.little_endian = scale < 0.0;

  // Exactly one whitespace byte separates the header from the samples.
  if (cur.pos() >= cur.size() || !std::isspace(cur.at(cur.pos())))
    throw FormatError("PFM: truncated header", cur.pos());
  cur.advance();
  h.payload_offset = cur.pos();
  return h;
}

float read_float(const std::uint8_t* p, bool little_endian) {
  std::uint32_t bits = 0;
  if (little_endian) {
    bits = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
  } else {
    bits = std::uint32_t(p[3]) | std::uint32_t(p[2]) << 8 | std::uint32_t(p[1]) << 16 |
           std::uint32_t(p[0]) << 24;
  }
  return std::bit_cast<float>(bits);
}

void append_float_le(std::vector<std::uint8_t>& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  out.push_back(static_cast<std::uint8_t>(bits));
  out.push_back(static_cast<std::uint8_t>(bits >> 8));
  out.push_back(static_cast<std::uint8_t>(bits >> 16));
  out.push_back(static_cast<std::uint8_t>(bits >> 24));
}

/// Returns samples in image order (top row first), channel-interleaved.
std::vector<float> read_pfm_samples(std::span<const std::uint8_t> bytes, const PfmHeader& h) {
  const std::size_t count = h.width * h.height * static_cast<std::size_t>(h.channels);
  if (bytes.size() - h.payload_offset < count * 4) {
    throw FormatError("PFM: truncated payload, expected " + std::to_string(count * 4) +
                          " bytes of samples",
                      bytes.size());
  }
  const std::size_t row_len = h.width * static_cast<std::size_t>(h.channels);
  std::vector<float> samples(count);
  for (std::size_t file_row = 0; file_row < h.height; ++file_row) {
    const std::size_t image_row = h.height - 1 - file_row;
    for (std::size_t k = 0; k < row_len; ++k) {
      const std::size_t off = h.payload_offset + (file_row * row_len + k) * 4;
      const float v = read_float(bytes.data() + off, h.little_endian);
      if (!std::isfinite(v)) throw FormatError("PFM: non-finite sample", off);
      samples[image_row * row_len + k] = v;
    }
  }
  return samples;
}

std::vector<std::uint8_t> pfm_header_bytes(char kind, std::size_t w, std::size_t h) {
  const std::string header = std::string("P") + kind + "\n" + std::to_string(w) + " " +
                             std::to_string(h) + "\n-1.0\n";
  return {header.begin(), header.end()};
}

}  // namespace

DepthMap decode_pfm_depth(std::span<const std::uint8_t> bytes) {
  const PfmHeader h = parse_pfm_header(bytes);
  if (h.channels != 1) throw FormatError("PFM: expected single-channel 'Pf' depth map", 0);
  const std::vector<float> samples = read_pfm_samples(bytes, h);
  return DepthMap(Grid<double>(h.width, h.height, std::vector<double>(samples.begin(), samples.end())));
}

std::vector<std::uint8_t> encode_pfm_depth(const DepthMap& map) {
  std::vector<std::uint8_t> out = pfm_header_bytes('f', map.width(), map.height());
  out.reserve(out.size() + map.size() * 4);
  for (std::size_t file_row = 0; file_row < map.height(); ++file_row) {
    const std::size_t y = map.height() - 1 - file_row;
    for (std::size_t x = 0; x < map.width(); ++x) {
      const double v = map(x, y);
      append_float_le(out, std::isfinite(v) ? static_cast<float>(v) : 0.0f);
    }
  }
  return out;
}

NormalMap load_normals(const fs::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  const PfmHeader h = parse_pfm_header(bytes);
  if (h.channels != 3) throw FormatError("PFM: expected three-channel 'PF' normal map", 0);
  const std::vector<float> samples = read_pfm_samples(bytes, h);
  Grid<Vec3> vectors(h.width, h.height);
  for (std::size_t i = 0; i < vectors.size(); ++i)
    vectors[i] = {samples[3 * i], samples[3 * i + 1], samples[3 * i + 2]};
  return NormalMap::normalized(std::move(vectors));
}

void save_normals(const NormalMap& normals, const fs::path& path) {
  std::vector<std::uint8_t> out = pfm_header_bytes('F', normals.width(), normals.height());
  out.reserve(out.size() + normals.width() * normals.height() * 12);
  for (std::size_t file_row = 0; file_row < normals.height(); ++file_row) {
    const std::size_t y = normals.height() - 1 - file_row;
    for (std::size_t x = 0; x < normals.width(); ++x) {
      const Vec3& n = normals(x, y);
      append_float_le(out, static_cast<float>(n.x));
      append_float_le(out, static_cast<float>(n.y));
      append_float_le(out, static_cast<float>(n.z));
    }
  }
  write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// PNG via libpng. Error handling uses setjmp; every object that must survive
// the longjmp lives inside the state structs, reached through a pointer.

namespace {

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
  std::string message;
  std::size_t width = 0;
  std::size_t height = 0;
  int bit_depth = 0;
  int channels = 0;
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
};

struct PngWriteState {
  std::vector<std::uint8_t> out;
  std::string message;
};

[[noreturn]] void png_read_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngReadState*>(png_get_error_ptr(png));
  st->message = msg;
  png_longjmp(png, 1);
}

[[noreturn]] void png_write_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngWriteState*>(png_get_error_ptr(png));
  st->message = msg;
  png_longjmp(png, 1);
}

void png_quiet_warning(png_structp, png_const_charp) {}

void png_read_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->bytes.size() - st->pos < length) {
    st->pos = st->bytes.size();
    png_error(png, "unexpected end of file");
  }
  std::memcpy(data, st->bytes.data() + st->pos, length);
  st->pos += length;
}

void png_write_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* st = static_cast<PngWriteState*>(png_get_io_ptr(png));
  st->out.insert(st->out.end(), data, data + length);
}

void png_flush_noop(png_structp) {}

/// Decodes gray or RGB PNGs without palette/alpha expansion tricks; 16-bit
/// samples are left big-endian in `raw`.
void decode_png(PngReadState& st) {
  if (st.bytes.size() < 8 || png_sig_cmp(st.bytes.data(), 0, 8) != 0)
    throw FormatError("PNG: bad signature", 0);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &st, png_read_error, png_quiet_warning);
  if (!png) throw IoError("PNG: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("PNG: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("PNG: " + st.message, st.pos);
  }
  png_set_read_fn(png, &st, png_read_bytes);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  st.width = w;
  st.height = h;
  st.bit_depth = png_get_bit_depth(png, info);
  st.channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  st.raw.resize(rowbytes * h);
  st.rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) st.rows[y] = st.raw.data() + y * rowbytes;
  png_read_image(png, st.rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
}

std::vector<std::uint8_t> encode_png(std::size_t width, std::size_t height, int channels,
                                     int bit_depth, std::span<const std::uint8_t> raw) {
  PngWriteState st;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &st, png_write_error, png_quiet_warning);
  if (!png) throw IoError("PNG: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("PNG: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed: " + st.message);
  }
  png_set_write_fn(png, &st, png_write_bytes, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t rowbytes = width * static_cast<std::size_t>(channels) * (bit_depth / 8);
  for (std::size_t y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(raw.data() + y * rowbytes));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return std::move(st.out);
}

}  // namespace

DepthMap decode_png16_depth(std::span<const std::uint8_t> bytes, const Png16Sidecar& sidecar) {
  PngReadState st;
  st.bytes = bytes;
  decode_png(st);
  if (st.bit_depth != 16 || st.channels != 1)
    throw FormatError("PNG: expected 16-bit grayscale depth", 0);
  if (st.width < 2 || st.height < 2) throw FormatError("PNG: dimensions must be at least 2", 16);
  Grid<double> values(st.width, st.height);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const unsigned code = unsigned(st.raw[2 * i]) << 8 | unsigned(st.raw[2 * i + 1]);
    values[i] = code * sidecar.scale + sidecar.offset;
  }
  return DepthMap(std::move(values));
}

std::vector<std::uint8_t> encode_png16_depth(const DepthMap& map, Png16Sidecar& sidecar_out) {
  const double lo = map.min_value();
  const double span = map.thickness();
  sidecar_out.offset = lo;
  sidecar_out.scale = span > 0.0 ? span / 65535.0 : 1.0;
  std::vector<std::uint8_t> raw(map.size() * 2, 0);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!map.valid(i)) continue;
    const double code = std::round((map.values()[i] - lo) / sidecar_out.scale);
    const auto c = static_cast<unsigned>(std::clamp(code, 0.0, 65535.0));
    raw[2 * i] = static_cast<std::uint8_t>(c >> 8);
    raw[2 * i + 1] = static_cast<std::uint8_t>(c & 0xff);
  }
  return encode_png(map.width(), map.height(), 1, 16, raw);
}

DepthMap load_depth(const fs::path& path, DepthFormat format) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (format == DepthFormat::pfm) return decode_pfm_depth(bytes);

  Png16Sidecar sidecar;
  const fs::path meta = sidecar_path(path);
  if (fs::exists(meta)) {
    const std::vector<std::uint8_t> text = read_file(meta);
    try {
      const auto j = nlohmann::json::parse(text.begin(), text.end());
      sidecar.scale = j.value("scale", 1.0);
      sidecar.offset = j.value("offset", 0.0);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("PNG16 sidecar " + meta.string() + ": " + e.what(), 0);
    }
    if (!(sidecar.scale > 0.0) || !std::isfinite(sidecar.offset))
      throw FormatError("PNG16 sidecar " + meta.string() + ": scale must be positive", 0);
  }
  return decode_png16_depth(bytes, sidecar);
}

DepthMap load_depth(const fs::path& path) { return load_depth(path, depth_format_from_path(path)); }

void save_depth(const DepthMap& map, const fs::path& path, DepthFormat format) {
  if (format == DepthFormat::pfm) {
    write_file_atomic(path, encode_pfm_depth(map));
    return;
  }
  Png16Sidecar sidecar;
  const std::vector<std::uint8_t> png = encode_png16_depth(map, sidecar);
  const nlohmann::json meta = {{"scale", sidecar.scale}, {"offset", sidecar.offset}};
  const std::string text = meta.dump(2) + "\n";
  write_file_atomic(sidecar_path(path), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  write_file_atomic(path, png);
}

void save_depth(const DepthMap& map, const fs::path& path) {
  save_depth(map, path, depth_format_from_path(path));
}

Mask load_mask(const fs::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  const Image8 img = decode_png8(bytes);
  Mask mask(img.width, img.height);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = img.pixels[i * static_cast<std::size_t>(img.channels)] != 0 ? 1 : 0;
  return mask;
}

std::vector<std::uint8_t> encode_png8(const Image8& image) {
  if (image.channels != 1 && image.channels != 3)
    throw IoError("PNG8: only gray and RGB images are supported");
  return encode_png(image.width, image.height, image.channels, 8, image.pixels);
}

Image8 decode_png8(std::span<const std::uint8_t> bytes) {
  PngReadState st;
  st.bytes = bytes;
  decode_png(st);
  if (st.bit_depth != 8) throw FormatError("PNG: expected 8-bit samples", 0);
  return Image8{st.width, st.height, st.channels, std::move(st.raw)};
}

void save_png8(const Image8& image, const fs::path& path) {
  write_file_atomic(path, encode_png8(image));
}

DepthVisualization viz_depth(const DepthMap& map) {
  DepthVisualization viz{Grid<std::uint8_t>(map.width(), map.height(), 0), false};
  const double lo = map.min_value();
  const double span = map.thickness();
  if (!(span > 0.0)) {
    viz.degenerate = true;
    return viz;
  }
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!map.valid(i)) continue;
    const double v = (map.values()[i] - lo) / span * 255.0;
    viz.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
  }
  return viz;
}

Image8 viz_normals(const NormalMap& normals) {
  const EncodedNormalMap enc = encode_normals(normals);
  Image8 img{normals.width(), normals.height(), 3, {}};
  img.pixels.resize(normals.width() * normals.height() * 3);
  for (std::size_t i = 0; i < normals.width() * normals.height(); ++i) {
    const Vec3& c = enc[i];
    img.pixels[3 * i] = static_cast<std::uint8_t>(std::round(c.x * 255.0));
    img.pixels[3 * i + 1] = static_cast<std::uint8_t>(std::round(c.y * 255.0));
    img.pixels[3 * i + 2] = static_cast<std::uint8_t>(std::round(c.z * 255.0));
  }
  return img;
}

}  // namespace relief
