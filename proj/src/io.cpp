#include "psim/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace psim::io {

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

void put_le_float(std::string& out, float f) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
  if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
  char buf[4];
  std::memcpy(buf, &bits, 4);
  out.append(buf, 4);
}

float get_float(const char* p, bool little) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  const bool native_little = std::endian::native == std::endian::little;
  if (little != native_little) bits = byteswap32(bits);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::string encode_pfm(const Image& image) {
  if (!all_finite(image)) throw IoError("refusing to write non-finite values to PFM");
  std::string out = "Pf\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n-1.0\n";
  out.reserve(out.size() + 4 * static_cast<std::size_t>(image.size()));
  for (Eigen::Index r = image.rows() - 1; r >= 0; --r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) put_le_float(out, static_cast<float>(image(r, c)));
  }
  return out;
}

Image decode_pfm(std::string_view bytes, const std::string& origin) {
  // Header: three whitespace-separated tokens after the magic, then one
  // whitespace byte before the raster.
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.substr(start, pos - start));
  };
  const std::string magic = next_token();
  if (magic != "Pf") throw IoError(origin + ": not a grayscale PFM (magic '" + magic + "')");
  long width = 0, height = 0;
  double scale = 0;
  try {
    width = std::stol(next_token());
    height = std::stol(next_token());
    scale = std::stod(next_token());
  } catch (const std::exception&) {
    throw IoError(origin + ": malformed PFM header");
  }
  ++pos;
  if (width < 1 || height < 1 || scale == 0.0) throw IoError(origin + ": invalid PFM dimensions or scale");
  const std::size_t needed = 4 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < pos + needed) throw IoError(origin + ": truncated PFM raster");
  const bool little = scale < 0;
  Image img(height, width);
  const char* p = bytes.data() + pos;
  for (long r = height - 1; r >= 0; --r) {
    for (long c = 0; c < width; ++c, p += 4) img(r, c) = get_float(p, little);
  }
  if (!all_finite(img)) throw IoError(origin + ": PFM contains non-finite values");
  return img;
}

void write_pfm(const fs::path& path, const Image& image) { write_file_atomic(path, encode_pfm(image)); }

Image read_pfm(const fs::path& path) { return decode_pfm(read_file(path), path.string()); }

fs::path sidecar_path(const fs::path& pfm_path) {
  fs::path p = pfm_path;
  p.replace_extension(".json");
  return p;
}

nlohmann::json to_json(const Sidecar& s) {
  nlohmann::json j = s.extra;
  j["role"] = s.role;
  j["units"] = s.units;
  j["wrapped"] = s.wrapped;
  j["provenance"] = s.provenance;
  return j;
}

Sidecar sidecar_from_json(const nlohmann::json& j) {
  Sidecar s;
  s.role = j.value("role", "");
  s.units = j.value("units", "");
  s.wrapped = j.value("wrapped", false);
  if (j.contains("provenance")) s.provenance = j["provenance"];
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "role" && it.key() != "units" && it.key() != "wrapped" && it.key() != "provenance") {
      s.extra[it.key()] = it.value();
    }
  }
  return s;
}

void write_image(const fs::path& pfm_path, const Image& image, const Sidecar& sidecar) {
  write_pfm(pfm_path, image);
  write_json(sidecar_path(pfm_path), to_json(sidecar));
}

Sidecar read_sidecar(const fs::path& pfm_path) { return sidecar_from_json(read_json(sidecar_path(pfm_path))); }

std::string profile_csv(const Profile& profile) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "pixel_index,value\n";
  std::size_t next = 0;
  for (std::size_t i = 0; i < profile.values.size(); ++i) {
    if (next < profile.boundaries.size() && profile.boundaries[next] == i) {
      os << "# segment=" << next + 2 << "\n";
      ++next;
    }
    os << i << "," << profile.values[i] << "\n";
  }
  return os.str();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string sha256_hex(std::string_view bytes) {
  return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

}  // namespace psim::io
