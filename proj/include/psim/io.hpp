#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "psim/image.hpp"
#include "psim/metrics.hpp"

namespace psim::io {

namespace fs = std::filesystem;

/// Grayscale PFM ("Pf"), little-endian float32, bottom-up scanlines.
void write_pfm(const fs::path& path, const Image& image);
Image read_pfm(const fs::path& path);

/// Encoded PFM bytes, as written by write_pfm.
std::string encode_pfm(const Image& image);
Image decode_pfm(std::string_view bytes, const std::string& origin = "<memory>");

/// frame_1.pfm -> frame_1.json
fs::path sidecar_path(const fs::path& pfm_path);

struct Sidecar {
  std::string role;
  std::string units;
  bool wrapped = false;
  nlohmann::json provenance = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();  // lambda0, shift, ...
};

nlohmann::json to_json(const Sidecar& s);
Sidecar sidecar_from_json(const nlohmann::json& j);

void write_image(const fs::path& pfm_path, const Image& image, const Sidecar& sidecar);
Sidecar read_sidecar(const fs::path& pfm_path);

/// Profile as "pixel_index,value" rows with "# segment=k" before each boundary.
std::string profile_csv(const Profile& profile);

std::string read_file(const fs::path& path);
/// Writes to a temporary sibling then renames over the target.
void write_file_atomic(const fs::path& path, std::string_view bytes);
void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

}  // namespace psim::io
