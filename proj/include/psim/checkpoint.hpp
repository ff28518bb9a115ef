#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace psim {

/// Container format: one line of compact JSON, '\n', then a raw little-endian
/// float64 blob. The header gains "blob": {"doubles": n, "sha256": hex}.
std::string encode_container(nlohmann::json header, std::span<const double> blob);

struct Container {
  nlohmann::json header;
  std::vector<double> blob;
};

/// Throws IntegrityError on a digest or length mismatch.
Container decode_container(std::string_view bytes);

}  // namespace psim
