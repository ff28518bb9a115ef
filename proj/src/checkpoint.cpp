#include "psim/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "psim/error.hpp"
#include "psim/io.hpp"

namespace psim {

namespace {

std::string blob_bytes(std::span<const double> blob) {
  std::string out(blob.size() * 8, '\0');
  for (std::size_t i = 0; i < blob.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(blob[i]);
    for (int b = 0; b < 8; ++b) out[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  return out;
}

}  // namespace

std::string encode_container(nlohmann::json header, std::span<const double> blob) {
  const std::string raw = blob_bytes(blob);
  header["blob"] = {{"doubles", blob.size()}, {"sha256", io::sha256_hex(raw)}};
  return header.dump() + "\n" + raw;
}

Container decode_container(std::string_view bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string_view::npos) throw IntegrityError("checkpoint: missing header line");
  Container c;
  try {
    c.header = nlohmann::json::parse(bytes.substr(0, newline));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint: unreadable header: ") + e.what());
  }
  if (!c.header.contains("blob")) throw IntegrityError("checkpoint: header lacks blob record");
  const std::string_view raw = bytes.substr(newline + 1);
  const auto expected = c.header["blob"].value("doubles", std::size_t{0});
  if (raw.size() != expected * 8) {
    throw IntegrityError("checkpoint: blob holds " + std::to_string(raw.size()) + " bytes, header promises " +
                         std::to_string(expected * 8));
  }
  if (io::sha256_hex(raw) != c.header["blob"].value("sha256", std::string())) {
    throw IntegrityError("checkpoint: blob SHA-256 does not match header");
  }
  c.blob.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i * 8 + static_cast<std::size_t>(b)])) << (8 * b);
    }
    c.blob[i] = std::bit_cast<double>(bits);
  }
  return c;
}

}  // namespace psim
