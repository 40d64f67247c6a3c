// SPDX-License-Identifier: Apache-2.0

#include "circuits/common.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <numbers>

namespace circuits {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("malformed feature id '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

std::string FeatureId::str() const {
  std::string out;
  if (model != 0) out += "M" + std::to_string(model) + ":";
  out += "L" + std::to_string(layer) + "_F" + std::to_string(index);
  return out;
}

FeatureId FeatureId::parse(std::string_view text) {
  FeatureId id;
  std::string_view rest = text;
  if (!rest.empty() && rest.front() == 'M') {
    auto colon = rest.find(':');
    if (colon == std::string_view::npos) throw FormatError("malformed feature id '" + std::string(text) + "'");
    id.model = parse_int(rest.substr(1, colon - 1), text);
    rest.remove_prefix(colon + 1);
  }
  auto sep = rest.find("_F");
  if (rest.size() < 4 || rest.front() != 'L' || sep == std::string_view::npos) {
    throw FormatError("malformed feature id '" + std::string(text) + "'");
  }
  id.layer = parse_int(rest.substr(1, sep - 1), text);
  id.index = parse_int(rest.substr(sep + 2), text);
  return id;
}

bool all_finite(std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ContractError("Rng::below(0)");
  // Lemire's nearly-divisionless rejection.
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const std::uint64_t x = engine_();
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
  }
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  // splitmix64 finaliser over the combined words.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void Fingerprint::bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    hash_ ^= p[i];
    hash_ *= 0x100000001b3ULL;
  }
}

Fingerprint& Fingerprint::add(std::string_view text) {
  const std::int64_t n = static_cast<std::int64_t>(text.size());
  bytes(&n, sizeof n);
  bytes(text.data(), text.size());
  return *this;
}

Fingerprint& Fingerprint::add(std::span<const float> values) {
  const std::int64_t n = static_cast<std::int64_t>(values.size());
  bytes(&n, sizeof n);
  bytes(values.data(), values.size_bytes());
  return *this;
}

Fingerprint& Fingerprint::add(std::int64_t value) {
  bytes(&value, sizeof value);
  return *this;
}

Fingerprint& Fingerprint::add(double value) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof bits);
  bytes(&bits, sizeof bits);
  return *this;
}

std::string Fingerprint::hex() const { return to_hex(hash_); }

std::string Fingerprint::to_hex(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace circuits
