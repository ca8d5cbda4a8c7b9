// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "cpsim/crypto.hpp"
#include "cpsim/trace.hpp"

namespace cpsim {

using Amount = std::uint64_t;

// Account or contract identifier. External accounts are addressed by their
// 32-octet public key; contract addresses are hashes of their creation
// coordinates.
struct Address {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Address&) const = default;

  std::string hex() const { return to_hex(bytes); }
  std::string short_hex() const { return hex().substr(0, 8); }
  Bytes to_bytes() const { return cpsim::to_bytes(bytes); }

  static std::optional<Address> from_public_key(ByteView pub) {
    if (pub.size() != 32) return std::nullopt;
    Address a;
    std::copy(pub.begin(), pub.end(), a.bytes.begin());
    return a;
  }

  static Address for_contract(std::string_view kind_tag, const Address& creator, Height height,
                              std::uint64_t seq) {
    Digest d = hash(encode_parts({cpsim::to_bytes(std::string_view(kind_tag)), creator.to_bytes(),
                                  u64_bytes(height), u64_bytes(seq)}));
    return Address{d.bytes};
  }
};

inline Bytes to_bytes(const Address& a) { return a.to_bytes(); }

// (s, r) record appended by a contract once the key equations and the
// authorizing signature have been checked.
struct PublishedKey {
  Digest key_hash;  // s
  SymKey key;       // r, with hash(r) == s
  Height published_at = 0;
};

using BalanceMap = std::map<Address, Amount>;

inline Amount total_supply(const BalanceMap& balances) {
  Amount sum = 0;
  for (const auto& [addr, bal] : balances) sum += bal;
  return sum;
}

}  // namespace cpsim
