// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "cpsim/crypto.hpp"
#include "cpsim/rng.hpp"

namespace cpsim {

// The two statement families: correct encryption of the update file, and
// correct encryption of the full distribution package. They share one
// structure and differ only in the size of the secret payload.
enum class StatementKind : std::uint8_t {
  UpdateEncryption = 1,
  PackageEncryption = 2,
};

struct StatementShape {
  StatementKind kind;
  std::uint64_t payload_size;  // octet count of the secret file variable

  bool operator==(const StatementShape&) const = default;
};

// Opaque token tying a proving/verifying key pair to one setup invocation.
struct SetupId {
  std::array<std::uint8_t, 16> bytes{};

  auto operator<=>(const SetupId&) const = default;

  static SetupId random(RandomSource& rng) { return SetupId{rng.array<16>()}; }
  static std::optional<SetupId> from_bytes(ByteView b) {
    if (b.size() != 16) return std::nullopt;
    SetupId id;
    std::copy(b.begin(), b.end(), id.bytes.begin());
    return id;
  }
};

namespace detail {
inline Bytes zk_key_bytes(std::uint8_t role, const StatementShape& shape, const SetupId& id) {
  Bytes out;
  out.push_back(role);
  out.push_back(static_cast<std::uint8_t>(shape.kind));
  append_u64be(out, shape.payload_size);
  append(out, id.bytes);
  return out;
}

template <typename Key>
std::optional<Key> zk_key_from_bytes(std::uint8_t role, ByteView b) {
  if (b.size() != 2 + 8 + 16 || b[0] != role) return std::nullopt;
  if (b[1] != 1 && b[1] != 2) return std::nullopt;
  Key k;
  k.shape.kind = static_cast<StatementKind>(b[1]);
  k.shape.payload_size = 0;
  for (int i = 0; i < 8; ++i) k.shape.payload_size = (k.shape.payload_size << 8) | b[2 + i];
  std::copy(b.begin() + 10, b.end(), k.id.bytes.begin());
  return k;
}
}  // namespace detail

struct ProvingKey {
  StatementShape shape;
  SetupId id;

  bool operator==(const ProvingKey&) const = default;
  Bytes to_bytes() const { return detail::zk_key_bytes(0x70, shape, id); }
  static std::optional<ProvingKey> from_bytes(ByteView b) {
    return detail::zk_key_from_bytes<ProvingKey>(0x70, b);
  }
};

struct VerifyingKey {
  StatementShape shape;
  SetupId id;

  bool operator==(const VerifyingKey&) const = default;
  Bytes to_bytes() const { return detail::zk_key_bytes(0x76, shape, id); }
  static std::optional<VerifyingKey> from_bytes(ByteView b) {
    return detail::zk_key_from_bytes<VerifyingKey>(0x76, b);
  }
};

// The non-secret statement values: (file hash, ciphertext, key hash).
struct PublicInputs {
  Digest file_hash;
  Ciphertext ciphertext;
  Digest key_hash;

  bool operator==(const PublicInputs&) const = default;

  Digest digest() const {
    return hash(encode_parts({to_bytes(file_hash.bytes), ciphertext.bytes,
                              to_bytes(key_hash.bytes)}));
  }
};

// The secret pair (file, key). Deliberately has no serialized form: witness
// material must never enter a message, a proof, or a trace.
struct Witness {
  Bytes file;
  SymKey key;
};

// Opaque proof token binding (setup id, public inputs). Carries no witness
// octets; the mint tag makes tokens unmintable outside ZkSystem::prove.
struct Proof {
  SetupId setup_id;
  Digest public_digest;
  Digest mint_tag;

  bool operator==(const Proof&) const = default;

  Bytes to_bytes() const {
    return encode_parts({cpsim::to_bytes(setup_id.bytes), cpsim::to_bytes(public_digest.bytes),
                         cpsim::to_bytes(mint_tag.bytes)});
  }
  static std::optional<Proof> from_bytes(ByteView b) {
    auto parts = decode_parts(b);
    if (!parts || parts->size() != 3) return std::nullopt;
    auto id = SetupId::from_bytes((*parts)[0]);
    auto pd = Digest::from_bytes((*parts)[1]);
    auto mt = Digest::from_bytes((*parts)[2]);
    if (!id || !pd || !mt) return std::nullopt;
    return Proof{*id, *pd, *mt};
  }
};

// The statement relation itself, evaluated directly with the byte-level
// primitives: s = H(r), file_hash = H(file), ciphertext = Enc(file, r).
// Doubles as the oracle the prove/verify pair is tested against.
inline bool relation_holds(const StatementShape& shape, const PublicInputs& pub,
                           const Witness& wit) {
  if (wit.file.size() != shape.payload_size) return false;
  if (hash(to_bytes(wit.key.bytes)) != pub.key_hash) return false;
  if (hash(wit.file) != pub.file_hash) return false;
  return sym_encrypt(wit.file, wit.key) == pub.ciphertext;
}

// Symbolic Setup/Prove/Verify triple. Proof minting is gated by a per-run
// secret held here and never serialized into any message, which is the
// mechanical form of "the adversary can replay proofs but not mint them".
class ZkSystem {
 public:
  explicit ZkSystem(RandomSource& rng) : mint_key_(SymKey::random(rng)) {}

  std::pair<ProvingKey, VerifyingKey> setup(const StatementShape& shape, RandomSource& rng) {
    SetupId id = SetupId::random(rng);
    return {ProvingKey{shape, id}, VerifyingKey{shape, id}};
  }

  // nullopt == the witness does not satisfy the statement; an honest prover
  // cannot produce a proof of a false statement.
  std::optional<Proof> prove(const ProvingKey& pk, const PublicInputs& pub,
                             const Witness& wit) const {
    if (!relation_holds(pk.shape, pub, wit)) return std::nullopt;
    Proof p;
    p.setup_id = pk.id;
    p.public_digest = pub.digest();
    p.mint_tag = mint(pk.id, p.public_digest);
    return p;
  }

  bool verify(const VerifyingKey& vk, const PublicInputs& pub, const Proof& proof) const {
    return proof.setup_id == vk.id && proof.public_digest == pub.digest() &&
           proof.mint_tag == mint(vk.id, proof.public_digest);
  }

 private:
  Digest mint(const SetupId& id, const Digest& public_digest) const {
    return hmac(mint_key_, encode_parts({to_bytes(id.bytes), to_bytes(public_digest.bytes)}));
  }

  SymKey mint_key_;
};

}  // namespace cpsim
