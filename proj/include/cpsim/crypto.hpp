// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <sodium.h>

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpsim/bytes.hpp"
#include "cpsim/rng.hpp"

namespace cpsim {

inline void crypto_init() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}

inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kSymKeySize = 32;
inline constexpr std::size_t kNonceSize = 16;
inline constexpr std::size_t kSignatureSize = 64;

// 32-octet hash output; equality is bytewise.
struct Digest {
  std::array<std::uint8_t, kDigestSize> bytes{};

  auto operator<=>(const Digest&) const = default;
  std::string hex() const { return to_hex(bytes); }
  std::string short_hex() const { return hex().substr(0, 8); }

  static std::optional<Digest> from_bytes(ByteView b) {
    if (b.size() != kDigestSize) return std::nullopt;
    Digest d;
    std::copy(b.begin(), b.end(), d.bytes.begin());
    return d;
  }
};

// 256-bit symmetric key material. Also holds the derived key-commitment
// values t and r, which are hash-width by construction.
struct SymKey {
  std::array<std::uint8_t, kSymKeySize> bytes{};

  auto operator<=>(const SymKey&) const = default;

  static SymKey random(RandomSource& rng) { return SymKey{rng.array<kSymKeySize>()}; }
  static SymKey from_digest(const Digest& d) { return SymKey{d.bytes}; }
  static std::optional<SymKey> from_bytes(ByteView b) {
    if (b.size() != kSymKeySize) return std::nullopt;
    SymKey k;
    std::copy(b.begin(), b.end(), k.bytes.begin());
    return k;
  }
};

// 16-octet freshness value, drawn from the run's seeded randomness.
struct Nonce {
  std::array<std::uint8_t, kNonceSize> bytes{};

  auto operator<=>(const Nonce&) const = default;

  static Nonce fresh(RandomSource& rng) { return Nonce{rng.array<kNonceSize>()}; }
  static std::optional<Nonce> from_bytes(ByteView b) {
    if (b.size() != kNonceSize) return std::nullopt;
    Nonce n;
    std::copy(b.begin(), b.end(), n.bytes.begin());
    return n;
  }
};

inline Digest hash(ByteView data) {
  crypto_init();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

inline Digest hmac(const SymKey& key, ByteView data) {
  crypto_init();
  Digest d;
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.bytes.data(), key.bytes.size());
  crypto_auth_hmacsha256_update(&st, data.data(), data.size());
  crypto_auth_hmacsha256_final(&st, d.bytes.data());
  return d;
}

// Domain-separation tag mixed into every canonical encoding. A signature
// over one context can never verify under another because the tag octet is
// part of the signed bytes.
enum class SigContext : std::uint8_t {
  Manufacturer = 1,      // manufacturer's endorsement of an update hash
  IdResponse = 2,        // device response to an identification challenge
  Pod = 3,               // proof-of-delivery
  Pofd = 4,              // proof-of-final-delivery
  DistributorNonce = 5,  // distributor's reply to a hub's fresh nonce
  DdeChallenge = 6,      // buyer identification in a distributor exchange
  KeyCommitDelivery = 7,  // derivation of r from (t, device, distributor)
  KeyCommitDde = 8,       // derivation of r from (t, seller)
};

inline const char* to_string(SigContext c) {
  switch (c) {
    case SigContext::Manufacturer: return "Manufacturer";
    case SigContext::IdResponse: return "IdResponse";
    case SigContext::Pod: return "PoD";
    case SigContext::Pofd: return "PoFD";
    case SigContext::DistributorNonce: return "DistributorNonce";
    case SigContext::DdeChallenge: return "DdeChallenge";
    case SigContext::KeyCommitDelivery: return "KeyCommitDelivery";
    case SigContext::KeyCommitDde: return "KeyCommitDde";
  }
  return "?";
}

// Injective multi-part framing: each part is length-prefixed, so distinct
// part sequences never encode to the same octet string.
inline Bytes encode_parts(const std::vector<Bytes>& parts) {
  Bytes out;
  for (const Bytes& p : parts) {
    append_u32be(out, static_cast<std::uint32_t>(p.size()));
    append(out, p);
  }
  return out;
}

inline std::optional<std::vector<Bytes>> decode_parts(ByteView data) {
  std::vector<Bytes> parts;
  std::size_t pos = 0;
  while (pos < data.size()) {
    if (data.size() - pos < 4) return std::nullopt;
    std::uint32_t len = (std::uint32_t(data[pos]) << 24) | (std::uint32_t(data[pos + 1]) << 16) |
                        (std::uint32_t(data[pos + 2]) << 8) | std::uint32_t(data[pos + 3]);
    pos += 4;
    if (data.size() - pos < len) return std::nullopt;
    parts.emplace_back(data.begin() + pos, data.begin() + pos + len);
    pos += len;
  }
  return parts;
}

// An ordered, context-tagged part sequence; the unit everything is signed
// and hashed over.
struct CanonicalMessage {
  SigContext context;
  std::vector<Bytes> parts;

  bool operator==(const CanonicalMessage&) const = default;
};

inline Bytes canonical_encode(SigContext context, const std::vector<Bytes>& parts) {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(context));
  append(out, encode_parts(parts));
  return out;
}

inline Bytes canonical_encode(const CanonicalMessage& msg) {
  return canonical_encode(msg.context, msg.parts);
}

inline std::optional<CanonicalMessage> canonical_decode(ByteView data) {
  if (data.empty()) return std::nullopt;
  auto tag = data[0];
  if (tag < 1 || tag > 8) return std::nullopt;
  auto parts = decode_parts(data.subspan(1));
  if (!parts) return std::nullopt;
  return CanonicalMessage{static_cast<SigContext>(tag), std::move(*parts)};
}

inline Digest hash_canonical(SigContext context, const std::vector<Bytes>& parts) {
  return hash(canonical_encode(context, parts));
}

// Ed25519 key pair. Generation is driven by the run's randomness source so
// that whole simulations replay deterministically.
struct KeyPair {
  Bytes public_key;   // 32 octets
  Bytes private_key;  // 64 octets (seed || public)

  static KeyPair generate(RandomSource& rng) {
    crypto_init();
    auto seed = rng.array<crypto_sign_SEEDBYTES>();
    KeyPair kp;
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.private_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.private_key.data(), seed.data());
    return kp;
  }
};

// Detached signature plus the context the signer claims. Verification binds
// the context through the signed bytes, not through this field.
struct Signature {
  Bytes bytes;
  SigContext context = SigContext::Manufacturer;

  bool operator==(const Signature&) const = default;

  Bytes to_bytes() const {
    Bytes out;
    out.push_back(static_cast<std::uint8_t>(context));
    append(out, bytes);
    return out;
  }
  static std::optional<Signature> from_bytes(ByteView b) {
    if (b.size() != kSignatureSize + 1 || b[0] < 1 || b[0] > 8) return std::nullopt;
    Signature s;
    s.context = static_cast<SigContext>(b[0]);
    s.bytes.assign(b.begin() + 1, b.end());
    return s;
  }
};

inline Signature sign_raw(ByteView private_key, ByteView msg, SigContext claimed) {
  crypto_init();
  Signature sig;
  sig.context = claimed;
  sig.bytes.resize(crypto_sign_BYTES);
  crypto_sign_detached(sig.bytes.data(), nullptr, msg.data(), msg.size(), private_key.data());
  return sig;
}

inline bool verify_raw(ByteView public_key, ByteView msg, const Signature& sig) {
  crypto_init();
  if (sig.bytes.size() != crypto_sign_BYTES || public_key.size() != crypto_sign_PUBLICKEYBYTES)
    return false;
  return crypto_sign_verify_detached(sig.bytes.data(), msg.data(), msg.size(),
                                     public_key.data()) == 0;
}

inline Signature sign(ByteView private_key, const CanonicalMessage& msg) {
  return sign_raw(private_key, canonical_encode(msg), msg.context);
}

inline bool verify_sig(ByteView public_key, const CanonicalMessage& msg, const Signature& sig) {
  return verify_raw(public_key, canonical_encode(msg), sig);
}

// Authenticated ciphertext: 24-octet nonce || secretbox payload.
struct Ciphertext {
  Bytes bytes;

  bool operator==(const Ciphertext&) const = default;
};

// Deterministic authenticated encryption: the nonce is synthesized from the
// key and plaintext, so equal (m, k) always yields equal ciphertext and the
// encryption equation can be checked by re-encryption.
inline Ciphertext sym_encrypt(ByteView plaintext, const SymKey& key) {
  crypto_init();
  const Digest synth = hmac(key, plaintext);
  Ciphertext ct;
  ct.bytes.resize(crypto_secretbox_NONCEBYTES + plaintext.size() + crypto_secretbox_MACBYTES);
  std::copy(synth.bytes.begin(), synth.bytes.begin() + crypto_secretbox_NONCEBYTES,
            ct.bytes.begin());
  crypto_secretbox_easy(ct.bytes.data() + crypto_secretbox_NONCEBYTES, plaintext.data(),
                        plaintext.size(), ct.bytes.data(), key.bytes.data());
  return ct;
}

// nullopt == authentication failure (wrong key or tampered ciphertext)
inline std::optional<Bytes> sym_decrypt(const Ciphertext& ct, const SymKey& key) {
  crypto_init();
  if (ct.bytes.size() < crypto_secretbox_NONCEBYTES + crypto_secretbox_MACBYTES)
    return std::nullopt;
  Bytes out(ct.bytes.size() - crypto_secretbox_NONCEBYTES - crypto_secretbox_MACBYTES);
  if (crypto_secretbox_open_easy(out.data(), ct.bytes.data() + crypto_secretbox_NONCEBYTES,
                                 ct.bytes.size() - crypto_secretbox_NONCEBYTES, ct.bytes.data(),
                                 key.bytes.data()) != 0)
    return std::nullopt;
  return out;
}

}  // namespace cpsim
