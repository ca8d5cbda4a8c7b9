// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <optional>
#include <string>

#include "cpsim/crypto.hpp"
#include "cpsim/zk.hpp"

namespace cpsim {

// Every P2P payload in the protocol. Field layouts below are the wire
// contract; payload bytes are the injective multi-part encoding of the
// struct fields in declaration order.
enum class MsgKind : std::uint8_t {
  UpdateRequest = 1,         // hub -> distributor: (update hash, fresh nonce)
  DistributorHello = 2,      // distributor -> hub: (pub, sig over nonce, challenge)
  IdChallenge = 3,           // hub -> device: challenge forwarded
  IdResponse = 4,            // device -> hub -> distributor: (pub, nonce2, sig)
  ZkProofDelivery = 5,       // distributor -> hub: (proof, ciphertext, s, vk, mfr sig)
  UpdateCommit = 6,          // hub -> device: (update hash, mfr sig, s)
  PodForward = 7,            // device -> hub -> distributor: proof-of-delivery
  FinalDelivery = 8,         // hub -> device: the update file itself
  PofdForward = 9,           // device -> hub: proof-of-final-delivery
  DdeRequest = 10,           // buyer -> seller: (package hash)
  DdeChallenge = 11,         // seller -> buyer: challenge
  DdeChallengeResponse = 12, // buyer -> seller: (pub, sig over challenge)
  DdeProofDelivery = 13,     // seller -> buyer: (proof, ciphertext, s, vk, pk)
};

inline const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::UpdateRequest: return "UpdateRequest";
    case MsgKind::DistributorHello: return "DistributorHello";
    case MsgKind::IdChallenge: return "IdChallenge";
    case MsgKind::IdResponse: return "IdResponse";
    case MsgKind::ZkProofDelivery: return "ZkProofDelivery";
    case MsgKind::UpdateCommit: return "UpdateCommit";
    case MsgKind::PodForward: return "PodForward";
    case MsgKind::FinalDelivery: return "FinalDelivery";
    case MsgKind::PofdForward: return "PofdForward";
    case MsgKind::DdeRequest: return "DdeRequest";
    case MsgKind::DdeChallenge: return "DdeChallenge";
    case MsgKind::DdeChallengeResponse: return "DdeChallengeResponse";
    case MsgKind::DdeProofDelivery: return "DdeProofDelivery";
  }
  return "?";
}

inline std::optional<MsgKind> msg_kind_from_string(const std::string& s) {
  for (int k = 1; k <= 13; ++k)
    if (s == to_string(static_cast<MsgKind>(k))) return static_cast<MsgKind>(k);
  return std::nullopt;
}

struct UpdateRequestMsg {
  Digest update_hash;
  Nonce nonce;

  Bytes encode() const {
    return encode_parts({to_bytes(update_hash.bytes), to_bytes(nonce.bytes)});
  }
  static std::optional<UpdateRequestMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 2) return std::nullopt;
    auto uh = Digest::from_bytes((*p)[0]);
    auto n = Nonce::from_bytes((*p)[1]);
    if (!uh || !n) return std::nullopt;
    return UpdateRequestMsg{*uh, *n};
  }
};

struct DistributorHelloMsg {
  Bytes distributor_pub;
  Signature nonce_sig;  // over (DistributorNonce, nonce)
  Bytes challenge;

  Bytes encode() const {
    return encode_parts({distributor_pub, nonce_sig.to_bytes(), challenge});
  }
  static std::optional<DistributorHelloMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 3) return std::nullopt;
    auto sig = Signature::from_bytes((*p)[1]);
    if (!sig) return std::nullopt;
    return DistributorHelloMsg{(*p)[0], *sig, (*p)[2]};
  }
};

struct IdChallengeMsg {
  Bytes challenge;

  Bytes encode() const { return encode_parts({challenge}); }
  static std::optional<IdChallengeMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 1) return std::nullopt;
    return IdChallengeMsg{(*p)[0]};
  }
};

// nonce2 is empty in legacy mode, where the device signs the raw challenge.
struct IdResponseMsg {
  Bytes device_pub;
  Bytes nonce2;
  Signature sig;

  Bytes encode() const { return encode_parts({device_pub, nonce2, sig.to_bytes()}); }
  static std::optional<IdResponseMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 3) return std::nullopt;
    auto sig = Signature::from_bytes((*p)[2]);
    if (!sig) return std::nullopt;
    return IdResponseMsg{(*p)[0], (*p)[1], *sig};
  }
};

struct ZkProofDeliveryMsg {
  Proof proof;
  Ciphertext ciphertext;  // U_e
  Digest key_hash;        // s
  VerifyingKey verifying_key;
  Signature mfr_sig;

  Bytes encode() const {
    return encode_parts({proof.to_bytes(), ciphertext.bytes, to_bytes(key_hash.bytes),
                         verifying_key.to_bytes(), mfr_sig.to_bytes()});
  }
  static std::optional<ZkProofDeliveryMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 5) return std::nullopt;
    auto proof = Proof::from_bytes((*p)[0]);
    auto s = Digest::from_bytes((*p)[2]);
    auto vk = VerifyingKey::from_bytes((*p)[3]);
    auto sig = Signature::from_bytes((*p)[4]);
    if (!proof || !s || !vk || !sig) return std::nullopt;
    return ZkProofDeliveryMsg{*proof, Ciphertext{(*p)[1]}, *s, *vk, *sig};
  }
};

struct UpdateCommitMsg {
  Digest update_hash;
  Signature mfr_sig;
  Digest key_hash;  // s

  Bytes encode() const {
    return encode_parts({to_bytes(update_hash.bytes), mfr_sig.to_bytes(),
                         to_bytes(key_hash.bytes)});
  }
  static std::optional<UpdateCommitMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 3) return std::nullopt;
    auto uh = Digest::from_bytes((*p)[0]);
    auto sig = Signature::from_bytes((*p)[1]);
    auto s = Digest::from_bytes((*p)[2]);
    if (!uh || !sig || !s) return std::nullopt;
    return UpdateCommitMsg{*uh, *sig, *s};
  }
};

struct PodForwardMsg {
  Bytes device_pub;
  Digest update_hash;
  Digest key_hash;  // s the PoD binds
  Signature pod;

  Bytes encode() const {
    return encode_parts({device_pub, to_bytes(update_hash.bytes), to_bytes(key_hash.bytes),
                         pod.to_bytes()});
  }
  static std::optional<PodForwardMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 4) return std::nullopt;
    auto uh = Digest::from_bytes((*p)[1]);
    auto s = Digest::from_bytes((*p)[2]);
    auto sig = Signature::from_bytes((*p)[3]);
    if (!uh || !s || !sig) return std::nullopt;
    return PodForwardMsg{(*p)[0], *uh, *s, *sig};
  }
};

struct FinalDeliveryMsg {
  Bytes update;

  Bytes encode() const { return encode_parts({update}); }
  static std::optional<FinalDeliveryMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 1) return std::nullopt;
    return FinalDeliveryMsg{(*p)[0]};
  }
};

struct PofdForwardMsg {
  Bytes device_pub;
  Digest update_hash;
  Signature pofd;

  Bytes encode() const {
    return encode_parts({device_pub, to_bytes(update_hash.bytes), pofd.to_bytes()});
  }
  static std::optional<PofdForwardMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 3) return std::nullopt;
    auto uh = Digest::from_bytes((*p)[1]);
    auto sig = Signature::from_bytes((*p)[2]);
    if (!uh || !sig) return std::nullopt;
    return PofdForwardMsg{(*p)[0], *uh, *sig};
  }
};

struct DdeRequestMsg {
  Digest package_hash;

  Bytes encode() const { return encode_parts({to_bytes(package_hash.bytes)}); }
  static std::optional<DdeRequestMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 1) return std::nullopt;
    auto ph = Digest::from_bytes((*p)[0]);
    if (!ph) return std::nullopt;
    return DdeRequestMsg{*ph};
  }
};

struct DdeChallengeMsg {
  Bytes challenge;

  Bytes encode() const { return encode_parts({challenge}); }
  static std::optional<DdeChallengeMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 1) return std::nullopt;
    return DdeChallengeMsg{(*p)[0]};
  }
};

struct DdeChallengeResponseMsg {
  Bytes buyer_pub;
  Signature sig;  // over (DdeChallenge, challenge)

  Bytes encode() const { return encode_parts({buyer_pub, sig.to_bytes()}); }
  static std::optional<DdeChallengeResponseMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 2) return std::nullopt;
    auto sig = Signature::from_bytes((*p)[1]);
    if (!sig) return std::nullopt;
    return DdeChallengeResponseMsg{(*p)[0], *sig};
  }
};

struct DdeProofDeliveryMsg {
  Proof proof;
  Ciphertext ciphertext;  // P_e
  Digest key_hash;        // s
  VerifyingKey verifying_key;
  ProvingKey proving_key;
  Bytes seller_pub;  // the payee key the escrow must name

  Bytes encode() const {
    return encode_parts({proof.to_bytes(), ciphertext.bytes, to_bytes(key_hash.bytes),
                         verifying_key.to_bytes(), proving_key.to_bytes(), seller_pub});
  }
  static std::optional<DdeProofDeliveryMsg> decode(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 6) return std::nullopt;
    auto proof = Proof::from_bytes((*p)[0]);
    auto s = Digest::from_bytes((*p)[2]);
    auto vk = VerifyingKey::from_bytes((*p)[3]);
    auto pk = ProvingKey::from_bytes((*p)[4]);
    if (!proof || !s || !vk || !pk) return std::nullopt;
    return DdeProofDeliveryMsg{*proof, Ciphertext{(*p)[1]}, *s, *vk, *pk, (*p)[5]};
  }
};

}  // namespace cpsim
