// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <optional>
#include <string>

#include "cpsim/ledger.hpp"
#include "cpsim/network.hpp"
#include "cpsim/zk.hpp"

namespace cpsim {

enum class RunMode { Standard, LegacyLeiba };

inline const char* to_string(RunMode m) {
  return m == RunMode::Standard ? "standard" : "legacy-leiba";
}

// The traded bundle P = (U, pk_D, vk_D, sig_m). Its serialization is the
// content addressed by P_h on the ledger.
struct Package {
  Bytes update;
  ProvingKey proving_key;
  VerifyingKey verifying_key;
  Signature mfr_sig;

  Bytes serialize() const {
    return encode_parts({update, proving_key.to_bytes(), verifying_key.to_bytes(),
                         mfr_sig.to_bytes()});
  }
  static std::optional<Package> deserialize(ByteView b) {
    auto p = decode_parts(b);
    if (!p || p->size() != 4) return std::nullopt;
    auto pk = ProvingKey::from_bytes((*p)[1]);
    auto vk = VerifyingKey::from_bytes((*p)[2]);
    auto sig = Signature::from_bytes((*p)[3]);
    if (!pk || !vk || !sig) return std::nullopt;
    return Package{(*p)[0], *pk, *vk, *sig};
  }
};

// Seed-phase deliverable: the package plus the exchange-statement keys a
// distributor needs to resell it later.
struct SeedBundle {
  Package package;
  ProvingKey exchange_proving_key;
  VerifyingKey exchange_verifying_key;
};

// Behavioral knobs shared by all honest actors in a run.
struct ActorTuning {
  std::uint64_t score_threshold = 0;
  Height session_timeout = 4;     // blocks of silence before a session aborts
  std::uint64_t retry_budget = 8; // delivery attempts per device
  std::uint64_t final_delivery_retries = 4;
  Height esc_expiry = 20;
  Amount dde_offer = 7;
};

// What the simulation engine exposes to actor state machines. Ledger reads
// go straight at state and cannot be interfered with; sends and submissions
// pass through the scheduler and the adversary.
class Services {
 public:
  virtual ~Services() = default;

  virtual Height height() const = 0;
  virtual const LedgerState& ledger() const = 0;
  virtual void send(ActorId from, ActorId to, MsgKind kind, Bytes payload) = 0;
  virtual std::optional<std::uint64_t> submit(const Transaction& tx) = 0;
  // direct manufacturer hand-off during the seed window; not a network message
  virtual std::optional<SeedBundle> request_seed(ActorId requester, const Digest& package_hash) = 0;
  virtual ZkSystem& zk() = 0;
  virtual RandomSource& rng() = 0;
  virtual TraceRecorder& trace() = 0;
  virtual DhtIndex& dht() = 0;
  virtual RunMode mode() const = 0;
  virtual const ActorTuning& tuning() const = 0;
  virtual std::string actor_name(ActorId id) const = 0;
  // confinement bookkeeping: a fresh session key r (with s = H(r)) now
  // protects the release identified by update_hash
  virtual void register_session_secret(const Digest& s, const SymKey& r,
                                       const Digest& update_hash) = 0;
};

}  // namespace cpsim
