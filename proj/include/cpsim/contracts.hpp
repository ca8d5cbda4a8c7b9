// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cpsim/chain.hpp"
#include "cpsim/crypto.hpp"

namespace cpsim {

enum class TxError {
  None,
  UnknownSender,
  UnknownTarget,
  WrongContract,
  InsufficientFunds,
  AlreadyDeployed,
  NotOwner,
  InsufficientDeposit,
  Expired,
  UnknownOrServedDevice,
  KeyEquationMismatch,
  BadSignature,
  UnauthorizedCaller,
  AlreadyClaimed,
  NotPayee,
  NotExpired,
  NotCreator,
};

inline const char* to_string(TxError e) {
  switch (e) {
    case TxError::None: return "None";
    case TxError::UnknownSender: return "UnknownSender";
    case TxError::UnknownTarget: return "UnknownTarget";
    case TxError::WrongContract: return "WrongContract";
    case TxError::InsufficientFunds: return "InsufficientFunds";
    case TxError::AlreadyDeployed: return "AlreadyDeployed";
    case TxError::NotOwner: return "NotOwner";
    case TxError::InsufficientDeposit: return "InsufficientDeposit";
    case TxError::Expired: return "Expired";
    case TxError::UnknownOrServedDevice: return "UnknownOrServedDevice";
    case TxError::KeyEquationMismatch: return "KeyEquationMismatch";
    case TxError::BadSignature: return "BadSignature";
    case TxError::UnauthorizedCaller: return "UnauthorizedCaller";
    case TxError::AlreadyClaimed: return "AlreadyClaimed";
    case TxError::NotPayee: return "NotPayee";
    case TxError::NotExpired: return "NotExpired";
    case TxError::NotCreator: return "NotCreator";
  }
  return "?";
}

struct ScoreEntry {
  std::uint64_t score = 0;
  Height last_update = 0;
};

// Factory and score registry, one per manufacturer. Deploys delivery and
// exchange contracts and keeps the per-distributor delivery count.
struct SscState {
  Address owner;
  Height reset_period = 0;
  std::map<Address, ScoreEntry> scores;
  std::set<Address> children;
};

struct TargetEntry {
  Address device;
  std::optional<Address> pod_served_by;
  std::optional<Address> pofd_served_by;
};

// Per-release delivery contract: rewards the first valid proof-of-delivery
// and the first valid proof-of-final-delivery for each listed device, and
// publishes the decryption key alongside the distributor payment.
struct DscState {
  Address creator;
  Address parent_ssc;
  Height created_at = 0;
  Height expiry = 0;  // submissions accepted while height - created_at < expiry
  Digest update_hash;
  Digest package_hash;
  Digest vk_delivery_hash;
  Digest vk_exchange_hash;
  Digest pk_exchange_hash;
  std::vector<TargetEntry> targets;
  Amount reward_distributor = 0;
  Amount reward_hub = 0;

  bool expired(Height h) const { return h >= created_at + expiry; }

  const TargetEntry* find(const Address& device) const {
    for (const auto& t : targets)
      if (t.device == device) return &t;
    return nullptr;
  }
  TargetEntry* find(const Address& device) {
    return const_cast<TargetEntry*>(std::as_const(*this).find(device));
  }
};

// Escrow for a distributor-to-distributor package sale: pays the named
// seller once it discloses (t, r) matching the committed key hash.
struct EscState {
  Address creator;  // the buyer
  Address payee;    // the seller
  Digest key_hash;  // s
  Amount offer = 0;
  Height created_at = 0;
  Height expiry = 0;
  bool claimed = false;

  bool expired(Height h) const { return h >= created_at + expiry; }
};

using ContractState = std::variant<SscState, DscState, EscState>;
using ContractMap = std::map<Address, ContractState>;

struct DeploySscCall {
  Height reset_period = 0;
};
struct CreateDscCall {
  Height expiry = 0;
  Digest update_hash;
  Digest package_hash;
  Digest vk_delivery_hash;
  Digest vk_exchange_hash;
  Digest pk_exchange_hash;
  std::vector<Address> targets;
  Amount reward_distributor = 0;
  Amount reward_hub = 0;
};
struct CreateEscCall {
  Address payee;
  Digest key_hash;
  Height expiry = 0;
};
struct SubmitPodCall {
  Address device;
  SymKey t;
  SymKey r;
  Digest s;
  Signature pod;
};
struct SubmitPofdCall {
  Address device;
  Signature pofd;
};
struct ClaimEscCall {
  SymKey t;
  SymKey r;
};
struct ReclaimCall {};

using Call = std::variant<DeploySscCall, CreateDscCall, CreateEscCall, SubmitPodCall,
                          SubmitPofdCall, ClaimEscCall, ReclaimCall>;

inline const char* call_name(const Call& call) {
  struct {
    const char* operator()(const DeploySscCall&) { return "deploy_ssc"; }
    const char* operator()(const CreateDscCall&) { return "create_dsc"; }
    const char* operator()(const CreateEscCall&) { return "create_esc"; }
    const char* operator()(const SubmitPodCall&) { return "submit_pod"; }
    const char* operator()(const SubmitPofdCall&) { return "submit_pofd"; }
    const char* operator()(const ClaimEscCall&) { return "claim_esc"; }
    const char* operator()(const ReclaimCall&) { return "reclaim"; }
  } v;
  return std::visit(v, call);
}

// Mutable view of chain state handed to an entry point for the duration of
// one transaction. The executor stages copies, so a rejected call leaves
// nothing behind.
struct ChainEnv {
  Height height = 0;
  Address sender;
  Amount attached_value = 0;
  Address target;
  BalanceMap* balances = nullptr;
  ContractMap* contracts = nullptr;
  std::vector<PublishedKey>* published_keys = nullptr;
  std::uint64_t* contract_seq = nullptr;
  TraceRecorder* trace = nullptr;
  std::function<std::string(const Address&)> name_of;

  std::string name(const Address& a) const { return name_of ? name_of(a) : a.short_hex(); }
  void emit(const std::string& actor, EventKind kind, nlohmann::ordered_json data) const {
    if (trace) trace->record(height, actor, kind, std::move(data));
  }
};

struct ExecResult {
  TxError error = TxError::None;
  std::optional<Address> created;

  bool ok() const { return error == TxError::None; }
};

// r must equal H(t || device || submitter) under the delivery commitment tag.
inline SymKey delivery_key_commitment(const SymKey& t, const Address& device,
                                      const Address& submitter) {
  return SymKey::from_digest(hash_canonical(
      SigContext::KeyCommitDelivery, {to_bytes(t.bytes), device.to_bytes(), submitter.to_bytes()}));
}

// r must equal H(t || payee) under the exchange commitment tag.
inline SymKey exchange_key_commitment(const SymKey& t, const Address& payee) {
  return SymKey::from_digest(
      hash_canonical(SigContext::KeyCommitDde, {to_bytes(t.bytes), payee.to_bytes()}));
}

inline CanonicalMessage pod_message(const Digest& update_hash, const Digest& key_hash) {
  return {SigContext::Pod, {to_bytes(update_hash.bytes), to_bytes(key_hash.bytes)}};
}

inline CanonicalMessage pofd_message(const Digest& update_hash, const Address& hub) {
  return {SigContext::Pofd, {to_bytes(update_hash.bytes), hub.to_bytes()}};
}

namespace detail {

inline SscState* as_ssc(ContractMap& contracts, const Address& a) {
  auto it = contracts.find(a);
  return it == contracts.end() ? nullptr : std::get_if<SscState>(&it->second);
}

inline void credit(BalanceMap& balances, const Address& a, Amount v) { balances[a] += v; }

// Score bookkeeping shared by the write path. A delivery recorded after a
// full quiet reset period starts the count over at 1.
inline std::uint64_t record_delivery(SscState& ssc, const Address& distributor, Height height) {
  auto it = ssc.scores.find(distributor);
  if (it == ssc.scores.end()) {
    ssc.scores[distributor] = ScoreEntry{1, height};
    return 1;
  }
  if (height - it->second.last_update >= ssc.reset_period)
    it->second.score = 1;
  else
    it->second.score += 1;
  it->second.last_update = height;
  return it->second.score;
}

inline ExecResult exec_deploy_ssc(ChainEnv& env, const DeploySscCall& call) {
  for (const auto& [addr, state] : *env.contracts) {
    const auto* ssc = std::get_if<SscState>(&state);
    if (ssc && ssc->owner == env.sender) return {TxError::AlreadyDeployed};
  }
  Address addr = Address::for_contract("ssc", env.sender, env.height, (*env.contract_seq)++);
  (*env.contracts)[addr] = SscState{env.sender, call.reset_period, {}, {}};
  credit(*env.balances, addr, env.attached_value);
  env.emit(env.name(addr), EventKind::ContractDeployed,
           {{"kind", "SSC"}, {"address", addr.hex()}, {"creator", env.name(env.sender)}});
  return {TxError::None, addr};
}

inline ExecResult exec_create_dsc(ChainEnv& env, const CreateDscCall& call) {
  SscState* ssc = as_ssc(*env.contracts, env.target);
  if (!ssc) return {TxError::WrongContract};
  if (env.sender != ssc->owner) return {TxError::NotOwner};
  const Amount required =
      static_cast<Amount>(call.targets.size()) * (call.reward_distributor + call.reward_hub);
  if (env.attached_value < required) return {TxError::InsufficientDeposit};

  Address addr = Address::for_contract("dsc", env.sender, env.height, (*env.contract_seq)++);
  DscState dsc;
  dsc.creator = env.sender;
  dsc.parent_ssc = env.target;
  dsc.created_at = env.height;
  dsc.expiry = call.expiry;
  dsc.update_hash = call.update_hash;
  dsc.package_hash = call.package_hash;
  dsc.vk_delivery_hash = call.vk_delivery_hash;
  dsc.vk_exchange_hash = call.vk_exchange_hash;
  dsc.pk_exchange_hash = call.pk_exchange_hash;
  for (const Address& dev : call.targets) dsc.targets.push_back(TargetEntry{dev, {}, {}});
  dsc.reward_distributor = call.reward_distributor;
  dsc.reward_hub = call.reward_hub;
  (*env.contracts)[addr] = std::move(dsc);
  ssc->children.insert(addr);
  credit(*env.balances, addr, env.attached_value);
  env.emit(env.name(addr), EventKind::ContractDeployed,
           {{"kind", "DSC"},
            {"address", addr.hex()},
            {"creator", env.name(env.sender)},
            {"update_hash", call.update_hash.hex()},
            {"targets", call.targets.size()},
            {"deposit", env.attached_value}});
  return {TxError::None, addr};
}

inline ExecResult exec_create_esc(ChainEnv& env, const CreateEscCall& call) {
  SscState* ssc = as_ssc(*env.contracts, env.target);
  if (!ssc) return {TxError::WrongContract};
  Address addr = Address::for_contract("esc", env.sender, env.height, (*env.contract_seq)++);
  EscState esc;
  esc.creator = env.sender;
  esc.payee = call.payee;
  esc.key_hash = call.key_hash;
  esc.offer = env.attached_value;
  esc.created_at = env.height;
  esc.expiry = call.expiry;
  (*env.contracts)[addr] = std::move(esc);
  ssc->children.insert(addr);
  credit(*env.balances, addr, env.attached_value);
  env.emit(env.name(addr), EventKind::ContractDeployed,
           {{"kind", "ESC"},
            {"address", addr.hex()},
            {"creator", env.name(env.sender)},
            {"payee", env.name(call.payee)},
            {"offer", env.attached_value}});
  return {TxError::None, addr};
}

inline ExecResult exec_submit_pod(ChainEnv& env, DscState& dsc, const SubmitPodCall& call) {
  if (dsc.expired(env.height)) return {TxError::Expired};
  TargetEntry* entry = dsc.find(call.device);
  if (!entry || entry->pod_served_by) return {TxError::UnknownOrServedDevice};
  if (call.r != delivery_key_commitment(call.t, call.device, env.sender))
    return {TxError::KeyEquationMismatch};
  if (call.s != hash(to_bytes(call.r.bytes))) return {TxError::KeyEquationMismatch};
  if (!verify_sig(call.device.to_bytes(), pod_message(dsc.update_hash, call.s), call.pod))
    return {TxError::BadSignature};

  (*env.balances)[env.target] -= dsc.reward_distributor;
  credit(*env.balances, env.sender, dsc.reward_distributor);
  env.published_keys->push_back(PublishedKey{call.s, call.r, env.height});
  entry->pod_served_by = env.sender;

  SscState* ssc = as_ssc(*env.contracts, dsc.parent_ssc);
  if (!ssc || !ssc->children.count(env.target)) return {TxError::UnauthorizedCaller};
  std::uint64_t score = record_delivery(*ssc, env.sender, env.height);

  env.emit(env.name(env.target), EventKind::PaymentToD,
           {{"pk_d", env.sender.hex()},
            {"distributor", env.name(env.sender)},
            {"device_pk", call.device.hex()},
            {"device", env.name(call.device)},
            {"amount", dsc.reward_distributor},
            {"contract", env.name(env.target)}});
  env.emit(env.name(env.target), EventKind::KeyPublished,
           {{"s", call.s.hex()},
            {"r", to_hex(call.r.bytes)},
            {"contract", env.name(env.target)}});
  env.emit(env.name(dsc.parent_ssc), EventKind::ScoreUpdated,
           {{"pk_d", env.sender.hex()},
            {"distributor", env.name(env.sender)},
            {"score", score}});
  return {};
}

inline ExecResult exec_submit_pofd(ChainEnv& env, DscState& dsc, const SubmitPofdCall& call) {
  if (dsc.expired(env.height)) return {TxError::Expired};
  TargetEntry* entry = dsc.find(call.device);
  if (!entry || entry->pofd_served_by) return {TxError::UnknownOrServedDevice};
  if (!verify_sig(call.device.to_bytes(), pofd_message(dsc.update_hash, env.sender), call.pofd))
    return {TxError::BadSignature};

  (*env.balances)[env.target] -= dsc.reward_hub;
  credit(*env.balances, env.sender, dsc.reward_hub);
  entry->pofd_served_by = env.sender;
  env.emit(env.name(env.target), EventKind::PaymentToH,
           {{"pk_h", env.sender.hex()},
            {"hub", env.name(env.sender)},
            {"device_pk", call.device.hex()},
            {"device", env.name(call.device)},
            {"amount", dsc.reward_hub},
            {"contract", env.name(env.target)}});
  return {};
}

inline ExecResult exec_claim_esc(ChainEnv& env, EscState& esc, const ClaimEscCall& call) {
  if (esc.expired(env.height)) return {TxError::Expired};
  if (esc.claimed) return {TxError::AlreadyClaimed};
  if (env.sender != esc.payee) return {TxError::NotPayee};
  if (call.r != exchange_key_commitment(call.t, esc.payee)) return {TxError::KeyEquationMismatch};
  if (esc.key_hash != hash(to_bytes(call.r.bytes))) return {TxError::KeyEquationMismatch};

  (*env.balances)[env.target] -= esc.offer;
  credit(*env.balances, env.sender, esc.offer);
  esc.claimed = true;
  env.published_keys->push_back(PublishedKey{esc.key_hash, call.r, env.height});
  env.emit(env.name(env.target), EventKind::EscPaid,
           {{"payee", env.name(esc.payee)},
            {"amount", esc.offer},
            {"contract", env.name(env.target)}});
  env.emit(env.name(env.target), EventKind::KeyPublished,
           {{"s", esc.key_hash.hex()},
            {"r", to_hex(call.r.bytes)},
            {"contract", env.name(env.target)}});
  return {};
}

inline ExecResult exec_reclaim(ChainEnv& env, ContractState& state) {
  Address creator;
  bool expired = false;
  if (auto* dsc = std::get_if<DscState>(&state)) {
    creator = dsc->creator;
    expired = dsc->expired(env.height);
  } else if (auto* esc = std::get_if<EscState>(&state)) {
    creator = esc->creator;
    expired = esc->expired(env.height);
  } else {
    return {TxError::WrongContract};
  }
  if (env.sender != creator) return {TxError::NotCreator};
  if (!expired) return {TxError::NotExpired};
  Amount residual = (*env.balances)[env.target];
  (*env.balances)[env.target] = 0;
  credit(*env.balances, env.sender, residual);
  return {};
}

}  // namespace detail

// Runs one entry point against the (staged) chain state in `env`. Attached
// value has already been debited from the sender; creating calls place it in
// the new contract, other calls leave it with the target.
inline ExecResult execute_call(ChainEnv& env, const Call& call) {
  if (std::holds_alternative<DeploySscCall>(call))
    return detail::exec_deploy_ssc(env, std::get<DeploySscCall>(call));

  auto it = env.contracts->find(env.target);
  if (it == env.contracts->end()) return {TxError::UnknownTarget};

  if (const auto* create_dsc = std::get_if<CreateDscCall>(&call))
    return detail::exec_create_dsc(env, *create_dsc);
  if (const auto* create_esc = std::get_if<CreateEscCall>(&call))
    return detail::exec_create_esc(env, *create_esc);

  // calls below keep any attached value with the target contract
  detail::credit(*env.balances, env.target, env.attached_value);

  if (const auto* pod = std::get_if<SubmitPodCall>(&call)) {
    auto* dsc = std::get_if<DscState>(&it->second);
    if (!dsc) return {TxError::WrongContract};
    return detail::exec_submit_pod(env, *dsc, *pod);
  }
  if (const auto* pofd = std::get_if<SubmitPofdCall>(&call)) {
    auto* dsc = std::get_if<DscState>(&it->second);
    if (!dsc) return {TxError::WrongContract};
    return detail::exec_submit_pofd(env, *dsc, *pofd);
  }
  if (const auto* claim = std::get_if<ClaimEscCall>(&call)) {
    auto* esc = std::get_if<EscState>(&it->second);
    if (!esc) return {TxError::WrongContract};
    return detail::exec_claim_esc(env, *esc, *claim);
  }
  if (std::holds_alternative<ReclaimCall>(call)) return detail::exec_reclaim(env, it->second);
  return {TxError::WrongContract};
}

// Publicly readable score with the lazy periodic reset applied: entries older
// than one reset period read as 0.
inline std::uint64_t effective_score(const SscState& ssc, const Address& distributor,
                                     Height at_height) {
  auto it = ssc.scores.find(distributor);
  if (it == ssc.scores.end()) return 0;
  if (at_height - it->second.last_update >= ssc.reset_period) return 0;
  return it->second.score;
}

}  // namespace cpsim
