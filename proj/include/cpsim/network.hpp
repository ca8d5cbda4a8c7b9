// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cpsim/crypto.hpp"
#include "cpsim/messages.hpp"
#include "cpsim/rng.hpp"
#include "cpsim/trace.hpp"

namespace cpsim {

using ActorId = std::uint32_t;
inline constexpr ActorId kNoActor = 0xffffffff;

struct Envelope {
  std::uint64_t id = 0;
  ActorId from = kNoActor;  // claimed origin; the adversary may spoof it
  ActorId to = kNoActor;
  MsgKind kind = MsgKind::UpdateRequest;
  Bytes payload;
  std::uint64_t deliver_at = 0;  // global step number
  bool injected = false;
  bool replayed = false;
  bool delayed = false;
};

// Content-hash to announcer index. Honest actors announce only content they
// hold; the adversary is free to announce falsely.
class DhtIndex {
 public:
  void announce(const Digest& digest, ActorId actor) {
    auto& v = index_[digest];
    for (ActorId a : v)
      if (a == actor) return;
    v.push_back(actor);
  }

  // announcers in insertion order; empty when none
  std::vector<ActorId> lookup(const Digest& digest) const {
    auto it = index_.find(digest);
    return it == index_.end() ? std::vector<ActorId>{} : it->second;
  }

 private:
  std::map<Digest, std::vector<ActorId>> index_;
};

enum class AdvAction { Pass, Drop, Delay, Replay, Substitute, ReorderBlock };

inline const char* to_string(AdvAction a) {
  switch (a) {
    case AdvAction::Pass: return "pass";
    case AdvAction::Drop: return "drop";
    case AdvAction::Delay: return "delay";
    case AdvAction::Replay: return "replay";
    case AdvAction::Substitute: return "substitute";
    case AdvAction::ReorderBlock: return "reorder_block";
  }
  return "?";
}

// One scripted interference rule. Rules are tried in order; the first match
// decides the action. `remaining` caps how often the rule fires.
struct AdvRule {
  std::optional<MsgKind> kind;
  std::optional<ActorId> from;
  std::optional<ActorId> to;
  AdvAction action = AdvAction::Pass;
  std::uint64_t delay_steps = 1;
  Bytes substitute_payload;
  std::uint64_t remaining = UINT64_MAX;

  bool matches(const Envelope& e) const {
    if (remaining == 0) return false;
    if (kind && *kind != e.kind) return false;
    if (from && *from != e.from) return false;
    if (to && *to != e.to) return false;
    return true;
  }
};

// Everything the adversary has seen, stored with a shallow structural
// decomposition so captured values can be recognized inside later payloads.
class KnowledgeBase {
 public:
  void add(ByteView b, int depth = 3) {
    if (b.empty()) return;
    atoms_.insert(Bytes(b.begin(), b.end()));
    if (depth == 0) return;
    auto parts = decode_parts(b);
    if (parts)
      for (const Bytes& p : *parts) add(p, depth - 1);
    // context-tagged encodings decompose the same way, minus the tag octet
    if (b.size() >= 1 && b[0] >= 1 && b[0] <= 8) {
      auto tagged = decode_parts(b.subspan(1));
      if (tagged)
        for (const Bytes& p : *tagged) add(p, depth - 1);
    }
  }

  bool knows(ByteView b) const { return atoms_.count(Bytes(b.begin(), b.end())) > 0; }
  std::size_t size() const { return atoms_.size(); }

  // substring scan across every captured atom
  bool any_contains(ByteView needle) const {
    for (const Bytes& a : atoms_)
      if (contains(a, needle)) return true;
    return false;
  }

 private:
  std::set<Bytes> atoms_;
};

// Recipe for a value the adversary emits. The derivation validator replays
// the recipe against the knowledge base to confirm the symbolic capability
// rules were respected: captured material, own randomness, public ledger
// reads, hashing, and re-encoding — never forging or inverting.
struct Derivation {
  enum class Op { Captured, SelfGenerated, LedgerPublic, HashOf, EncodeParts, CanonicalEncode };

  Op op = Op::SelfGenerated;
  Bytes value;
  SigContext context = SigContext::Manufacturer;  // CanonicalEncode only
  std::vector<Derivation> inputs;

  static Derivation captured(Bytes v) { return {Op::Captured, std::move(v), {}, {}}; }
  static Derivation self(Bytes v) { return {Op::SelfGenerated, std::move(v), {}, {}}; }
  static Derivation ledger(Bytes v) { return {Op::LedgerPublic, std::move(v), {}, {}}; }
  static Derivation hash_of(Derivation in) {
    Derivation d{Op::HashOf, to_bytes(hash(in.value).bytes), {}, {}};
    d.inputs.push_back(std::move(in));
    return d;
  }
  static Derivation encode(std::vector<Derivation> ins) {
    std::vector<Bytes> vals;
    for (const auto& i : ins) vals.push_back(i.value);
    return {Op::EncodeParts, encode_parts(vals), {}, std::move(ins)};
  }
  static Derivation canonical(SigContext ctx, std::vector<Derivation> ins) {
    std::vector<Bytes> vals;
    for (const auto& i : ins) vals.push_back(i.value);
    return {Op::CanonicalEncode, canonical_encode(ctx, vals), ctx, std::move(ins)};
  }
};

inline bool validate_derivation(const Derivation& d, const KnowledgeBase& kb) {
  switch (d.op) {
    case Derivation::Op::Captured:
      return kb.knows(d.value);
    case Derivation::Op::SelfGenerated:
    case Derivation::Op::LedgerPublic:
      return true;
    case Derivation::Op::HashOf:
      return d.inputs.size() == 1 && d.value == to_bytes(hash(d.inputs[0].value).bytes) &&
             validate_derivation(d.inputs[0], kb);
    case Derivation::Op::EncodeParts:
    case Derivation::Op::CanonicalEncode: {
      std::vector<Bytes> vals;
      for (const auto& i : d.inputs) {
        if (!validate_derivation(i, kb)) return false;
        vals.push_back(i.value);
      }
      Bytes expect = d.op == Derivation::Op::EncodeParts
                         ? encode_parts(vals)
                         : canonical_encode(d.context, vals);
      return d.value == expect;
    }
  }
  return false;
}

// Message-level Dolev-Yao adversary: observes every envelope, applies the
// script, and can inject envelopes built from its knowledge base. It cannot
// forge signatures or mint proofs, and it cannot touch ledger reads.
class Adversary {
 public:
  std::vector<AdvRule> rules;

  // randomized interference for multi-seed sweeps (percent probabilities)
  bool randomized = false;
  std::uint32_t delay_pct = 0;
  std::uint32_t replay_pct = 0;
  std::uint64_t max_delay_steps = 2;

  // bounded transaction interference; submissions are never dropped
  bool tx_reorder = false;
  Height tx_max_delay = 0;

  KnowledgeBase kb;

  struct Injection {
    ActorId from = kNoActor;  // spoofed origin
    ActorId to = kNoActor;
    MsgKind kind = MsgKind::UpdateRequest;
    Bytes payload;
    Derivation recipe;
  };
  std::vector<Injection> injections;
  std::vector<Derivation> emitted_recipes;  // audited by the derivation validator
  std::vector<Envelope> observed;           // every envelope, in observation order

  struct Decision {
    AdvAction action = AdvAction::Pass;
    std::uint64_t delay = 0;
    Bytes substitute;
  };

  Decision decide(const Envelope& e, RandomSource& rng) {
    for (AdvRule& r : rules) {
      if (!r.matches(e)) continue;
      if (r.action == AdvAction::Replay && e.replayed) continue;
      if (r.action == AdvAction::Delay && e.delayed) continue;
      if (r.remaining != UINT64_MAX) --r.remaining;
      return {r.action, r.delay_steps, r.substitute_payload};
    }
    if (randomized && !e.replayed && !e.delayed) {
      if (delay_pct && rng.chance(delay_pct, 100))
        return {AdvAction::Delay, 1 + rng.below(max_delay_steps), {}};
      if (replay_pct && rng.chance(replay_pct, 100)) return {AdvAction::Replay, 0, {}};
    }
    return {};
  }

  void inject(ActorId from, ActorId to, MsgKind kind, Bytes payload, Derivation recipe) {
    emitted_recipes.push_back(recipe);
    injections.push_back(Injection{from, to, kind, std::move(payload), std::move(recipe)});
  }
};

// Deterministic single-queue scheduler. Time advances in steps; a fixed
// number of steps make up one ledger block.
class Network {
 public:
  explicit Network(TraceRecorder* trace = nullptr) : trace_(trace) {}

  DhtIndex dht;
  Adversary adversary;

  std::uint64_t now() const { return now_step_; }
  bool idle() const { return queue_.empty(); }
  std::uint64_t queued() const { return queue_.size(); }

  std::function<std::string(ActorId)> name_of;
  std::function<void(const Envelope&)> on_observed;  // confinement scanner hook

  std::uint64_t send(ActorId from, ActorId to, MsgKind kind, Bytes payload, Height height) {
    Envelope e;
    e.id = next_id_++;
    e.from = from;
    e.to = to;
    e.kind = kind;
    e.payload = std::move(payload);
    e.deliver_at = now_step_ + 1;
    if (trace_)
      trace_->record(height, name(from), EventKind::MessageSent,
                     {{"to", name(to)}, {"kind", to_string(kind)}, {"bytes", e.payload.size()}});
    if (on_observed) on_observed(e);
    queue_.push_back(std::move(e));
    return queue_.back().id;
  }

  // One scheduler step: adversary first absorbs and rules on everything due,
  // then the surviving envelopes are handed back for dispatch.
  std::vector<Envelope> step(RandomSource& rng, Height height) {
    ++now_step_;

    // adversary injections enter the stream first, delivered this step
    for (auto& inj : adversary.injections) {
      Envelope e;
      e.id = next_id_++;
      e.from = inj.from;
      e.to = inj.to;
      e.kind = inj.kind;
      e.payload = std::move(inj.payload);
      e.deliver_at = now_step_;
      e.injected = true;
      if (trace_)
        trace_->record(height, "adversary", EventKind::AdversaryAction,
                       {{"action", "inject"},
                        {"kind", to_string(e.kind)},
                        {"as", name(e.from)},
                        {"to", name(e.to)}});
      if (on_observed) on_observed(e);
      queue_.push_back(std::move(e));
    }
    adversary.injections.clear();

    std::vector<Envelope> due;
    std::vector<Envelope> rest;
    for (auto& e : queue_) (e.deliver_at <= now_step_ ? due : rest).push_back(std::move(e));
    queue_ = std::move(rest);

    std::vector<Envelope> deliver;
    std::vector<Envelope> deferred;
    auto process = [&](Envelope& e, bool allow_defer) {
      adversary.kb.add(e.payload);
      adversary.observed.push_back(e);
      auto d = adversary.decide(e, rng);
      if (d.action != AdvAction::Pass && trace_)
        trace_->record(height, "adversary", EventKind::AdversaryAction,
                       {{"action", to_string(d.action)},
                        {"kind", to_string(e.kind)},
                        {"from", name(e.from)},
                        {"to", name(e.to)}});
      switch (d.action) {
        case AdvAction::Pass:
          deliver.push_back(std::move(e));
          break;
        case AdvAction::Drop:
          break;
        case AdvAction::Delay:
          e.deliver_at = now_step_ + d.delay;
          e.delayed = true;
          queue_.push_back(std::move(e));
          break;
        case AdvAction::Replay: {
          Envelope dup = e;
          dup.id = next_id_++;
          dup.deliver_at = now_step_ + 1;
          dup.replayed = true;
          queue_.push_back(std::move(dup));
          deliver.push_back(std::move(e));
          break;
        }
        case AdvAction::Substitute: {
          Envelope sub = std::move(e);
          sub.payload = d.substitute;
          if (on_observed) on_observed(sub);
          deliver.push_back(std::move(sub));
          break;
        }
        case AdvAction::ReorderBlock:
          if (allow_defer)
            deferred.push_back(std::move(e));
          else
            deliver.push_back(std::move(e));
          break;
      }
    };

    for (auto& e : due) process(e, true);
    for (auto& e : deferred) process(e, false);
    return deliver;
  }

 private:
  std::string name(ActorId a) const {
    if (a == kNoActor) return "-";
    return name_of ? name_of(a) : std::to_string(a);
  }

  TraceRecorder* trace_;
  std::vector<Envelope> queue_;
  std::uint64_t next_id_ = 0;
  std::uint64_t now_step_ = 0;
};

}  // namespace cpsim
