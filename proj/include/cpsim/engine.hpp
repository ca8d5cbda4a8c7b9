// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cpsim/actors.hpp"
#include "cpsim/scenario.hpp"

namespace cpsim {

// Tracks where secret material is allowed to appear. An update file or a
// session key showing up in any network payload before its owner disclosed
// it on-chain is a zero-knowledge confinement failure.
class WitnessScanner {
 public:
  void register_update(const Bytes& update, const Digest& update_hash) {
    updates_.push_back(Needle{update, update_hash, false});
  }

  void register_session_key(const Digest& s, const SymKey& r, const Digest& update_hash) {
    keys_.push_back(KeyNeedle{to_bytes(r.bytes), s, update_hash, false});
  }

  // called when the key's owner submits it to the ledger: from that moment
  // the key, and the update it protects, are public by protocol design
  void disclose(const Digest& s) {
    for (auto& k : keys_) {
      if (k.s != s || k.released) continue;
      k.released = true;
      for (auto& u : updates_)
        if (u.update_hash == k.update_hash) u.released = true;
    }
  }

  void scan(ByteView payload, Height height, TraceRecorder* trace) {
    for (const auto& u : updates_) check(u.value, u.released, "update", payload, height, trace);
    for (const auto& k : keys_) check(k.value, k.released, "session-key", payload, height, trace);
  }

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  struct Needle {
    Bytes value;
    Digest update_hash;
    bool released = false;
  };
  struct KeyNeedle {
    Bytes value;
    Digest s;
    Digest update_hash;
    bool released = false;
  };

  void check(const Bytes& needle, bool released, const char* what, ByteView payload,
             Height height, TraceRecorder* trace) {
    if (released || needle.empty()) return;
    if (!contains(payload, needle)) return;
    std::string msg = std::string{what} + " material leaked into a payload";
    violations_.push_back(msg);
    if (trace)
      trace->record(height, "scanner", EventKind::Violation,
                    {{"check", "witness-confinement"}, {"what", what}});
  }

  std::vector<Needle> updates_;
  std::vector<KeyNeedle> keys_;
  std::vector<std::string> violations_;
};

// One deterministic run: ledger, scheduler, adversary, zk backend and actor
// state machines under a single seeded randomness source.
class Simulation final : public Services {
 public:
  struct Hooks {
    std::function<void(Simulation&)> block_start;  // before the message steps
    std::function<void(Simulation&)> pre_block;    // pending queue visible, pre-execution
    std::function<void(Simulation&)> post_block;   // after execution and actor polls
  };

  Simulation(ScenarioConfig config, std::uint64_t seed)
      : config_(std::move(config)), seed_(seed), rng_(seed), zk_(rng_), network_(&trace_) {
    crypto_init();
    build();
  }

  // ---- Services ----
  Height height() const override { return ledger_.height(); }
  const LedgerState& ledger() const override { return ledger_; }

  void send(ActorId from, ActorId to, MsgKind kind, Bytes payload) override {
    network_.send(from, to, kind, std::move(payload), ledger_.height());
  }

  std::optional<std::uint64_t> submit(const Transaction& tx) override {
    // a key submitted on-chain is voluntarily disclosed; the mempool is
    // public, so confinement tracking releases it here, not at execution
    if (const auto* pod = std::get_if<SubmitPodCall>(&tx.call)) scanner_.disclose(pod->s);
    if (const auto* claim = std::get_if<ClaimEscCall>(&tx.call))
      scanner_.disclose(hash(to_bytes(claim->r.bytes)));
    return ledger_.submit(tx, &trace_);
  }

  std::optional<SeedBundle> request_seed(ActorId requester, const Digest& package_hash) override {
    for (Manufacturer* m : manufacturers_) {
      if (m->package_hash() != package_hash) continue;
      auto bundle = m->serve_seed(ledger_.height(), package_hash);
      trace_.record(ledger_.height(), m->name(), EventKind::SeedServed,
                    {{"distributor", actor_name(requester)},
                     {"result", bundle ? "served" : "closed"}});
      return bundle;
    }
    return std::nullopt;
  }

  ZkSystem& zk() override { return zk_; }
  RandomSource& rng() override { return rng_; }
  TraceRecorder& trace() override { return trace_; }
  DhtIndex& dht() override { return network_.dht; }
  RunMode mode() const override { return config_.mode; }
  const ActorTuning& tuning() const override { return tuning_; }

  std::string actor_name(ActorId id) const override {
    if (id < actors_.size()) return actors_[id]->name();
    return "ADV";
  }

  void register_session_secret(const Digest& s, const SymKey& r,
                               const Digest& update_hash) override {
    scanner_.register_session_key(s, r, update_hash);
  }

  // ---- run control ----

  struct RunStats {
    Height blocks = 0;
    bool stopped_early = false;
    bool conserved = true;
  };

  RunStats run() {
    RunStats stats;
    for (Height b = 0; b < config_.max_blocks; ++b) {
      if (hooks.block_start) hooks.block_start(*this);
      for (std::uint32_t s = 0; s < config_.steps_per_block; ++s) {
        auto delivered = network_.step(rng_, ledger_.height());
        for (const Envelope& env : delivered) dispatch(env);
      }
      if (hooks.pre_block) hooks.pre_block(*this);
      interfere_with_transactions();
      ledger_.advance_block(&trace_);
      if (!ledger_.conserved()) {
        stats.conserved = false;
        trace_.record(ledger_.height(), "ledger", EventKind::Violation,
                      {{"check", "currency-conservation"}});
      }
      for (auto& actor : actors_) actor->on_block(*this);
      if (hooks.post_block) hooks.post_block(*this);
      stats.blocks = b + 1;
      if (quiescent()) {
        stats.stopped_early = true;
        break;
      }
    }
    conserved_ = stats.conserved;
    return stats;
  }

  // ---- wiring and inspection ----

  Hooks hooks;

  const ScenarioConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  Network& network() { return network_; }
  LedgerState& ledger_mutable() { return ledger_; }
  WitnessScanner& scanner() { return scanner_; }
  bool conserved() const { return conserved_; }

  const KeyPair& adversary_keys() const { return adversary_keys_; }
  const Address& adversary_address() const { return adversary_address_; }

  Manufacturer* manufacturer() { return manufacturers_.empty() ? nullptr : manufacturers_[0]; }
  const std::vector<Manufacturer*>& manufacturers() const { return manufacturers_; }
  const std::vector<Distributor*>& distributors() const { return distributors_; }
  const std::vector<Hub*>& hubs() const { return hubs_; }
  const std::vector<IotDevice*>& devices() const { return devices_; }

  Actor* actor(ActorId id) { return id < actors_.size() ? actors_[id].get() : nullptr; }

  std::optional<ActorId> actor_id_by_name(const std::string& name) const {
    for (const auto& a : actors_)
      if (a->name() == name) return a->id();
    return std::nullopt;
  }

  // the single honest release, once on-chain
  std::optional<std::pair<Address, const DscState*>> honest_dsc() const {
    for (Manufacturer* m : manufacturers_)
      if (m->name() == "M" && m->dsc_address())
        return std::make_pair(*m->dsc_address(), ledger_.dsc_at(*m->dsc_address()));
    return std::nullopt;
  }

 private:
  void build() {
    tuning_.score_threshold = config_.score_threshold;
    tuning_.session_timeout = config_.session_timeout_blocks;
    tuning_.retry_budget = config_.retry_budget;
    tuning_.final_delivery_retries = config_.final_delivery_retries;
    tuning_.esc_expiry = config_.esc_expiry_blocks;
    tuning_.dde_offer = config_.dde_offer;

    // key material is drawn in a fixed order so runs replay exactly
    KeyPair mfr_keys = KeyPair::generate(rng_);
    adversary_keys_ = KeyPair::generate(rng_);
    adversary_address_ = *Address::from_public_key(adversary_keys_.public_key);
    std::vector<KeyPair> dist_keys;
    for (std::size_t i = 0; i < config_.distributors.size(); ++i)
      dist_keys.push_back(KeyPair::generate(rng_));
    std::vector<KeyPair> hub_keys;
    for (std::size_t i = 0; i < config_.hubs; ++i) hub_keys.push_back(KeyPair::generate(rng_));
    std::vector<KeyPair> device_keys;
    for (std::size_t i = 0; i < config_.devices; ++i)
      device_keys.push_back(KeyPair::generate(rng_));

    Bytes honest_update = rng_.bytes(config_.update_size_bytes);
    Bytes attacker_update;
    if (config_.attacker_release) attacker_update = rng_.bytes(config_.update_size_bytes);

    std::vector<Address> targets;
    for (const KeyPair& kp : device_keys) targets.push_back(*Address::from_public_key(kp.public_key));

    auto add_name = [&](const Address& a, const std::string& n) { names_[a] = n; };
    add_name(adversary_address_, "ADV");

    ReleasePlan plan;
    plan.targets = targets;
    plan.expiry = config_.expiry_blocks;
    plan.reward_distributor = config_.reward_distributor;
    plan.reward_hub = config_.reward_hub;
    plan.deposit = config_.deposit;
    plan.seed_window = config_.seed_window_blocks;
    plan.reset_period = config_.reset_period_blocks;

    if (config_.honest_release) {
      plan.update = honest_update;
      auto m = std::make_unique<Manufacturer>(next_id(), "M", mfr_keys, plan);
      add_name(m->address(), "M");
      scanner_.register_update(honest_update, hash(honest_update));
      manufacturers_.push_back(m.get());
      actors_.push_back(std::move(m));
    }
    if (config_.attacker_release) {
      ReleasePlan bad = plan;
      bad.update = attacker_update;
      auto m = std::make_unique<Manufacturer>(next_id(), "ADVM", adversary_keys_, bad);
      scanner_.register_update(attacker_update, hash(attacker_update));
      manufacturers_.push_back(m.get());
      actors_.push_back(std::move(m));
    }

    for (std::size_t i = 0; i < config_.distributors.size(); ++i) {
      auto d = std::make_unique<Distributor>(next_id(), "D" + std::to_string(i + 1),
                                             dist_keys[i], config_.distributors[i]);
      add_name(d->address(), d->name());
      distributors_.push_back(d.get());
      actors_.push_back(std::move(d));
    }
    for (std::size_t i = 0; i < config_.hubs; ++i) {
      auto h = std::make_unique<Hub>(next_id(), "H" + std::to_string(i + 1), hub_keys[i]);
      add_name(h->address(), h->name());
      hubs_.push_back(h.get());
      actors_.push_back(std::move(h));
    }
    for (std::size_t i = 0; i < config_.devices; ++i) {
      Hub* hub = hubs_[config_.hub_of_device(i)];
      auto dev = std::make_unique<IotDevice>(next_id(), "IoT" + std::to_string(i + 1),
                                             device_keys[i], mfr_keys.public_key, hub->id(),
                                             hub->address());
      add_name(dev->address(), dev->name());
      hub->manage(dev->id(), dev->address());
      devices_.push_back(dev.get());
      actors_.push_back(std::move(dev));
    }

    // genesis accounts; devices hold no funds
    if (config_.honest_release)
      ledger_.create_account(*Address::from_public_key(mfr_keys.public_key),
                             config_.genesis.manufacturer);
    for (const KeyPair& kp : dist_keys)
      ledger_.create_account(*Address::from_public_key(kp.public_key),
                             config_.genesis.distributor);
    for (const KeyPair& kp : hub_keys)
      ledger_.create_account(*Address::from_public_key(kp.public_key), config_.genesis.hub);
    ledger_.create_account(adversary_address_, config_.genesis.adversary);

    ledger_.name_of = [this](const Address& a) {
      auto it = names_.find(a);
      return it == names_.end() ? a.short_hex() : it->second;
    };
    network_.name_of = [this](ActorId id) { return actor_name(id); };
    network_.on_observed = [this](const Envelope& e) {
      scanner_.scan(e.payload, ledger_.height(), &trace_);
    };

    configure_adversary();
  }

  void configure_adversary() {
    Adversary& adv = network_.adversary;
    adv.randomized = config_.adversary.randomized;
    adv.delay_pct = config_.adversary.delay_pct;
    adv.replay_pct = config_.adversary.replay_pct;
    adv.max_delay_steps = config_.adversary.max_delay_steps;
    adv.tx_reorder = config_.adversary.tx_reorder;
    adv.tx_max_delay = config_.adversary.tx_max_delay;
    for (const RuleSpec& spec : config_.adversary.rules) {
      AdvRule rule;
      if (!spec.kind.empty()) rule.kind = msg_kind_from_string(spec.kind);
      if (!spec.from.empty()) rule.from = actor_id_by_name(spec.from);
      if (!spec.to.empty()) rule.to = actor_id_by_name(spec.to);
      if (spec.action == "drop") rule.action = AdvAction::Drop;
      else if (spec.action == "delay") rule.action = AdvAction::Delay;
      else if (spec.action == "replay") rule.action = AdvAction::Replay;
      else if (spec.action == "substitute") rule.action = AdvAction::Substitute;
      else if (spec.action == "reorder_block") rule.action = AdvAction::ReorderBlock;
      else rule.action = AdvAction::Pass;
      rule.delay_steps = spec.delay;
      rule.remaining = spec.max;
      if (!spec.payload_hex.empty()) rule.substitute_payload = *from_hex(spec.payload_hex);
      adv.rules.push_back(std::move(rule));
    }
  }

  ActorId next_id() { return static_cast<ActorId>(actors_.size()); }

  void dispatch(const Envelope& env) {
    if (env.to < actors_.size()) actors_[env.to]->handle(env, *this);
  }

  // bounded reorder/delay of the pending queue; submissions are never dropped
  void interfere_with_transactions() {
    Adversary& adv = network_.adversary;
    auto& pending = ledger_.pending_mutable();
    if (pending.empty()) return;
    if (adv.tx_max_delay > 0) {
      for (PendingTx& p : pending) {
        if (p.not_before != 0) continue;  // already delayed once
        Height d = adv.randomized ? rng_.below(adv.tx_max_delay + 1) : adv.tx_max_delay;
        p.not_before = ledger_.height() + 1 + d;
      }
    }
    if (adv.tx_reorder) rng_.shuffle(pending);
  }

  bool quiescent() const {
    if (!network_.idle() || !ledger_.pending().empty()) return false;
    if (!network_.adversary.injections.empty()) return false;
    for (const auto& a : actors_)
      if (!a->idle(*this)) return false;
    return true;
  }

  ScenarioConfig config_;
  std::uint64_t seed_;
  RandomSource rng_;
  ZkSystem zk_;
  TraceRecorder trace_;
  Network network_;
  LedgerState ledger_;
  ActorTuning tuning_;
  WitnessScanner scanner_;
  bool conserved_ = true;

  KeyPair adversary_keys_;
  Address adversary_address_;
  std::map<Address, std::string> names_;
  std::vector<std::unique_ptr<Actor>> actors_;
  std::vector<Manufacturer*> manufacturers_;
  std::vector<Distributor*> distributors_;
  std::vector<Hub*> hubs_;
  std::vector<IotDevice*> devices_;
};

}  // namespace cpsim
