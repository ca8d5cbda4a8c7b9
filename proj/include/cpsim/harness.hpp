// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "cpsim/engine.hpp"
#include "cpsim/lemmas.hpp"

namespace cpsim {

// 0 all checks pass; 1 lemma or integrity violation; 2 bad config;
// 3 a legacy-mode demonstration attack succeeded, as expected
enum ExitCode : int {
  kExitOk = 0,
  kExitViolation = 1,
  kExitConfigInvalid = 2,
  kExitExpectedAttackSucceeded = 3,
};

// Violation classes that fail a run outright. Protocol-level check failures
// (bad signatures, rejected proofs) are defensive events: under attack they
// are the expected outcome, so they do not flip the exit code.
inline bool is_integrity_violation(const TraceEvent& e) {
  if (e.kind != EventKind::Violation) return false;
  auto it = e.data.find("check");
  if (it == e.data.end() || !it->is_string()) return false;
  const std::string check = it->get<std::string>();
  return check == "witness-confinement" || check == "currency-conservation" ||
         check == "trace-rollback";
}

struct RunResult {
  Simulation::RunStats stats;
  std::vector<TraceEvent> events;
  std::vector<LemmaReport> lemmas;
  bool lemmas_checked = false;
  std::vector<std::string> witness_violations;
  bool conserved = true;
  std::size_t installed = 0;
  std::size_t payments_to_distributors = 0;
  std::size_t payments_to_hubs = 0;
  int exit_code = kExitOk;

  bool lemmas_hold() const {
    for (const auto& r : lemmas)
      if (!r.holds) return false;
    return true;
  }
};

inline RunResult summarize(Simulation& sim, bool check_lemmas) {
  RunResult out;
  out.events = sim.trace().events();
  out.witness_violations = sim.scanner().violations();
  out.conserved = sim.conserved();
  out.installed = sim.trace().count(EventKind::UpdateInstalled);
  out.payments_to_distributors = sim.trace().count(EventKind::PaymentToD);
  out.payments_to_hubs = sim.trace().count(EventKind::PaymentToH);
  if (check_lemmas) {
    out.lemmas_checked = true;
    out.lemmas = check_all_lemmas(out.events);
  }
  bool ok = out.conserved && out.witness_violations.empty() && out.lemmas_hold();
  for (const TraceEvent& e : out.events)
    if (is_integrity_violation(e)) ok = false;
  out.exit_code = ok ? kExitOk : kExitViolation;
  return out;
}

inline RunResult run_scenario(const ScenarioConfig& config, std::uint64_t seed,
                              bool check_lemmas = false, std::ostream* trace_out = nullptr) {
  Simulation sim(config, seed);
  auto stats = sim.run();
  RunResult out = summarize(sim, check_lemmas);
  out.stats = stats;
  if (trace_out) sim.trace().write(*trace_out);
  return out;
}

// ---- builtin scenario shapes ----

// 1 manufacturer, 3 devices, 2 hubs (2 + 1), 3 seeded distributors
inline ScenarioConfig baseline_config() {
  ScenarioConfig c;
  c.name = "baseline";
  c.devices = 3;
  c.hubs = 2;
  c.device_hub_assignment = {0, 0, 1};
  c.distributors.assign(3, DistributorRole{});
  return c;
}

// a reseller-only first-hand distributor plus a late-joining second-hand
// distributor that must buy the package through an escrow
inline ScenarioConfig dde_config() {
  ScenarioConfig c;
  c.name = "dde";
  c.devices = 2;
  c.hubs = 1;
  c.device_hub_assignment = {0, 0};
  c.distributors.clear();
  c.distributors.push_back(DistributorRole{0, /*deliver=*/false, /*resell=*/true, false});
  c.distributors.push_back(DistributorRole{/*join_offset=*/6, /*deliver=*/true,
                                           /*resell=*/false, false});
  c.seed_window_blocks = 3;
  c.max_blocks = 100;
  return c;
}

// randomized reorder/delay/replay interference for multi-seed lemma sweeps
inline ScenarioConfig interference_config() {
  ScenarioConfig c = baseline_config();
  c.name = "interference";
  c.adversary.randomized = true;
  c.adversary.delay_pct = 12;
  c.adversary.replay_pct = 10;
  c.adversary.max_delay_steps = 3;
  c.adversary.tx_reorder = true;
  c.adversary.tx_max_delay = 1;
  c.max_blocks = 120;
  return c;
}

// ---- attack scenario library ----

enum class AttackKind {
  FakeManufacturer,
  PodInterception,
  WithholdPod,
  TamperUpdate,
  DropBcTx,
  ForgeIdChallenge,
};

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::FakeManufacturer: return "impersonation";
    case AttackKind::PodInterception: return "pod-interception";
    case AttackKind::WithholdPod: return "malicious-distributor";
    case AttackKind::TamperUpdate: return "update-integrity";
    case AttackKind::DropBcTx: return "drop-bc-transactions";
    case AttackKind::ForgeIdChallenge: return "forge-id-challenge";
  }
  return "?";
}

inline std::optional<AttackKind> attack_from_string(const std::string& s) {
  for (AttackKind k :
       {AttackKind::FakeManufacturer, AttackKind::PodInterception, AttackKind::WithholdPod,
        AttackKind::TamperUpdate, AttackKind::DropBcTx, AttackKind::ForgeIdChallenge})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct AttackReport {
  std::string name;
  bool as_claimed = false;      // the run matched the documented outcome
  bool attack_succeeded = false; // the attacker achieved its goal
  std::string detail;
  RunResult result;
};

namespace detail {

inline std::size_t count_violations(const RunResult& r, const std::string& check) {
  std::size_t n = 0;
  for (const TraceEvent& e : r.events)
    if (e.kind == EventKind::Violation && e.data.value("check", std::string{}) == check) ++n;
  return n;
}

inline std::size_t payments_to(const RunResult& r, const std::string& pk_hex) {
  std::size_t n = 0;
  for (const TraceEvent& e : r.events)
    if (e.kind == EventKind::PaymentToD && e.data.value("pk_d", std::string{}) == pk_hex) ++n;
  return n;
}

// An attacker without the manufacturer's private key deploys its own release
// of a tampered update. Devices validate the manufacturer signature offline
// and refuse to commit, so no proof-of-delivery ever exists.
inline AttackReport attack_fake_manufacturer(std::uint64_t seed) {
  ScenarioConfig c = baseline_config();
  c.name = "impersonation";
  c.honest_release = false;
  c.attacker_release = true;
  c.max_blocks = 40;
  Simulation sim(c, seed);
  auto stats = sim.run();
  AttackReport rep{to_string(AttackKind::FakeManufacturer)};
  rep.result = summarize(sim, true);
  rep.result.stats = stats;
  std::size_t refused = count_violations(rep.result, "BadManufacturerSignature");
  rep.attack_succeeded = rep.result.installed > 0 || rep.result.payments_to_distributors > 0;
  rep.as_claimed = !rep.attack_succeeded && refused > 0 && rep.result.exit_code == kExitOk;
  rep.detail = "installs=" + std::to_string(rep.result.installed) +
               " payments=" + std::to_string(rep.result.payments_to_distributors) +
               " refusals=" + std::to_string(refused);
  return rep;
}

// The adversary watches the mempool for a reward claim, then front-runs it
// twice: once replaying the victim's values verbatim and once with its own
// freshly crafted key commitment. The key equations bind the submitter and
// the device signature binds s, so both copies bounce and the victim is paid.
inline AttackReport attack_pod_interception(std::uint64_t seed) {
  ScenarioConfig c = baseline_config();
  c.name = "pod-interception";
  c.devices = 1;
  c.hubs = 1;
  c.device_hub_assignment = {0};
  c.distributors.assign(1, DistributorRole{});
  c.max_blocks = 40;
  Simulation sim(c, seed);

  auto done = std::make_shared<bool>(false);
  std::string honest_pk;
  sim.hooks.pre_block = [done, &honest_pk](Simulation& s) {
    if (*done) return;
    auto& pending = s.ledger_mutable().pending_mutable();
    for (const PendingTx& p : pending) {
      const auto* pod = std::get_if<SubmitPodCall>(&p.tx.call);
      if (!pod || p.tx.sender == s.adversary_address()) continue;
      *done = true;
      honest_pk = p.tx.sender.hex();
      Adversary& adv = s.network().adversary;

      // mempool contents are public; record what the recipes build on
      Derivation cap_pod = Derivation::ledger(pod->pod.to_bytes());
      Derivation cap_t = Derivation::ledger(to_bytes(pod->t.bytes));
      Derivation cap_r = Derivation::ledger(to_bytes(pod->r.bytes));
      Derivation cap_dev = Derivation::ledger(pod->device.to_bytes());

      // verbatim replay under the adversary's own account
      adv.emitted_recipes.push_back(Derivation::encode({cap_t, cap_r, cap_pod}));
      s.submit({s.adversary_address(), p.tx.target, 0,
                SubmitPodCall{pod->device, pod->t, pod->r, pod->s, pod->pod}});

      // fresh (t', r', s') satisfying both key equations for the adversary
      SymKey t2 = SymKey::random(s.rng());
      SymKey r2 = delivery_key_commitment(t2, pod->device, s.adversary_address());
      Digest s2 = hash(to_bytes(r2.bytes));
      Derivation d_r2 = Derivation::canonical(
          SigContext::KeyCommitDelivery,
          {Derivation::self(to_bytes(t2.bytes)), cap_dev,
           Derivation::self(s.adversary_address().to_bytes())});
      adv.emitted_recipes.push_back(Derivation::hash_of(d_r2));
      s.submit({s.adversary_address(), p.tx.target, 0,
                SubmitPodCall{pod->device, t2, r2, s2, pod->pod}});

      // order both adversary copies ahead of the victim's submission
      std::stable_sort(pending.begin(), pending.end(),
                       [&](const PendingTx& a, const PendingTx& b) {
                         bool adv_a = a.tx.sender == s.adversary_address();
                         bool adv_b = b.tx.sender == s.adversary_address();
                         return adv_a > adv_b;
                       });
      return;
    }
  };

  auto stats = sim.run();
  AttackReport rep{to_string(AttackKind::PodInterception)};
  rep.result = summarize(sim, true);
  rep.result.stats = stats;
  std::size_t adv_paid = payments_to(rep.result, sim.adversary_address().hex());
  std::size_t honest_paid = honest_pk.empty() ? 0 : payments_to(rep.result, honest_pk);
  rep.attack_succeeded = adv_paid > 0;
  rep.as_claimed = *done && adv_paid == 0 && honest_paid == 1 && rep.result.installed == 1 &&
                   rep.result.exit_code == kExitOk;
  rep.detail = "intercepted=" + std::to_string(*done) +
               " adversary_payments=" + std::to_string(adv_paid) +
               " honest_payments=" + std::to_string(honest_paid);
  return rep;
}

// A distributor runs the protocol up to receiving the proof-of-delivery and
// then never claims, leaving the hub with an undecryptable file. The hub
// times out and retries with the next announcer.
inline AttackReport attack_withhold_pod(std::uint64_t seed) {
  ScenarioConfig c = baseline_config();
  c.name = "malicious-distributor";
  c.devices = 1;
  c.hubs = 1;
  c.device_hub_assignment = {0};
  c.distributors.clear();
  c.distributors.push_back(DistributorRole{0, true, true, /*withhold_pod=*/true});
  c.distributors.push_back(DistributorRole{0, true, true, false});
  c.max_blocks = 60;
  Simulation sim(c, seed);
  const std::string honest_pk = sim.distributors()[1]->address().hex();
  const std::string withholder_pk = sim.distributors()[0]->address().hex();
  auto stats = sim.run();
  AttackReport rep{to_string(AttackKind::WithholdPod)};
  rep.result = summarize(sim, true);
  rep.result.stats = stats;
  std::size_t aborted = 0;
  for (const TraceEvent& e : rep.result.events)
    if (e.kind == EventKind::SessionAborted) ++aborted;
  rep.attack_succeeded = rep.result.installed == 0;
  rep.as_claimed = rep.result.installed == 1 && payments_to(rep.result, honest_pk) == 1 &&
                   payments_to(rep.result, withholder_pk) == 0 && aborted >= 1 &&
                   rep.result.payments_to_hubs == 1 && rep.result.exit_code == kExitOk;
  rep.detail = "installs=" + std::to_string(rep.result.installed) +
               " honest_paid=" + std::to_string(payments_to(rep.result, honest_pk)) +
               " retries=" + std::to_string(aborted);
  return rep;
}

// The adversary substitutes the final file transfer with different bytes.
// The device compares the hash against the manufacturer-signed value and
// never installs.
inline AttackReport attack_tamper_update(std::uint64_t seed) {
  ScenarioConfig c = baseline_config();
  c.name = "update-integrity";
  c.devices = 1;
  c.hubs = 1;
  c.device_hub_assignment = {0};
  c.distributors.assign(1, DistributorRole{});
  c.max_blocks = 40;
  Simulation sim(c, seed);

  RandomSource garbage_rng(seed ^ 0x74616d70657265dULL);
  AdvRule rule;
  rule.kind = MsgKind::FinalDelivery;
  rule.action = AdvAction::Substitute;
  rule.substitute_payload = FinalDeliveryMsg{garbage_rng.bytes(c.update_size_bytes)}.encode();
  sim.network().adversary.rules.push_back(rule);

  auto stats = sim.run();
  AttackReport rep{to_string(AttackKind::TamperUpdate)};
  rep.result = summarize(sim, true);
  rep.result.stats = stats;
  std::size_t mismatches = count_violations(rep.result, "HashMismatch");
  rep.attack_succeeded = rep.result.installed > 0;
  rep.as_claimed = rep.result.installed == 0 && mismatches >= 1 &&
                   rep.result.payments_to_hubs == 0 && rep.result.exit_code == kExitOk;
  rep.detail = "installs=" + std::to_string(rep.result.installed) +
               " hash_mismatches=" + std::to_string(mismatches);
  return rep;
}

// Ledger submissions cannot be dropped, only delayed within a bound and
// reordered. Even under maximal interference every reward lands and every
// device is updated.
inline AttackReport attack_drop_bc_tx(std::uint64_t seed) {
  ScenarioConfig c = baseline_config();
  c.name = "drop-bc-transactions";
  c.adversary.tx_reorder = true;
  c.adversary.tx_max_delay = 2;
  c.adversary.randomized = false;
  c.max_blocks = 120;
  Simulation sim(c, seed);
  auto stats = sim.run();
  AttackReport rep{to_string(AttackKind::DropBcTx)};
  rep.result = summarize(sim, true);
  rep.result.stats = stats;
  rep.attack_succeeded = rep.result.installed < c.devices;
  rep.as_claimed = rep.result.installed == c.devices &&
                   rep.result.payments_to_distributors == c.devices &&
                   rep.result.payments_to_hubs == c.devices && rep.result.exit_code == kExitOk;
  rep.detail = "installs=" + std::to_string(rep.result.installed) + "/" +
               std::to_string(c.devices);
  return rep;
}

// The identification-challenge forgery: the adversary asks the device to
// sign a challenge it crafted to equal the byte encoding of a
// proof-of-delivery for its own key commitment. With legacy raw signing the
// device's reply doubles as a valid PoD; with tagged signing it is inert.
inline AttackReport attack_forge_id_challenge(std::uint64_t seed, RunMode mode) {
  ScenarioConfig c;
  c.name = "forge-id-challenge";
  c.devices = 1;
  c.hubs = 1;
  c.device_hub_assignment = {0};
  c.distributors.clear();  // nobody delivers; any payment is forged
  c.max_blocks = 30;
  c.mode = mode;
  Simulation sim(c, seed);

  struct ForgeState {
    bool injected = false;
    bool submitted = false;
    std::size_t cursor = 0;
    SymKey t, r;
    Digest s;
    Bytes challenge;
  };
  auto st = std::make_shared<ForgeState>();
  sim.hooks.post_block = [st](Simulation& s) {
    auto dsc = s.honest_dsc();
    if (!dsc || !dsc->second) return;
    Adversary& adv = s.network().adversary;
    if (!st->injected) {
      st->injected = true;
      const Address device = s.devices()[0]->address();
      st->t = SymKey::random(s.rng());
      st->r = delivery_key_commitment(st->t, device, s.adversary_address());
      st->s = hash(to_bytes(st->r.bytes));
      st->challenge =
          canonical_encode(SigContext::Pod,
                           {to_bytes(dsc->second->update_hash.bytes), to_bytes(st->s.bytes)});
      Derivation recipe = Derivation::canonical(
          SigContext::Pod,
          {Derivation::ledger(to_bytes(dsc->second->update_hash.bytes)),
           Derivation::hash_of(Derivation::canonical(
               SigContext::KeyCommitDelivery,
               {Derivation::self(to_bytes(st->t.bytes)), Derivation::ledger(device.to_bytes()),
                Derivation::self(s.adversary_address().to_bytes())}))});
      adv.inject(s.hubs()[0]->id(), s.devices()[0]->id(), MsgKind::IdChallenge,
                 IdChallengeMsg{st->challenge}.encode(), recipe);
      return;
    }
    if (st->submitted) return;
    for (; st->cursor < adv.observed.size(); ++st->cursor) {
      const Envelope& e = adv.observed[st->cursor];
      if (e.kind != MsgKind::IdResponse) continue;
      auto msg = IdResponseMsg::decode(e.payload);
      if (!msg) continue;
      st->submitted = true;
      adv.emitted_recipes.push_back(Derivation::captured(msg->sig.to_bytes()));
      s.submit({s.adversary_address(), dsc->first, 0,
                SubmitPodCall{s.devices()[0]->address(), st->t, st->r, st->s, msg->sig}});
      return;
    }
  };

  auto stats = sim.run();
  AttackReport rep{to_string(AttackKind::ForgeIdChallenge)};
  rep.result = summarize(sim, true);
  rep.result.stats = stats;
  std::size_t adv_paid = payments_to(rep.result, sim.adversary_address().hex());
  std::size_t proofs = sim.trace().count(EventKind::GenProof);
  rep.attack_succeeded = adv_paid > 0;
  if (mode == RunMode::LegacyLeiba) {
    // the documented outcome is a payout with no proof and no delivery
    rep.as_claimed = adv_paid == 1 && proofs == 0 && rep.result.installed == 0 &&
                     rep.result.lemmas_checked && !rep.result.lemmas[0].holds;
  } else {
    rep.as_claimed = adv_paid == 0 && rep.result.installed == 0 && rep.result.lemmas_hold();
  }
  rep.detail = std::string{"mode="} + to_string(mode) +
               " adversary_payments=" + std::to_string(adv_paid) +
               " proofs=" + std::to_string(proofs);
  return rep;
}

}  // namespace detail

inline AttackReport run_attack(AttackKind kind, std::uint64_t seed,
                               RunMode mode = RunMode::Standard) {
  switch (kind) {
    case AttackKind::FakeManufacturer: return detail::attack_fake_manufacturer(seed);
    case AttackKind::PodInterception: return detail::attack_pod_interception(seed);
    case AttackKind::WithholdPod: return detail::attack_withhold_pod(seed);
    case AttackKind::TamperUpdate: return detail::attack_tamper_update(seed);
    case AttackKind::DropBcTx: return detail::attack_drop_bc_tx(seed);
    case AttackKind::ForgeIdChallenge: return detail::attack_forge_id_challenge(seed, mode);
  }
  return {};
}

// The five defended attacks; each must end the way the design argues it does.
inline std::vector<AttackReport> run_attack_suite(std::uint64_t seed) {
  return {
      run_attack(AttackKind::FakeManufacturer, seed),
      run_attack(AttackKind::PodInterception, seed),
      run_attack(AttackKind::WithholdPod, seed),
      run_attack(AttackKind::TamperUpdate, seed),
      run_attack(AttackKind::DropBcTx, seed),
  };
}

}  // namespace cpsim
