// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cpsim/contracts.hpp"
#include "cpsim/messages.hpp"
#include "cpsim/services.hpp"

namespace cpsim {

class Actor {
 public:
  Actor(ActorId id, std::string name, KeyPair keys)
      : id_(id), name_(std::move(name)), keys_(std::move(keys)),
        address_(*Address::from_public_key(keys_.public_key)) {}
  virtual ~Actor() = default;

  ActorId id() const { return id_; }
  const std::string& name() const { return name_; }
  const KeyPair& keys() const { return keys_; }
  const Address& address() const { return address_; }

  virtual void handle(const Envelope& env, Services& sv) {}
  virtual void on_block(Services& sv) {}
  // false while the actor still has protocol work in flight
  virtual bool idle(const Services& sv) const { return true; }

 protected:
  void violation(Services& sv, const std::string& check,
                 nlohmann::ordered_json extra = nlohmann::ordered_json::object()) {
    nlohmann::ordered_json data;
    data["check"] = check;
    for (auto& [k, v] : extra.items()) data[k] = v;
    sv.trace().record(sv.height(), name_, EventKind::Violation, std::move(data));
  }

  std::string addr_name(const Services& sv, const Address& a) const {
    const auto& resolver = sv.ledger().name_of;
    return resolver ? resolver(a) : a.short_hex();
  }

  ActorId id_;
  std::string name_;
  KeyPair keys_;
  Address address_;
};

// Parameters of one update release.
struct ReleasePlan {
  Bytes update;
  std::vector<Address> targets;
  Height expiry = 60;
  Amount reward_distributor = 5;
  Amount reward_hub = 2;
  Amount deposit = 0;  // 0 means the exact sufficiency bound
  Height seed_window = 3;
  Height reset_period = 100;
};

// Manufacturer: deploys its factory contract once, prepares the release
// artifacts (zk key pairs, package, signature on the update hash), funds the
// delivery contract, and hands the package out during the seed window.
class Manufacturer : public Actor {
 public:
  Manufacturer(ActorId id, std::string name, KeyPair keys, ReleasePlan plan)
      : Actor(id, std::move(name), std::move(keys)), plan_(std::move(plan)) {}

  const std::optional<Address>& ssc_address() const { return ssc_addr_; }
  const std::optional<Address>& dsc_address() const { return dsc_addr_; }
  const Digest& update_hash() const { return update_hash_; }
  const Digest& package_hash() const { return package_hash_; }
  const ReleasePlan& plan() const { return plan_; }

  void on_block(Services& sv) override {
    const LedgerState& ledger = sv.ledger();
    if (!ssc_submitted_) {
      ssc_submitted_ = true;
      sv.submit({address_, Address{}, 0, DeploySscCall{plan_.reset_period}});
      return;
    }
    if (!ssc_addr_) {
      ssc_addr_ = ledger.find_ssc_address(address_);
      if (!ssc_addr_) return;
    }
    if (!dsc_submitted_) {
      dsc_submitted_ = true;
      prepare_release(sv);
      return;
    }
    if (!dsc_addr_) {
      for (const auto& [addr, dsc] : ledger.all_dscs()) {
        if (dsc->creator == address_) {
          dsc_addr_ = addr;
          seed_until_ = dsc->created_at + plan_.seed_window;
        }
      }
    }
  }

  // Seed-phase package transfer: a direct hand-off outside the adversarial
  // network, refused once the window has closed.
  std::optional<SeedBundle> serve_seed(Height now, const Digest& package_hash) const {
    if (!dsc_addr_ || package_hash != package_hash_) return std::nullopt;
    if (now >= seed_until_) return std::nullopt;
    return bundle_;
  }

  bool idle(const Services& sv) const override { return dsc_addr_.has_value(); }

 private:
  void prepare_release(Services& sv) {
    update_hash_ = hash(plan_.update);
    Signature sig_m =
        sign(keys_.private_key, {SigContext::Manufacturer, {to_bytes(update_hash_.bytes)}});
    auto [pk_d, vk_d] =
        sv.zk().setup({StatementKind::UpdateEncryption, plan_.update.size()}, sv.rng());
    Package package{plan_.update, pk_d, vk_d, sig_m};
    Bytes package_bytes = package.serialize();
    package_hash_ = hash(package_bytes);
    auto [pk_e, vk_e] =
        sv.zk().setup({StatementKind::PackageEncryption, package_bytes.size()}, sv.rng());
    bundle_ = SeedBundle{std::move(package), pk_e, vk_e};

    CreateDscCall call;
    call.expiry = plan_.expiry;
    call.update_hash = update_hash_;
    call.package_hash = package_hash_;
    call.vk_delivery_hash = hash(vk_d.to_bytes());
    call.vk_exchange_hash = hash(vk_e.to_bytes());
    call.pk_exchange_hash = hash(pk_e.to_bytes());
    call.targets = plan_.targets;
    call.reward_distributor = plan_.reward_distributor;
    call.reward_hub = plan_.reward_hub;
    Amount deposit = plan_.deposit ? plan_.deposit
                                   : static_cast<Amount>(plan_.targets.size()) *
                                         (plan_.reward_distributor + plan_.reward_hub);
    sv.submit({address_, *ssc_addr_, deposit, call});
  }

  ReleasePlan plan_;
  bool ssc_submitted_ = false;
  bool dsc_submitted_ = false;
  std::optional<Address> ssc_addr_;
  std::optional<Address> dsc_addr_;
  Height seed_until_ = 0;
  Digest update_hash_;
  Digest package_hash_;
  SeedBundle bundle_;
};

struct DistributorRole {
  Height join_offset = 0;     // blocks after release discovery before acting
  bool deliver = true;        // serve devices
  bool resell = true;         // answer package exchange requests
  bool withhold_pod = false;  // malicious: never submit the earned proof
};

// Self-interested distributor. Acquires the package (seed phase or exchange
// purchase), answers hub requests, produces the encryption proof, and claims
// the delivery reward.
class Distributor : public Actor {
 public:
  Distributor(ActorId id, std::string name, KeyPair keys, DistributorRole role = {})
      : Actor(id, std::move(name), std::move(keys)), role_(role) {}

  const DistributorRole& role() const { return role_; }
  bool holds_update(const Digest& update_hash) const {
    return holding_for_update(update_hash) != nullptr;
  }

  void on_block(Services& sv) override {
    const LedgerState& ledger = sv.ledger();
    for (const auto& [addr, dsc] : ledger.all_dscs()) {
      if (!releases_.count(addr))
        releases_[addr] = ReleaseInfo{dsc->package_hash, sv.height(), false, {}};
    }
    pursue_acquisition(sv, ledger);
    watch_escrows(sv, ledger);
    expire_sessions(sv);
  }

  void handle(const Envelope& env, Services& sv) override {
    switch (env.kind) {
      case MsgKind::UpdateRequest: on_update_request(env, sv); break;
      case MsgKind::IdResponse: on_id_response(env, sv); break;
      case MsgKind::PodForward: on_pod_forward(env, sv); break;
      case MsgKind::DdeRequest: on_dde_request(env, sv); break;
      case MsgKind::DdeChallenge: on_dde_challenge(env, sv); break;
      case MsgKind::DdeChallengeResponse: on_dde_challenge_response(env, sv); break;
      case MsgKind::DdeProofDelivery: on_dde_proof(env, sv); break;
      default: break;
    }
  }

  bool idle(const Services& sv) const override {
    if (!sessions_.empty() || buy_ || !sales_.empty()) return false;
    // still chasing a package for a live release
    for (const auto& [dsc_addr, info] : releases_) {
      if (holdings_.count(dsc_addr)) continue;
      const DscState* dsc = sv.ledger().dsc_at(dsc_addr);
      if (dsc && !dsc->expired(sv.ledger().height())) return false;
    }
    return true;
  }

 private:
  struct Holding {
    SeedBundle bundle;
    Digest update_hash;
    Digest package_hash;
    Bytes package_bytes;
    Address dsc;
  };

  struct DeliverySession {
    Address dsc;
    ActorId hub = kNoActor;
    Bytes challenge;
    bool id_verified = false;
    Address device;
    SymKey t;
    SymKey r;
    Digest s;
    Height last_activity = 0;
  };

  // seller side of a package exchange
  struct Sale {
    Address dsc;
    ActorId buyer = kNoActor;
    Bytes challenge;
    bool proof_sent = false;
    SymKey t;
    SymKey r;
    Digest s;
    bool claim_submitted = false;
    Height last_activity = 0;
  };

  // buyer side of a package exchange
  struct Purchase {
    Address dsc;
    Digest package_hash;
    ActorId seller = kNoActor;
    Address seller_address;
    enum class Phase { Requested, Challenged, EscrowSubmitted, AwaitKey } phase = Phase::Requested;
    Ciphertext package_ct;
    Digest s;
    ProvingKey exchange_pk;
    VerifyingKey exchange_vk;
    std::optional<Address> esc;
    Height last_activity = 0;
  };

  struct ReleaseInfo {
    Digest package_hash;
    Height discovered_at = 0;
    bool seed_refused = false;
    std::set<ActorId> tried_sellers;
  };

  void pursue_acquisition(Services& sv, const LedgerState& ledger) {
    for (auto& [dsc_addr, info] : releases_) {
      if (holdings_.count(dsc_addr)) continue;
      const DscState* dsc = ledger.dsc_at(dsc_addr);
      if (!dsc || dsc->expired(sv.height())) continue;
      if (sv.height() < info.discovered_at + role_.join_offset) continue;

      if (!info.seed_refused) {
        auto bundle = sv.request_seed(id_, info.package_hash);
        if (bundle) {
          adopt_holding(sv, dsc_addr, *std::move(bundle));
          continue;
        }
        info.seed_refused = true;
      }
      if (!buy_) start_purchase(sv, dsc_addr, info);
    }
  }

  void adopt_holding(Services& sv, const Address& dsc_addr, SeedBundle bundle) {
    Holding h;
    h.update_hash = hash(bundle.package.update);
    h.package_bytes = bundle.package.serialize();
    h.package_hash = hash(h.package_bytes);
    h.dsc = dsc_addr;
    h.bundle = std::move(bundle);
    sv.dht().announce(h.update_hash, id_);
    sv.dht().announce(h.package_hash, id_);
    holdings_[dsc_addr] = std::move(h);
  }

  void start_purchase(Services& sv, const Address& dsc_addr, ReleaseInfo& info) {
    std::vector<ActorId> sellers = sv.dht().lookup(info.package_hash);
    std::erase(sellers, id_);
    if (sellers.empty()) return;
    bool all_tried = true;
    for (ActorId s : sellers)
      if (!info.tried_sellers.count(s)) all_tried = false;
    if (all_tried) info.tried_sellers.clear();
    for (ActorId seller : sellers) {
      if (info.tried_sellers.count(seller)) continue;
      info.tried_sellers.insert(seller);
      Purchase p;
      p.dsc = dsc_addr;
      p.package_hash = info.package_hash;
      p.seller = seller;
      p.last_activity = sv.height();
      buy_ = std::move(p);
      sv.send(id_, seller, MsgKind::DdeRequest, DdeRequestMsg{info.package_hash}.encode());
      return;
    }
  }

  // ---- update delivery, distributor side ----

  void on_update_request(const Envelope& env, Services& sv) {
    auto msg = UpdateRequestMsg::decode(env.payload);
    if (!msg || !role_.deliver) return;
    const Holding* holding = holding_for_update(msg->update_hash);
    if (!holding) return;
    DeliverySession s;
    s.dsc = holding->dsc;
    s.hub = env.from;
    s.challenge = to_bytes(Nonce::fresh(sv.rng()).bytes);
    s.last_activity = sv.height();
    Signature nonce_sig =
        sign(keys_.private_key, {SigContext::DistributorNonce, {to_bytes(msg->nonce.bytes)}});
    sv.send(id_, env.from, MsgKind::DistributorHello,
            DistributorHelloMsg{keys_.public_key, nonce_sig, s.challenge}.encode());
    sessions_.push_back(std::move(s));
  }

  void on_id_response(const Envelope& env, Services& sv) {
    auto msg = IdResponseMsg::decode(env.payload);
    if (!msg) return;
    auto device = Address::from_public_key(msg->device_pub);
    if (!device) return;
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
      DeliverySession& s = sessions_[i];
      if (s.hub != env.from || s.id_verified) continue;
      bool sig_ok = sv.mode() == RunMode::LegacyLeiba
                        ? verify_raw(msg->device_pub, s.challenge, msg->sig)
                        : verify_sig(msg->device_pub,
                                     {SigContext::IdResponse, {s.challenge, msg->nonce2}},
                                     msg->sig);
      if (!sig_ok) continue;

      const DscState* dsc = sv.ledger().dsc_at(s.dsc);
      if (!dsc) return;
      const TargetEntry* entry = dsc->find(*device);
      if (!entry || entry->pod_served_by) {
        // unlisted or already-served device: nothing to earn here
        sessions_.erase(sessions_.begin() + i);
        return;
      }
      const Holding& holding = holdings_.at(s.dsc);
      s.id_verified = true;
      s.device = *device;
      s.t = SymKey::random(sv.rng());
      s.r = delivery_key_commitment(s.t, s.device, address_);
      s.s = hash(to_bytes(s.r.bytes));
      s.last_activity = sv.height();
      sv.register_session_secret(s.s, s.r, dsc->update_hash);
      Ciphertext update_ct = sym_encrypt(holding.bundle.package.update, s.r);
      PublicInputs pub{dsc->update_hash, update_ct, s.s};
      auto proof = sv.zk().prove(holding.bundle.package.proving_key, pub,
                                 Witness{holding.bundle.package.update, s.r});
      if (!proof) {
        violation(sv, "prove-failed");
        return;
      }
      sv.trace().record(sv.height(), name_, EventKind::GenProof,
                        {{"pk_d", address_.hex()},
                         {"device_pk", s.device.hex()},
                         {"device", addr_name(sv, s.device)},
                         {"update_hash", dsc->update_hash.hex()}});
      sv.send(id_, s.hub, MsgKind::ZkProofDelivery,
              ZkProofDeliveryMsg{*proof, update_ct, s.s, holding.bundle.package.verifying_key,
                                 holding.bundle.package.mfr_sig}
                  .encode());
      return;
    }
  }

  void on_pod_forward(const Envelope& env, Services& sv) {
    auto msg = PodForwardMsg::decode(env.payload);
    if (!msg) return;
    auto device = Address::from_public_key(msg->device_pub);
    if (!device) return;
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
      DeliverySession& s = sessions_[i];
      if (!s.id_verified || s.hub != env.from || s.device != *device || s.s != msg->key_hash)
        continue;
      const DscState* dsc = sv.ledger().dsc_at(s.dsc);
      if (!dsc) return;
      if (!verify_sig(msg->device_pub, pod_message(dsc->update_hash, s.s), msg->pod)) {
        violation(sv, "pod-signature", {{"device", addr_name(sv, s.device)}});
        return;
      }
      if (!role_.withhold_pod)
        sv.submit({address_, s.dsc, 0, SubmitPodCall{s.device, s.t, s.r, s.s, msg->pod}});
      sessions_.erase(sessions_.begin() + i);
      return;
    }
  }

  // ---- package exchange, seller side ----

  void on_dde_request(const Envelope& env, Services& sv) {
    auto msg = DdeRequestMsg::decode(env.payload);
    if (!msg || !role_.resell) return;
    const Holding* holding = holding_for_package(msg->package_hash);
    if (!holding) return;
    Sale sale;
    sale.dsc = holding->dsc;
    sale.buyer = env.from;
    sale.challenge = to_bytes(Nonce::fresh(sv.rng()).bytes);
    sale.last_activity = sv.height();
    sv.send(id_, env.from, MsgKind::DdeChallenge, DdeChallengeMsg{sale.challenge}.encode());
    sales_.push_back(std::move(sale));
  }

  void on_dde_challenge_response(const Envelope& env, Services& sv) {
    auto msg = DdeChallengeResponseMsg::decode(env.payload);
    if (!msg) return;
    for (Sale& sale : sales_) {
      if (sale.buyer != env.from || sale.proof_sent) continue;
      if (!verify_sig(msg->buyer_pub, {SigContext::DdeChallenge, {sale.challenge}}, msg->sig))
        continue;
      auto buyer_addr = Address::from_public_key(msg->buyer_pub);
      const DscState* dsc = sv.ledger().dsc_at(sale.dsc);
      if (!buyer_addr || !dsc) return;
      const SscState* ssc = sv.ledger().ssc_at(dsc->parent_ssc);
      if (ssc && effective_score(*ssc, *buyer_addr, sv.height()) < sv.tuning().score_threshold) {
        violation(sv, "buyer-score", {{"buyer", sv.actor_name(env.from)}});
        return;
      }
      const Holding& holding = holdings_.at(sale.dsc);
      sale.t = SymKey::random(sv.rng());
      sale.r = exchange_key_commitment(sale.t, address_);
      sale.s = hash(to_bytes(sale.r.bytes));
      sale.proof_sent = true;
      sale.last_activity = sv.height();
      sv.register_session_secret(sale.s, sale.r, dsc->update_hash);
      Ciphertext package_ct = sym_encrypt(holding.package_bytes, sale.r);
      PublicInputs pub{holding.package_hash, package_ct, sale.s};
      auto proof = sv.zk().prove(holding.bundle.exchange_proving_key, pub,
                                 Witness{holding.package_bytes, sale.r});
      if (!proof) {
        violation(sv, "prove-failed");
        return;
      }
      sv.trace().record(sv.height(), name_, EventKind::DdeProofGenerated,
                        {{"pk_d", address_.hex()}, {"buyer", sv.actor_name(env.from)}});
      sv.send(id_, env.from, MsgKind::DdeProofDelivery,
              DdeProofDeliveryMsg{*proof, package_ct, sale.s,
                                  holding.bundle.exchange_verifying_key,
                                  holding.bundle.exchange_proving_key, keys_.public_key}
                  .encode());
      return;
    }
  }

  // ---- package exchange, buyer side ----

  void on_dde_challenge(const Envelope& env, Services& sv) {
    auto msg = DdeChallengeMsg::decode(env.payload);
    if (!msg || !buy_ || buy_->seller != env.from || buy_->phase != Purchase::Phase::Requested)
      return;
    buy_->phase = Purchase::Phase::Challenged;
    buy_->last_activity = sv.height();
    Signature sig = sign(keys_.private_key, {SigContext::DdeChallenge, {msg->challenge}});
    sv.send(id_, env.from, MsgKind::DdeChallengeResponse,
            DdeChallengeResponseMsg{keys_.public_key, sig}.encode());
  }

  void on_dde_proof(const Envelope& env, Services& sv) {
    auto msg = DdeProofDeliveryMsg::decode(env.payload);
    if (!msg || !buy_ || buy_->seller != env.from ||
        buy_->phase != Purchase::Phase::Challenged)
      return;
    const DscState* dsc = sv.ledger().dsc_at(buy_->dsc);
    auto seller_addr = Address::from_public_key(msg->seller_pub);
    if (!dsc || !seller_addr) return;
    // both exchange keys must match the hashes committed on-chain
    if (hash(msg->verifying_key.to_bytes()) != dsc->vk_exchange_hash ||
        hash(msg->proving_key.to_bytes()) != dsc->pk_exchange_hash) {
      violation(sv, "exchange-key-hash", {{"seller", sv.actor_name(env.from)}});
      buy_.reset();
      return;
    }
    PublicInputs pub{dsc->package_hash, msg->ciphertext, msg->key_hash};
    if (!sv.zk().verify(msg->verifying_key, pub, msg->proof)) {
      violation(sv, "exchange-proof", {{"seller", sv.actor_name(env.from)}});
      buy_.reset();  // no escrow deployed, nothing risked
      return;
    }
    buy_->seller_address = *seller_addr;
    buy_->package_ct = msg->ciphertext;
    buy_->s = msg->key_hash;
    buy_->exchange_pk = msg->proving_key;
    buy_->exchange_vk = msg->verifying_key;
    buy_->phase = Purchase::Phase::EscrowSubmitted;
    buy_->last_activity = sv.height();
    sv.submit({address_, dsc->parent_ssc, sv.tuning().dde_offer,
               CreateEscCall{*seller_addr, msg->key_hash, sv.tuning().esc_expiry}});
  }

  void watch_escrows(Services& sv, const LedgerState& ledger) {
    // seller: claim any escrow addressed to us whose s we committed to
    for (const auto& [addr, esc] : ledger.all_escs()) {
      if (esc->payee != address_ || esc->claimed || esc->expired(sv.height())) continue;
      for (Sale& sale : sales_) {
        if (sale.s != esc->key_hash || sale.claim_submitted) continue;
        sale.claim_submitted = true;
        sv.submit({address_, addr, 0, ClaimEscCall{sale.t, sale.r}});
      }
    }
    std::erase_if(sales_, [&](const Sale& sale) {
      if (!sale.claim_submitted) return false;
      for (const auto& [addr, esc] : ledger.all_escs())
        if (esc->key_hash == sale.s && esc->claimed) return true;
      return false;
    });

    if (buy_ && buy_->phase == Purchase::Phase::EscrowSubmitted) {
      for (const auto& [addr, esc] : ledger.all_escs()) {
        if (esc->creator == address_ && esc->key_hash == buy_->s) {
          buy_->esc = addr;
          buy_->phase = Purchase::Phase::AwaitKey;
        }
      }
    }
    if (buy_ && buy_->phase == Purchase::Phase::AwaitKey) {
      auto r = ledger.published_key_for(buy_->s);
      if (r) {
        finish_purchase(sv, *r);
      } else if (buy_->esc) {
        const EscState* esc = ledger.esc_at(*buy_->esc);
        if (esc && !esc->claimed && esc->expired(sv.height())) {
          // seller never claimed; recover the escrowed offer and move on
          sv.submit({address_, *buy_->esc, 0, ReclaimCall{}});
          buy_.reset();
        }
      }
    }
  }

  void finish_purchase(Services& sv, const SymKey& r) {
    auto plain = sym_decrypt(buy_->package_ct, r);
    if (!plain) {
      violation(sv, "exchange-decrypt");
      buy_.reset();
      return;
    }
    auto package = Package::deserialize(*plain);
    const DscState* dsc = sv.ledger().dsc_at(buy_->dsc);
    if (!package || !dsc || hash(*plain) != dsc->package_hash ||
        !verify_sig(dsc->creator.to_bytes(),
                    {SigContext::Manufacturer, {to_bytes(dsc->update_hash.bytes)}},
                    package->mfr_sig)) {
      violation(sv, "exchange-package-invalid");
      buy_.reset();
      return;
    }
    SeedBundle bundle{*std::move(package), buy_->exchange_pk, buy_->exchange_vk};
    Address dsc_addr = buy_->dsc;
    buy_.reset();
    adopt_holding(sv, dsc_addr, std::move(bundle));
  }

  void expire_sessions(Services& sv) {
    const Height h = sv.height();
    const Height timeout = sv.tuning().session_timeout;
    std::erase_if(sessions_,
                  [&](const DeliverySession& s) { return h - s.last_activity >= timeout; });
    std::erase_if(sales_, [&](const Sale& s) {
      return !s.claim_submitted && h - s.last_activity >= sv.tuning().esc_expiry + timeout;
    });
    if (buy_ &&
        (buy_->phase == Purchase::Phase::Requested ||
         buy_->phase == Purchase::Phase::Challenged) &&
        h - buy_->last_activity >= timeout)
      buy_.reset();  // next block retries with an untried seller
  }

  const Holding* holding_for_update(const Digest& update_hash) const {
    for (const auto& [dsc, h] : holdings_)
      if (h.update_hash == update_hash) return &h;
    return nullptr;
  }
  const Holding* holding_for_package(const Digest& package_hash) const {
    for (const auto& [dsc, h] : holdings_)
      if (h.package_hash == package_hash) return &h;
    return nullptr;
  }

  DistributorRole role_;
  std::map<Address, Holding> holdings_;
  std::map<Address, ReleaseInfo> releases_;
  std::vector<DeliverySession> sessions_;
  std::vector<Sale> sales_;
  std::optional<Purchase> buy_;
};

// Trusted gateway: runs the delivery protocol on behalf of its devices,
// verifies the distributor's proof, relays the commitment and the final
// file, and claims the hub reward.
class Hub : public Actor {
 public:
  Hub(ActorId id, std::string name, KeyPair keys) : Actor(id, std::move(name), std::move(keys)) {}

  void manage(ActorId device_actor, const Address& device_address) {
    devices_.push_back({device_actor, device_address});
  }

  void on_block(Services& sv) override {
    const LedgerState& ledger = sv.ledger();
    discover_campaigns(sv, ledger);
    for (auto& [key, c] : campaigns_) drive(sv, c);
  }

  void handle(const Envelope& env, Services& sv) override {
    switch (env.kind) {
      case MsgKind::DistributorHello: on_hello(env, sv); break;
      case MsgKind::IdResponse: on_id_response(env, sv); break;
      case MsgKind::ZkProofDelivery: on_proof(env, sv); break;
      case MsgKind::PodForward: on_pod(env, sv); break;
      case MsgKind::PofdForward: on_pofd(env, sv); break;
      default: break;
    }
  }

  bool idle(const Services& sv) const override {
    for (const auto& [key, c] : campaigns_)
      if (c.phase != Phase::Done && c.phase != Phase::Exhausted) return false;
    return true;
  }

  std::size_t installed_count() const {
    std::size_t n = 0;
    for (const auto& [key, c] : campaigns_)
      if (c.phase == Phase::Done) ++n;
    return n;
  }

 private:
  enum class Phase {
    Selecting,
    AwaitHello,
    AwaitDeviceId,
    AwaitProof,
    AwaitPod,
    AwaitKey,
    AwaitPofd,
    Done,
    Exhausted,
  };

  struct ManagedDevice {
    ActorId actor;
    Address address;
  };

  struct Campaign {
    Address dsc;
    Digest update_hash;
    ManagedDevice device;
    Phase phase = Phase::Selecting;
    ActorId distributor = kNoActor;
    Address distributor_address;
    Nonce nonce;
    Bytes challenge;
    Ciphertext update_ct;
    Digest s;
    Signature mfr_sig;
    Bytes update;  // decrypted, hash-checked
    std::set<ActorId> tried;
    std::uint64_t attempts = 0;
    std::uint64_t final_retries = 0;
    bool pofd_submitted = false;
    Height last_activity = 0;
  };

  void discover_campaigns(Services& sv, const LedgerState& ledger) {
    for (const auto& [dsc_addr, dsc] : ledger.all_dscs()) {
      for (const ManagedDevice& dev : devices_) {
        if (!dsc->find(dev.address)) continue;
        auto key = std::make_pair(dsc_addr, dev.address);
        if (campaigns_.count(key)) continue;
        Campaign c;
        c.dsc = dsc_addr;
        c.update_hash = dsc->update_hash;
        c.device = dev;
        c.last_activity = sv.height();
        campaigns_[key] = std::move(c);
      }
    }
  }

  void drive(Services& sv, Campaign& c) {
    if (c.phase == Phase::Done || c.phase == Phase::Exhausted) return;
    const LedgerState& ledger = sv.ledger();
    const DscState* dsc = ledger.dsc_at(c.dsc);
    if (!dsc) return;

    if (c.phase == Phase::AwaitKey) {
      auto r = ledger.published_key_for(c.s);
      if (r) {
        auto plain = sym_decrypt(c.update_ct, *r);
        if (!plain) {
          violation(sv, "DecryptionFailure", {{"device", addr_name(sv, c.device.address)}});
          abort_session(sv, c, "decrypt");
          return;
        }
        if (hash(*plain) != c.update_hash) {
          violation(sv, "update-hash", {{"device", addr_name(sv, c.device.address)}});
          abort_session(sv, c, "hash");
          return;
        }
        c.update = std::move(*plain);
        sv.trace().record(sv.height(), name_, EventKind::UpdateReadyForIoT,
                          {{"device_pk", c.device.address.hex()},
                           {"device", addr_name(sv, c.device.address)},
                           {"update_hash", c.update_hash.hex()}});
        c.phase = Phase::AwaitPofd;
        c.last_activity = sv.height();
        sv.send(id_, c.device.actor, MsgKind::FinalDelivery,
                FinalDeliveryMsg{c.update}.encode());
        return;
      }
    }

    if (c.phase == Phase::AwaitPofd &&
        sv.height() - c.last_activity >= sv.tuning().session_timeout) {
      // we hold the file; nudge the device again rather than re-running the
      // whole session
      if (c.final_retries < sv.tuning().final_delivery_retries) {
        ++c.final_retries;
        c.last_activity = sv.height();
        sv.send(id_, c.device.actor, MsgKind::FinalDelivery, FinalDeliveryMsg{c.update}.encode());
      } else {
        c.phase = Phase::Exhausted;
      }
      return;
    }

    if (c.phase != Phase::Selecting &&
        sv.height() - c.last_activity >= sv.tuning().session_timeout) {
      abort_session(sv, c, "timeout");
      return;
    }

    if (c.phase == Phase::Selecting) {
      if (dsc->expired(sv.height())) {
        c.phase = Phase::Exhausted;
        return;
      }
      // a session that aborted between the reward claim and our key read can
      // resume once the key shows up
      if (c.s != Digest{} && ledger.published_key_for(c.s)) {
        c.phase = Phase::AwaitKey;
        c.last_activity = sv.height();
        return;
      }
      std::vector<ActorId> candidates = sv.dht().lookup(c.update_hash);
      std::erase_if(candidates, [&](ActorId a) { return c.tried.count(a) > 0 || a == id_; });
      if (candidates.empty()) {
        if (!c.tried.empty() && c.attempts < sv.tuning().retry_budget) c.tried.clear();
        return;  // try again next block; new announcers may appear
      }
      // prefer the highest effective score; ties keep announcement order
      const SscState* ssc = ledger.ssc_at(dsc->parent_ssc);
      std::stable_sort(candidates.begin(), candidates.end(), [&](ActorId a, ActorId b) {
        return score_of(sv, ssc, a) > score_of(sv, ssc, b);
      });
      ActorId pick = candidates.front();
      c.distributor = pick;
      c.tried.insert(pick);
      ++c.attempts;
      c.nonce = Nonce::fresh(sv.rng());
      c.phase = Phase::AwaitHello;
      c.last_activity = sv.height();
      sv.send(id_, pick, MsgKind::UpdateRequest,
              UpdateRequestMsg{c.update_hash, c.nonce}.encode());
    }
  }

  std::uint64_t score_of(Services& sv, const SscState* ssc, ActorId actor) const {
    if (!ssc) return 0;
    auto it = actor_addresses_.find(actor);
    if (it == actor_addresses_.end()) return 0;
    return effective_score(*ssc, it->second, sv.height());
  }

  void abort_session(Services& sv, Campaign& c, const std::string& reason) {
    sv.trace().record(sv.height(), name_, EventKind::SessionAborted,
                      {{"device", addr_name(sv, c.device.address)},
                       {"distributor",
                        c.distributor == kNoActor ? "-" : sv.actor_name(c.distributor)},
                       {"reason", reason}});
    c.distributor = kNoActor;
    c.phase = c.attempts >= sv.tuning().retry_budget ? Phase::Exhausted : Phase::Selecting;
    c.last_activity = sv.height();
  }

  Campaign* campaign_awaiting(ActorId distributor, Phase phase) {
    for (auto& [key, c] : campaigns_)
      if (c.distributor == distributor && c.phase == phase) return &c;
    return nullptr;
  }
  Campaign* campaign_for_device(const Address& device, Phase phase) {
    for (auto& [key, c] : campaigns_)
      if (c.device.address == device && c.phase == phase) return &c;
    return nullptr;
  }

  void on_hello(const Envelope& env, Services& sv) {
    auto msg = DistributorHelloMsg::decode(env.payload);
    if (!msg) return;
    Campaign* c = campaign_awaiting(env.from, Phase::AwaitHello);
    if (!c) return;
    // a hello that does not bind our fresh nonce is stale or forged; it is
    // not a step of this session, so it cannot abort it
    if (!verify_sig(msg->distributor_pub,
                    {SigContext::DistributorNonce, {to_bytes(c->nonce.bytes)}}, msg->nonce_sig))
      return;
    auto dist_addr = Address::from_public_key(msg->distributor_pub);
    if (!dist_addr) return;
    actor_addresses_[env.from] = *dist_addr;
    const DscState* dsc = sv.ledger().dsc_at(c->dsc);
    const SscState* ssc = dsc ? sv.ledger().ssc_at(dsc->parent_ssc) : nullptr;
    if (ssc && effective_score(*ssc, *dist_addr, sv.height()) < sv.tuning().score_threshold) {
      abort_session(sv, *c, "score");
      return;
    }
    c->distributor_address = *dist_addr;
    c->challenge = msg->challenge;
    c->phase = Phase::AwaitDeviceId;
    c->last_activity = sv.height();
    sv.send(id_, c->device.actor, MsgKind::IdChallenge, IdChallengeMsg{c->challenge}.encode());
  }

  void on_id_response(const Envelope& env, Services& sv) {
    auto msg = IdResponseMsg::decode(env.payload);
    if (!msg) return;
    auto device = Address::from_public_key(msg->device_pub);
    if (!device) return;
    Campaign* c = campaign_for_device(*device, Phase::AwaitDeviceId);
    if (!c || c->device.actor != env.from) return;
    c->phase = Phase::AwaitProof;
    c->last_activity = sv.height();
    sv.send(id_, c->distributor, MsgKind::IdResponse, env.payload);
  }

  void on_proof(const Envelope& env, Services& sv) {
    auto msg = ZkProofDeliveryMsg::decode(env.payload);
    if (!msg) return;
    Campaign* c = campaign_awaiting(env.from, Phase::AwaitProof);
    if (!c) return;
    const DscState* dsc = sv.ledger().dsc_at(c->dsc);
    if (!dsc) return;
    if (hash(msg->verifying_key.to_bytes()) != dsc->vk_delivery_hash) {
      violation(sv, "vk-hash", {{"distributor", sv.actor_name(env.from)}});
      abort_session(sv, *c, "vk-hash");
      return;
    }
    PublicInputs pub{dsc->update_hash, msg->ciphertext, msg->key_hash};
    if (!sv.zk().verify(msg->verifying_key, pub, msg->proof)) {
      violation(sv, "proof-invalid", {{"distributor", sv.actor_name(env.from)}});
      abort_session(sv, *c, "proof-invalid");
      return;
    }
    c->update_ct = msg->ciphertext;
    c->s = msg->key_hash;
    c->mfr_sig = msg->mfr_sig;
    c->phase = Phase::AwaitPod;
    c->last_activity = sv.height();
    sv.send(id_, c->device.actor, MsgKind::UpdateCommit,
            UpdateCommitMsg{c->update_hash, c->mfr_sig, c->s}.encode());
  }

  void on_pod(const Envelope& env, Services& sv) {
    auto msg = PodForwardMsg::decode(env.payload);
    if (!msg) return;
    auto device = Address::from_public_key(msg->device_pub);
    if (!device) return;
    Campaign* c = campaign_for_device(*device, Phase::AwaitPod);
    if (!c || c->device.actor != env.from || msg->key_hash != c->s) return;
    c->phase = Phase::AwaitKey;
    c->last_activity = sv.height();
    sv.send(id_, c->distributor, MsgKind::PodForward, env.payload);
  }

  void on_pofd(const Envelope& env, Services& sv) {
    auto msg = PofdForwardMsg::decode(env.payload);
    if (!msg) return;
    auto device = Address::from_public_key(msg->device_pub);
    if (!device) return;
    Campaign* c = campaign_for_device(*device, Phase::AwaitPofd);
    if (!c || c->device.actor != env.from) return;
    if (!c->pofd_submitted) {
      c->pofd_submitted = true;
      sv.submit({address_, c->dsc, 0, SubmitPofdCall{*device, msg->pofd}});
    }
    c->phase = Phase::Done;
  }

  std::vector<ManagedDevice> devices_;
  std::map<std::pair<Address, Address>, Campaign> campaigns_;
  std::map<ActorId, Address> actor_addresses_;
};

// Constrained end device. Never touches the ledger or the DHT; trusts its
// hub for transport and checks everything that matters locally: the
// manufacturer signature before committing, and the update hash before
// installing.
class IotDevice : public Actor {
 public:
  IotDevice(ActorId id, std::string name, KeyPair keys, Bytes manufacturer_pub, ActorId hub,
            Address hub_address)
      : Actor(id, std::move(name), std::move(keys)), mfr_pub_(std::move(manufacturer_pub)),
        hub_(hub), hub_address_(hub_address) {}

  const std::optional<Digest>& installed_update_hash() const { return installed_; }

  void handle(const Envelope& env, Services& sv) override {
    // only the paired hub may talk to this device; the claimed origin is
    // spoofable, which is exactly what the injection scenarios exercise
    if (env.from != hub_) return;
    switch (env.kind) {
      case MsgKind::IdChallenge: on_challenge(env, sv); break;
      case MsgKind::UpdateCommit: on_commit(env, sv); break;
      case MsgKind::FinalDelivery: on_final(env, sv); break;
      default: break;
    }
  }

 private:
  void on_challenge(const Envelope& env, Services& sv) {
    auto msg = IdChallengeMsg::decode(env.payload);
    if (!msg) return;
    IdResponseMsg reply;
    reply.device_pub = keys_.public_key;
    if (sv.mode() == RunMode::LegacyLeiba) {
      // vulnerable framing: raw signature over the challenge, no freshness
      reply.sig = sign_raw(keys_.private_key, msg->challenge, SigContext::IdResponse);
    } else {
      Nonce n2 = Nonce::fresh(sv.rng());
      reply.nonce2 = to_bytes(n2.bytes);
      reply.sig = sign(keys_.private_key, {SigContext::IdResponse, {msg->challenge, reply.nonce2}});
    }
    sv.send(id_, env.from, MsgKind::IdResponse, reply.encode());
  }

  void on_commit(const Envelope& env, Services& sv) {
    auto msg = UpdateCommitMsg::decode(env.payload);
    if (!msg) return;
    if (!verify_sig(mfr_pub_, {SigContext::Manufacturer, {to_bytes(msg->update_hash.bytes)}},
                    msg->mfr_sig)) {
      violation(sv, "BadManufacturerSignature", {{"update_hash", msg->update_hash.short_hex()}});
      return;
    }
    commitments_[msg->update_hash].insert(msg->key_hash);
    Signature pod = sign(keys_.private_key, pod_message(msg->update_hash, msg->key_hash));
    sv.send(id_, env.from, MsgKind::PodForward,
            PodForwardMsg{keys_.public_key, msg->update_hash, msg->key_hash, pod}.encode());
  }

  void on_final(const Envelope& env, Services& sv) {
    auto msg = FinalDeliveryMsg::decode(env.payload);
    if (!msg) return;
    Digest update_hash = hash(msg->update);
    auto it = commitments_.find(update_hash);
    if (it == commitments_.end()) {
      if (commitments_.empty())
        violation(sv, "no-commitment");
      else
        violation(sv, "HashMismatch", {{"got", update_hash.short_hex()}});
      return;
    }
    if (!installed_) {
      installed_ = update_hash;
      sv.trace().record(sv.height(), name_, EventKind::UpdateInstalled,
                        {{"device_pk", address_.hex()},
                         {"device", name_},
                         {"update_hash", update_hash.hex()}});
    }
    Signature pofd = sign(keys_.private_key, pofd_message(update_hash, hub_address_));
    sv.send(id_, env.from, MsgKind::PofdForward,
            PofdForwardMsg{keys_.public_key, update_hash, pofd}.encode());
  }

  Bytes mfr_pub_;
  ActorId hub_;
  Address hub_address_;
  std::map<Digest, std::set<Digest>> commitments_;
  std::optional<Digest> installed_;
};

}  // namespace cpsim
