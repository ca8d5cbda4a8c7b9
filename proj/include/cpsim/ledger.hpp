// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cpsim/chain.hpp"
#include "cpsim/contracts.hpp"

namespace cpsim {

struct Transaction {
  Address sender;
  Address target;  // ignored for deploy_ssc
  Amount attached_value = 0;
  Call call;
};

struct PendingTx {
  std::uint64_t seq = 0;
  Transaction tx;
  Height not_before = 0;  // adversary-imposed delay; never a drop
};

struct Receipt {
  std::uint64_t seq = 0;
  Height executed_at = 0;
  bool ok = false;
  TxError error = TxError::None;
  std::optional<Address> created;
};

// Abstract ordered ledger: account balances, hosted contracts, an append-only
// key publication log, and a pending queue executed one block at a time.
// Logical block height is the only clock in the simulation.
class LedgerState {
 public:
  std::function<std::string(const Address&)> name_of;  // trace rendering hook

  void create_account(const Address& addr, Amount balance) {
    balances_[addr] += balance;
    genesis_supply_ += balance;
  }

  Height height() const { return height_; }
  Amount genesis_supply() const { return genesis_supply_; }

  Amount balance(const Address& addr) const {
    auto it = balances_.find(addr);
    return it == balances_.end() ? 0 : it->second;
  }
  const BalanceMap& balances() const { return balances_; }

  const ContractMap& contracts() const { return contracts_; }
  const std::vector<PublishedKey>& published_keys() const { return published_keys_; }
  const std::vector<PendingTx>& pending() const { return pending_; }
  std::vector<PendingTx>& pending_mutable() { return pending_; }  // adversary reorder/delay hook
  const std::vector<Receipt>& receipts() const { return receipts_; }

  // UnknownSender is the only submission-time failure; everything else is
  // deferred to execution so that rejected calls still leave receipts.
  std::optional<std::uint64_t> submit(const Transaction& tx, TraceRecorder* trace = nullptr) {
    if (!balances_.count(tx.sender)) return std::nullopt;
    std::uint64_t seq = next_seq_++;
    pending_.push_back(PendingTx{seq, tx, 0});
    if (trace)
      trace->record(height_, name(tx.sender), EventKind::TxSubmitted,
                    {{"seq", seq},
                     {"call", call_name(tx.call)},
                     {"target", name(tx.target)},
                     {"value", tx.attached_value}});
    return seq;
  }

  // Advances the clock and executes every due pending transaction in queue
  // order. Each transaction is atomic: a failed check rolls back all of its
  // effects, including inner contract-to-contract calls.
  std::vector<Receipt> advance_block(TraceRecorder* trace = nullptr) {
    ++height_;
    std::vector<PendingTx> due;
    std::vector<PendingTx> later;
    for (auto& p : pending_) (p.not_before <= height_ ? due : later).push_back(std::move(p));
    pending_ = std::move(later);

    std::vector<Receipt> results;
    for (const PendingTx& p : due) {
      Receipt r = execute(p, trace);
      if (trace)
        trace->record(height_, name(p.tx.sender), EventKind::TxExecuted,
                      {{"seq", r.seq},
                       {"call", call_name(p.tx.call)},
                       {"ok", r.ok},
                       {"error", to_string(r.error)}});
      receipts_.push_back(r);
      results.push_back(r);
    }
    return results;
  }

  // Unblockable public read surface.
  const SscState* find_ssc(const Address& owner) const {
    for (const auto& [addr, state] : contracts_) {
      const auto* ssc = std::get_if<SscState>(&state);
      if (ssc && ssc->owner == owner) return ssc;
    }
    return nullptr;
  }
  std::optional<Address> find_ssc_address(const Address& owner) const {
    for (const auto& [addr, state] : contracts_) {
      const auto* ssc = std::get_if<SscState>(&state);
      if (ssc && ssc->owner == owner) return addr;
    }
    return std::nullopt;
  }
  const DscState* dsc_at(const Address& addr) const {
    auto it = contracts_.find(addr);
    return it == contracts_.end() ? nullptr : std::get_if<DscState>(&it->second);
  }
  const EscState* esc_at(const Address& addr) const {
    auto it = contracts_.find(addr);
    return it == contracts_.end() ? nullptr : std::get_if<EscState>(&it->second);
  }
  const SscState* ssc_at(const Address& addr) const {
    auto it = contracts_.find(addr);
    return it == contracts_.end() ? nullptr : std::get_if<SscState>(&it->second);
  }
  std::vector<std::pair<Address, const DscState*>> all_dscs() const {
    std::vector<std::pair<Address, const DscState*>> out;
    for (const auto& [addr, state] : contracts_)
      if (const auto* dsc = std::get_if<DscState>(&state)) out.emplace_back(addr, dsc);
    return out;
  }
  std::vector<std::pair<Address, const EscState*>> all_escs() const {
    std::vector<std::pair<Address, const EscState*>> out;
    for (const auto& [addr, state] : contracts_)
      if (const auto* esc = std::get_if<EscState>(&state)) out.emplace_back(addr, esc);
    return out;
  }

  std::optional<SymKey> published_key_for(const Digest& s) const {
    for (const auto& pk : published_keys_)
      if (pk.key_hash == s) return pk.key;
    return std::nullopt;
  }

  std::uint64_t score_of(const Address& ssc_owner, const Address& distributor) const {
    const SscState* ssc = find_ssc(ssc_owner);
    return ssc ? effective_score(*ssc, distributor, height_) : 0;
  }

  // Currency conservation: holds at every height by construction; exposed so
  // the harness can assert it per block.
  bool conserved() const { return total_supply(balances_) == genesis_supply_; }

 private:
  std::string name(const Address& a) const { return name_of ? name_of(a) : a.short_hex(); }

  Receipt execute(const PendingTx& p, TraceRecorder* trace) {
    Receipt r;
    r.seq = p.seq;
    r.executed_at = height_;
    if (balance(p.tx.sender) < p.tx.attached_value) {
      r.ok = false;
      r.error = TxError::InsufficientFunds;
      return r;
    }

    // stage copies; commit only on success
    BalanceMap staged_balances = balances_;
    ContractMap staged_contracts = contracts_;
    std::vector<PublishedKey> staged_keys = published_keys_;
    std::uint64_t staged_seq = contract_seq_;
    std::uint64_t trace_mark = trace ? trace->events().size() : 0;

    staged_balances[p.tx.sender] -= p.tx.attached_value;
    ChainEnv env;
    env.height = height_;
    env.sender = p.tx.sender;
    env.attached_value = p.tx.attached_value;
    env.target = p.tx.target;
    env.balances = &staged_balances;
    env.contracts = &staged_contracts;
    env.published_keys = &staged_keys;
    env.contract_seq = &staged_seq;
    env.trace = trace;
    env.name_of = name_of;

    ExecResult res = execute_call(env, p.tx.call);
    r.ok = res.ok();
    r.error = res.error;
    r.created = res.created;
    if (res.ok()) {
      balances_ = std::move(staged_balances);
      contracts_ = std::move(staged_contracts);
      published_keys_ = std::move(staged_keys);
      contract_seq_ = staged_seq;
    } else if (trace && trace->events().size() != trace_mark) {
      // events emitted before the failing check would misreport effects;
      // entry points only emit after all checks pass, so this cannot happen
      trace->record(height_, "ledger", EventKind::Violation,
                    {{"check", "trace-rollback"}, {"seq", p.seq}});
    }
    return r;
  }

  Height height_ = 0;
  BalanceMap balances_;
  ContractMap contracts_;
  std::vector<PublishedKey> published_keys_;
  std::vector<PendingTx> pending_;
  std::vector<Receipt> receipts_;
  Amount genesis_supply_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t contract_seq_ = 0;
};

}  // namespace cpsim
