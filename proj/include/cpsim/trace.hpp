// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpsim/bytes.hpp"

namespace cpsim {

using Height = std::uint64_t;

enum class EventKind {
  MessageSent,
  MessageDelivered,
  AdversaryAction,
  SeedServed,
  TxSubmitted,
  TxExecuted,
  ContractDeployed,
  PaymentToD,
  PaymentToH,
  EscPaid,
  GenProof,
  DdeProofGenerated,
  UpdateReadyForIoT,
  UpdateInstalled,
  KeyPublished,
  ScoreUpdated,
  SessionAborted,
  Violation,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::MessageSent: return "MessageSent";
    case EventKind::MessageDelivered: return "MessageDelivered";
    case EventKind::AdversaryAction: return "AdversaryAction";
    case EventKind::SeedServed: return "SeedServed";
    case EventKind::TxSubmitted: return "TxSubmitted";
    case EventKind::TxExecuted: return "TxExecuted";
    case EventKind::ContractDeployed: return "ContractDeployed";
    case EventKind::PaymentToD: return "PaymentToD";
    case EventKind::PaymentToH: return "PaymentToH";
    case EventKind::EscPaid: return "EscPaid";
    case EventKind::GenProof: return "GenProof";
    case EventKind::DdeProofGenerated: return "DdeProofGenerated";
    case EventKind::UpdateReadyForIoT: return "UpdateReadyForIoT";
    case EventKind::UpdateInstalled: return "UpdateInstalled";
    case EventKind::KeyPublished: return "KeyPublished";
    case EventKind::ScoreUpdated: return "ScoreUpdated";
    case EventKind::SessionAborted: return "SessionAborted";
    case EventKind::Violation: return "Violation";
  }
  return "?";
}

// One totally ordered record per observable action: message, contract
// execution, payment, install, violation. Field order in `data` is fixed by
// insertion, so serialized traces from equal (config, seed) runs compare
// byte-for-byte.
struct TraceEvent {
  std::uint64_t seq = 0;
  Height height = 0;
  std::string actor;
  EventKind kind = EventKind::MessageSent;
  nlohmann::ordered_json data;

  std::string line() const {
    nlohmann::ordered_json j;
    j["seq"] = seq;
    j["height"] = height;
    j["actor"] = actor;
    j["event"] = to_string(kind);
    j["data"] = data;
    return j.dump();
  }
};

class TraceRecorder {
 public:
  TraceEvent& record(Height height, std::string actor, EventKind kind,
                     nlohmann::ordered_json data = nlohmann::ordered_json::object()) {
    TraceEvent ev;
    ev.seq = events_.size();
    ev.height = height;
    ev.actor = std::move(actor);
    ev.kind = kind;
    ev.data = std::move(data);
    events_.push_back(std::move(ev));
    return events_.back();
  }

  const std::vector<TraceEvent>& events() const { return events_; }

  std::size_t count(EventKind kind) const {
    std::size_t n = 0;
    for (const auto& e : events_)
      if (e.kind == kind) ++n;
    return n;
  }

  std::vector<const TraceEvent*> all(EventKind kind) const {
    std::vector<const TraceEvent*> out;
    for (const auto& e : events_)
      if (e.kind == kind) out.push_back(&e);
    return out;
  }

  void write(std::ostream& os) const {
    for (const auto& e : events_) os << e.line() << '\n';
  }

  std::string dump() const {
    std::string out;
    for (const auto& e : events_) {
      out += e.line();
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<TraceEvent> events_;
};

}  // namespace cpsim
