// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <string>
#include <vector>

#include "cpsim/trace.hpp"

namespace cpsim {

// Result of one trace property check. When the property fails, the
// counterexample holds just enough of the trace to falsify it by inspection.
struct LemmaReport {
  std::string name;
  bool holds = true;
  std::vector<TraceEvent> counterexample;
};

namespace detail {
inline std::string field(const TraceEvent& e, const char* key) {
  auto it = e.data.find(key);
  return it != e.data.end() && it->is_string() ? it->get<std::string>() : std::string{};
}
}  // namespace detail

// Every distributor payment must be preceded by that distributor's proof
// generation for the same device.
inline LemmaReport check_lemma_payment_only_if_proof(const std::vector<TraceEvent>& trace) {
  LemmaReport report{"PaymentOnlyIfGenerateProof"};
  for (std::size_t j = 0; j < trace.size(); ++j) {
    const TraceEvent& pay = trace[j];
    if (pay.kind != EventKind::PaymentToD) continue;
    const std::string pk_d = detail::field(pay, "pk_d");
    const std::string device = detail::field(pay, "device_pk");
    bool found = false;
    for (std::size_t i = 0; i < j && !found; ++i) {
      const TraceEvent& gen = trace[i];
      found = gen.kind == EventKind::GenProof && detail::field(gen, "pk_d") == pk_d &&
              detail::field(gen, "device_pk") == device;
    }
    if (!found) {
      report.holds = false;
      report.counterexample.push_back(pay);
    }
  }
  return report;
}

// Every update that became ready for a device implies a payment and a proof
// generation by one and the same distributor for that device and update.
inline LemmaReport check_lemma_always_paid(const std::vector<TraceEvent>& trace) {
  LemmaReport report{"AlwaysPaidIfUpdateReady"};
  for (const TraceEvent& ready : trace) {
    if (ready.kind != EventKind::UpdateReadyForIoT) continue;
    const std::string device = detail::field(ready, "device_pk");
    const std::string update = detail::field(ready, "update_hash");
    bool found = false;
    for (const TraceEvent& pay : trace) {
      if (pay.kind != EventKind::PaymentToD || detail::field(pay, "device_pk") != device)
        continue;
      const std::string pk_d = detail::field(pay, "pk_d");
      for (const TraceEvent& gen : trace) {
        if (gen.kind == EventKind::GenProof && detail::field(gen, "pk_d") == pk_d &&
            detail::field(gen, "device_pk") == device &&
            detail::field(gen, "update_hash") == update) {
          found = true;
          break;
        }
      }
      if (found) break;
    }
    if (!found) {
      report.holds = false;
      report.counterexample.push_back(ready);
    }
  }
  return report;
}

// At most one distributor payment per device per delivery contract.
inline LemmaReport check_lemma_max_one_payment(const std::vector<TraceEvent>& trace) {
  LemmaReport report{"MaxOnePaymentForOneIoT"};
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].kind != EventKind::PaymentToD) continue;
    for (std::size_t j = i + 1; j < trace.size(); ++j) {
      if (trace[j].kind != EventKind::PaymentToD) continue;
      if (detail::field(trace[i], "device_pk") != detail::field(trace[j], "device_pk")) continue;
      if (detail::field(trace[i], "contract") != detail::field(trace[j], "contract")) continue;
      report.holds = false;
      report.counterexample.push_back(trace[i]);
      report.counterexample.push_back(trace[j]);
    }
  }
  return report;
}

inline std::vector<LemmaReport> check_all_lemmas(const std::vector<TraceEvent>& trace) {
  return {check_lemma_payment_only_if_proof(trace), check_lemma_always_paid(trace),
          check_lemma_max_one_payment(trace)};
}

}  // namespace cpsim
