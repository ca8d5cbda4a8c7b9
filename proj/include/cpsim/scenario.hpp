// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpsim/actors.hpp"
#include "cpsim/services.hpp"

namespace cpsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Declarative adversary rule as it appears in a scenario file. Actor names
// are resolved to scheduler ids when the simulation is built.
struct RuleSpec {
  std::string kind;     // message kind name; empty matches all
  std::string from;     // actor name; empty matches all
  std::string to;       // actor name; empty matches all
  std::string action;   // pass|drop|delay|replay|substitute|reorder_block
  std::uint64_t delay = 1;
  std::uint64_t max = UINT64_MAX;
  std::string payload_hex;  // substitute only
};

struct AdversaryConfig {
  std::vector<RuleSpec> rules;
  bool randomized = false;
  std::uint32_t delay_pct = 10;
  std::uint32_t replay_pct = 10;
  std::uint64_t max_delay_steps = 2;
  bool tx_reorder = false;
  Height tx_max_delay = 0;
};

struct GenesisConfig {
  Amount manufacturer = 1000;
  Amount distributor = 50;
  Amount hub = 10;
  Amount adversary = 100;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::size_t devices = 3;
  std::size_t hubs = 2;
  std::vector<std::size_t> device_hub_assignment;  // empty = round-robin
  std::vector<DistributorRole> distributors;
  Amount reward_distributor = 5;
  Amount reward_hub = 2;
  Amount deposit = 0;  // 0 = exact sufficiency bound
  Height expiry_blocks = 60;
  Height reset_period_blocks = 100;
  Height seed_window_blocks = 3;
  std::uint64_t score_threshold = 0;
  Amount dde_offer = 7;
  Height esc_expiry_blocks = 20;
  std::uint32_t steps_per_block = 4;
  Height max_blocks = 80;
  std::size_t update_size_bytes = 96;
  Height session_timeout_blocks = 4;
  std::uint64_t retry_budget = 8;
  std::uint64_t final_delivery_retries = 4;
  GenesisConfig genesis;
  AdversaryConfig adversary;
  bool honest_release = true;    // the real manufacturer releases an update
  bool attacker_release = false; // the adversary deploys its own release
  RunMode mode = RunMode::Standard;

  std::size_t hub_of_device(std::size_t device) const {
    if (device_hub_assignment.empty()) return hubs ? device % hubs : 0;
    return device_hub_assignment[device];
  }

  void validate() const {
    if (devices == 0 || devices > 256) throw ConfigError("devices must be in 1..256");
    if (hubs == 0 || hubs > 64) throw ConfigError("hubs must be in 1..64");
    if (distributors.size() > 64) throw ConfigError("too many distributors");
    if (!device_hub_assignment.empty()) {
      if (device_hub_assignment.size() != devices)
        throw ConfigError("device_hub_assignment length must equal devices");
      for (std::size_t h : device_hub_assignment)
        if (h >= hubs) throw ConfigError("device_hub_assignment references unknown hub");
    }
    if (update_size_bytes < 32 || update_size_bytes > (1u << 20))
      throw ConfigError("update_size_bytes must be in 32..1048576");
    if (steps_per_block == 0 || steps_per_block > 64)
      throw ConfigError("steps_per_block must be in 1..64");
    if (max_blocks == 0 || max_blocks > 100000) throw ConfigError("max_blocks must be in 1..100000");
    if (expiry_blocks == 0) throw ConfigError("expiry_blocks must be positive");
    if (reset_period_blocks == 0) throw ConfigError("reset_period_blocks must be positive");
    const Amount per_device = reward_distributor + reward_hub;
    if (per_device != 0 && devices > UINT64_MAX / per_device)
      throw ConfigError("reward arithmetic overflows");
    const Amount bound = devices * per_device;
    if (deposit != 0 && deposit < bound)
      throw ConfigError("deposit below the sufficiency bound |targets|*(a_d+a_h)");
    if (honest_release && genesis.manufacturer < (deposit ? deposit : bound))
      throw ConfigError("manufacturer genesis balance cannot fund the deposit");
    for (const RuleSpec& r : adversary.rules) {
      if (r.action != "pass" && r.action != "drop" && r.action != "delay" &&
          r.action != "replay" && r.action != "substitute" && r.action != "reorder_block")
        throw ConfigError("unknown adversary action: " + r.action);
      if (!r.kind.empty() && !msg_kind_from_string(r.kind))
        throw ConfigError("unknown message kind: " + r.kind);
      if (r.action == "substitute" && !from_hex(r.payload_hex))
        throw ConfigError("substitute rule needs valid payload_hex");
    }
  }

  static ScenarioConfig from_json(const nlohmann::json& j) {
    try {
      ScenarioConfig c;
      c.name = j.value("name", c.name);
      c.devices = j.value("devices", c.devices);
      c.hubs = j.value("hubs", c.hubs);
      if (j.contains("device_hub_assignment"))
        c.device_hub_assignment = j.at("device_hub_assignment").get<std::vector<std::size_t>>();
      std::size_t n_dist = j.value("distributors", std::size_t{3});
      c.distributors.assign(n_dist, DistributorRole{});
      if (j.contains("distributor_roles")) {
        const auto& roles = j.at("distributor_roles");
        for (std::size_t i = 0; i < roles.size() && i < c.distributors.size(); ++i) {
          const auto& r = roles[i];
          c.distributors[i].join_offset = r.value("join_offset", std::uint64_t{0});
          c.distributors[i].deliver = r.value("deliver", true);
          c.distributors[i].resell = r.value("resell", true);
          c.distributors[i].withhold_pod = r.value("withhold_pod", false);
        }
      }
      if (j.contains("rewards")) {
        c.reward_distributor = j.at("rewards").value("distributor", c.reward_distributor);
        c.reward_hub = j.at("rewards").value("hub", c.reward_hub);
      }
      c.deposit = j.value("deposit", c.deposit);
      c.expiry_blocks = j.value("expiry_blocks", c.expiry_blocks);
      c.reset_period_blocks = j.value("reset_period_blocks", c.reset_period_blocks);
      c.seed_window_blocks = j.value("seed_window_blocks", c.seed_window_blocks);
      c.score_threshold = j.value("score_threshold", c.score_threshold);
      if (j.contains("dde")) {
        c.dde_offer = j.at("dde").value("offer", c.dde_offer);
        c.esc_expiry_blocks = j.at("dde").value("esc_expiry_blocks", c.esc_expiry_blocks);
      }
      c.steps_per_block = j.value("steps_per_block", c.steps_per_block);
      c.max_blocks = j.value("max_blocks", c.max_blocks);
      c.update_size_bytes = j.value("update_size_bytes", c.update_size_bytes);
      c.session_timeout_blocks = j.value("session_timeout_blocks", c.session_timeout_blocks);
      c.retry_budget = j.value("retry_budget", c.retry_budget);
      c.final_delivery_retries = j.value("final_delivery_retries", c.final_delivery_retries);
      if (j.contains("genesis")) {
        const auto& g = j.at("genesis");
        c.genesis.manufacturer = g.value("manufacturer", c.genesis.manufacturer);
        c.genesis.distributor = g.value("distributor", c.genesis.distributor);
        c.genesis.hub = g.value("hub", c.genesis.hub);
        c.genesis.adversary = g.value("adversary", c.genesis.adversary);
      }
      if (j.contains("adversary")) {
        const auto& a = j.at("adversary");
        c.adversary.randomized = a.value("randomized", c.adversary.randomized);
        c.adversary.delay_pct = a.value("delay_pct", c.adversary.delay_pct);
        c.adversary.replay_pct = a.value("replay_pct", c.adversary.replay_pct);
        c.adversary.max_delay_steps = a.value("max_delay_steps", c.adversary.max_delay_steps);
        c.adversary.tx_reorder = a.value("tx_reorder", c.adversary.tx_reorder);
        c.adversary.tx_max_delay = a.value("tx_max_delay_blocks", c.adversary.tx_max_delay);
        if (a.contains("rules")) {
          for (const auto& r : a.at("rules")) {
            RuleSpec spec;
            spec.kind = r.value("kind", std::string{});
            spec.from = r.value("from", std::string{});
            spec.to = r.value("to", std::string{});
            spec.action = r.value("action", std::string{"pass"});
            spec.delay = r.value("delay", spec.delay);
            spec.max = r.value("max", spec.max);
            spec.payload_hex = r.value("payload_hex", spec.payload_hex);
            c.adversary.rules.push_back(std::move(spec));
          }
        }
      }
      c.honest_release = j.value("honest_release", c.honest_release);
      c.attacker_release = j.value("attacker_release", c.attacker_release);
      std::string mode = j.value("mode", std::string{"standard"});
      if (mode == "standard")
        c.mode = RunMode::Standard;
      else if (mode == "legacy-leiba")
        c.mode = RunMode::LegacyLeiba;
      else
        throw ConfigError("mode must be \"standard\" or \"legacy-leiba\"");
      c.validate();
      return c;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string{"malformed scenario config: "} + e.what());
    }
  }
};

}  // namespace cpsim
