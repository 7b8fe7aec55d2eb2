#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mml/ledger.hpp"

namespace mml {

class ScenarioParseError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Declarative simulator input: one `(tick, action)` entry per line.
//
//   nodes 3
//   seed 42
//   run 30
//   at 0 submit node=0 id=work1
//   at 5 partition a=0 b=1,2
//   at 12 heal
struct ScenarioEvent {
    enum class Kind { submit, partition, heal };
    std::uint64_t tick = 0;
    Kind kind = Kind::submit;
    int node = 0;               // submit
    std::string label;          // submit: work label, becomes the DOI suffix
    std::set<int> group_a;      // partition
    std::set<int> group_b;
};

struct Scenario {
    int node_count = 3;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> run_ticks;  // default derived from events
    std::vector<ScenarioEvent> events;       // sorted by tick
};

Scenario parse_scenario(const std::string& text);

struct SimReport {
    std::uint64_t ticks_run = 0;
    std::optional<std::uint64_t> convergence_tick;  // first tick with equal tips, stable to end
    bool all_confirmed = false;
    std::size_t submitted = 0;
    std::vector<std::uint64_t> node_heights;
    std::vector<std::string> node_tips;  // hex
    std::vector<std::string> chain_checks;  // "ok" or first-bad-height
    std::string to_json() const;
};

// Runs the scenario on a fresh SimNetwork. Submitted registry metadata is
// fabricated deterministically from (seed, label) so identical inputs give
// byte-identical reports. seed_override wins over the file's seed line.
SimReport run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed_override,
                       SimNetwork* out_network = nullptr);

}  // namespace mml
