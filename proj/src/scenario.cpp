#include "mml/scenario.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mml/hex.hpp"

namespace mml {

namespace {

std::set<int> parse_node_set(const std::string& text) {
    std::set<int> out;
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        if (!piece.empty()) out.insert(std::stoi(piece));
    }
    return out;
}

std::string kv_value(const std::vector<std::string>& tokens, const std::string& key) {
    const std::string prefix = key + "=";
    for (const auto& t : tokens) {
        if (t.rfind(prefix, 0) == 0) return t.substr(prefix.size());
    }
    throw ScenarioParseError("missing `" + key + "=` argument");
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    Scenario scenario;
    std::stringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::stringstream ls(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        if (tokens.empty()) continue;
        try {
            if (tokens[0] == "nodes") {
                scenario.node_count = std::stoi(tokens.at(1));
            } else if (tokens[0] == "seed") {
                scenario.seed = std::stoull(tokens.at(1));
            } else if (tokens[0] == "run") {
                scenario.run_ticks = std::stoull(tokens.at(1));
            } else if (tokens[0] == "at") {
                ScenarioEvent ev;
                ev.tick = std::stoull(tokens.at(1));
                const std::string& action = tokens.at(2);
                if (action == "submit") {
                    ev.kind = ScenarioEvent::Kind::submit;
                    ev.node = std::stoi(kv_value(tokens, "node"));
                    ev.label = kv_value(tokens, "id");
                } else if (action == "partition") {
                    ev.kind = ScenarioEvent::Kind::partition;
                    ev.group_a = parse_node_set(kv_value(tokens, "a"));
                    ev.group_b = parse_node_set(kv_value(tokens, "b"));
                } else if (action == "heal") {
                    ev.kind = ScenarioEvent::Kind::heal;
                } else {
                    throw ScenarioParseError("unknown action `" + action + "`");
                }
                scenario.events.push_back(std::move(ev));
            } else {
                throw ScenarioParseError("unknown directive `" + tokens[0] + "`");
            }
        } catch (const ScenarioParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ScenarioParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    std::stable_sort(scenario.events.begin(), scenario.events.end(),
                     [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.tick < b.tick; });
    if (scenario.node_count < 1) throw ScenarioParseError("nodes must be >= 1");
    return scenario;
}

namespace {

// Deterministic signed fixture for one scenario submission.
RegistryMetadata fabricate_registration(std::uint64_t seed, const std::string& label,
                                        crypto::KeyPair* out_keys) {
    const std::string seed_text = "mml-sim/" + std::to_string(seed) + "/" + label;
    const crypto::Digest key_seed = crypto::sha256(seed_text);
    crypto::KeyPair keys = crypto::keypair_from_seed(key_seed);

    CreationMetadata unit;
    std::string suffix;
    for (char c : label) {
        const auto lc = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if ((lc >= 'a' && lc <= 'z') || (lc >= '0' && lc <= '9') || lc == '.' || lc == '-') {
            suffix.push_back(lc);
        }
    }
    if (suffix.empty()) suffix = "work";
    suffix = "sim-" + suffix;
    unit.identifier = *Identifier::make("10.9999", suffix);
    unit.payload.entries = {{"title", label}, {"source", "simulator"}};
    unit.work_hash = hash_work(crypto::sha256(seed_text + "/work"));
    unit = sign_creation(std::move(unit), keys.secret_key, keys.public_key, "sim-" + label, 0);

    RegistryMetadata rm = derive_registry(unit, std::nullopt, std::nullopt, keys.secret_key,
                                          keys.public_key, "sim-" + label, 0);
    if (out_keys) *out_keys = keys;
    return rm;
}

}  // namespace

std::string SimReport::to_json() const {
    nlohmann::ordered_json j;
    j["ticks_run"] = ticks_run;
    if (convergence_tick) {
        j["convergence_tick"] = *convergence_tick;
    } else {
        j["convergence_tick"] = nullptr;
    }
    j["submitted"] = submitted;
    j["all_confirmed"] = all_confirmed;
    j["node_heights"] = node_heights;
    j["node_tips"] = node_tips;
    j["chain_checks"] = chain_checks;
    return j.dump(2);
}

SimReport run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed_override,
                       SimNetwork* out_network) {
    SimConfig config;
    config.node_count = scenario.node_count;
    config.seed = seed_override.value_or(scenario.seed);
    SimNetwork network(config);

    std::uint64_t last_event_tick = 0;
    for (const auto& ev : scenario.events) last_event_tick = std::max(last_event_tick, ev.tick);
    const std::uint64_t total_ticks =
        scenario.run_ticks.value_or(last_event_tick + 3 * static_cast<std::uint64_t>(scenario.node_count) +
                                    config.finality_depth + 2);

    SimReport report;
    std::vector<TxId> submitted_txids;
    std::size_t next_event = 0;
    std::optional<std::uint64_t> convergence_tick;
    for (std::uint64_t t = 0; t < total_ticks; ++t) {
        while (next_event < scenario.events.size() && scenario.events[next_event].tick == t) {
            const auto& ev = scenario.events[next_event];
            switch (ev.kind) {
                case ScenarioEvent::Kind::submit: {
                    crypto::KeyPair keys;
                    const RegistryMetadata rm =
                        fabricate_registration(config.seed, ev.label, &keys);
                    submitted_txids.push_back(network.submit(rm, keys.secret_key, keys.public_key,
                                                             TxRecipient::self_addressed,
                                                             "sim-" + ev.label, ev.node));
                    break;
                }
                case ScenarioEvent::Kind::partition:
                    network.partition(ev.group_a, ev.group_b);
                    break;
                case ScenarioEvent::Kind::heal:
                    network.heal();
                    break;
            }
            ++next_event;
        }
        network.tick();
        if (network.converged() && network.node(0).chain_height() > 0) {
            if (!convergence_tick) convergence_tick = network.now();
        } else {
            convergence_tick = std::nullopt;
        }
    }

    report.ticks_run = total_ticks;
    report.convergence_tick = convergence_tick;
    report.submitted = submitted_txids.size();
    report.all_confirmed = true;
    for (const auto& txid : submitted_txids) {
        bool everywhere = true;
        for (int n = 0; n < network.node_count(); ++n) {
            if (!network.node(n).find_transaction(txid)) everywhere = false;
        }
        if (!everywhere) report.all_confirmed = false;
    }
    for (int n = 0; n < network.node_count(); ++n) {
        report.node_heights.push_back(network.node(n).chain_height());
        report.node_tips.push_back(hex_encode(network.node(n).tip_hash()));
        auto bad = verify_chain(network.node(n).best_chain());
        report.chain_checks.push_back(bad ? "first-bad-height=" + std::to_string(*bad) : "ok");
    }
    if (out_network) *out_network = std::move(network);
    return report;
}

}  // namespace mml
