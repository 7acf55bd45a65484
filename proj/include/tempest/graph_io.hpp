#pragma once

// JSON graph specifications and named graph presets.
//
//   {"n": 3, "kind": "amei", "time": "ct",
//    "edges": [{"i": 0, "j": 1, "model": {"type": "markov2", "params": {"q": 1, "r": 2}}}]}
//
// Model types: "markov2" (q = off->on, r = on->off), "coxian" (up, exit,
// down, ret arrays) and "static" ({"on": true|false}).

#include <cstdint>

#include <json.hpp>

#include "tempest/stochastic_graph.hpp"

namespace tempest {

DynamicGraph graph_from_json(const nlohmann::json& spec);
nlohmann::json graph_to_json(const DynamicGraph& graph);

/// Preset graphs: {"preset": "iv", "n", "er_prob", "scale", "seed"},
/// {"preset": "small_world", "n", "r", "rate", "time"},
/// {"preset": "edge_markovian", "n", "q", "r", "time"}.
/// `seed` is used when the spec carries no seed of its own.
DynamicGraph graph_from_config(const nlohmann::json& spec, std::uint64_t seed);

TimeKind parse_time(const std::string& s);
GraphKind parse_kind(const std::string& s);

}  // namespace tempest
