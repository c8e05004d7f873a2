#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coinworld/agent.hpp"
#include "coinworld/neural.hpp"

namespace coinworld {

// Checkpoints are JSON: agent config, vocabulary checksum (guards against
// loading weights over a mismatched vocabulary), epoch tag, parameters as
// base64 of little-endian float64 (column-major), and optional Adam state.
struct Checkpoint {
    AgentConfig config;
    uint64_t vocab_checksum = 0;
    int epoch = 0;
    std::vector<std::pair<std::string, nn::Matrix>> params;

    bool has_adam = false;
    nn::AdamConfig adam_config;
    long adam_steps = 0;
    std::vector<nn::Matrix> adam_m;
    std::vector<nn::Matrix> adam_v;
};

void save_checkpoint(const std::string& path, const Agent& agent, const nn::Adam* adam,
                     int epoch);
Checkpoint load_checkpoint(const std::string& path);

// Builds a fresh agent for the checkpoint's config and installs its weights.
// Throws if the vocabulary checksum does not match.
Agent agent_from_checkpoint(const Checkpoint& ckpt, const Vocabulary& vocab);

// Restores optimizer state saved alongside the weights (shapes must match).
nn::Adam adam_from_checkpoint(const Checkpoint& ckpt, const nn::ParameterSet& params);

nlohmann::ordered_json agent_config_to_json(const AgentConfig& cfg);
AgentConfig agent_config_from_json(const nlohmann::json& j);

// base64 helpers (standard alphabet, '=' padding), exposed for tests
std::string base64_encode(const unsigned char* data, size_t n);
std::vector<unsigned char> base64_decode(const std::string& text);

}  // namespace coinworld
