#pragma once

#include <cstdint>
#include <string>

#include "uavnes/env.hpp"
#include "uavnes/maddpg.hpp"
#include "uavnes/world.hpp"

namespace uavnes {

struct Config {
  ScenarioConfig scenario;
  EnvParams env;
  maddpg::TrainConfig train;
};

Config default_config();

/// key = value text file; # starts a comment; keys are case-insensitive and
/// mirror the config field names (traffic.*, channel.*, energy.*, reward.*,
/// env.*, train.*). Unknown keys are rejected.
Config load_config_file(const std::string& path);

/// Canonical text form (sorted keys, full precision); hashing this pins the
/// whole configuration in manifests.
std::string config_canonical_text(const Config& config);
std::uint64_t config_hash(const Config& config);

void override_seed(Config& config, std::uint64_t seed);

}  // namespace uavnes
