#pragma once

#include "hcodec/degrade.hpp"
#include "hcodec/dual_codec.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace hcodec::cli {

// Everything a run can be configured with. JSON file values override the
// defaults below and command-line flags override the file.
struct RunConfig {
    CodecConfig codec;
    // aggregation parameters used when dynamic mode is switched on
    AggregationConfig aggregation;
    bool dynamic = false;
    std::uint64_t seed = 0;
    std::size_t train_iters = 25;
    std::size_t train_ema_passes = 0;
    ChainConfig chain;

    // codec config with the dynamic switch applied
    CodecConfig resolved_codec() const;
};

RunConfig default_run_config();
RunConfig run_config_from_json(std::string_view json);
RunConfig load_run_config(const std::filesystem::path & path);
std::string run_config_to_json(const RunConfig & cfg);

} // namespace hcodec::cli
