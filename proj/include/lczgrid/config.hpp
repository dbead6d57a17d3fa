#pragma once

// Run configuration: flat key = value text with section prefixes
// (input.*, tile.*, svf.*, psf.*, rules.*, output.*). CLI flags override
// file values; the merged effective configuration is written to the run
// manifest so any run can be reproduced exactly.

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "lczgrid/morpho.hpp"
#include "lczgrid/rules.hpp"

namespace lczgrid {

struct RunConfig {
    // input paths; empty = not provided
    std::string building_height;
    std::string dsm;
    std::string red;
    std::string nir;
    std::string water;
    std::string reference_lcz;
    std::string candidate_lcz;
    std::string params_csv;

    double tile_size_m = 100.0;
    morpho::MorphoConfig morpho;
    rules::RuleThresholds thresholds;

    std::string output_dir = "lczgrid_out";
    int workers = 0;  // 0 = LCZGRID_THREADS or hardware concurrency

    // Applies one key=value pair; throws UserError on unknown keys or values
    // outside their domain.
    void apply(const std::string& key, const std::string& value);

    // Parses a config file and applies every pair in file order.
    void load_file(const std::string& path);

    // Canonical flat view (sorted keys), the basis of to_json and the hash.
    std::map<std::string, std::string> to_flat_map() const;
    nlohmann::ordered_json to_json() const;
    std::uint64_t config_hash() const;

    void validate() const;
};

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t file_checksum(const std::string& path);
std::string hex64(std::uint64_t v);

}  // namespace lczgrid
