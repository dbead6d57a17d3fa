#include "lczgrid/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lczgrid {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (...) {
        throw UserError("config: bad numeric value for " + key + ": '" + value + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    if (v != std::rint(v)) throw UserError("config: " + key + " must be an integer");
    return static_cast<int>(v);
}

std::string format_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
    if (key == "input.building_height") building_height = value;
    else if (key == "input.dsm") dsm = value;
    else if (key == "input.red") red = value;
    else if (key == "input.nir") nir = value;
    else if (key == "input.water") water = value;
    else if (key == "input.reference_lcz") reference_lcz = value;
    else if (key == "input.candidate_lcz") candidate_lcz = value;
    else if (key == "input.params_csv") params_csv = value;
    else if (key == "tile.size_m") tile_size_m = parse_double(key, value);
    else if (key == "tile.min_valid_fraction") morpho.min_valid_fraction = parse_double(key, value);
    else if (key == "footprint_threshold_m") morpho.footprint_threshold = parse_double(key, value);
    else if (key == "svf.n_azimuths") morpho.svf.n_azimuths = parse_int(key, value);
    else if (key == "svf.max_radius_m") morpho.svf.max_radius = parse_double(key, value);
    else if (key == "svf.step_m") morpho.svf.step = parse_double(key, value);
    else if (key == "psf.ndvi_threshold") morpho.ndvi_threshold = parse_double(key, value);
    else if (key == "output.dir") output_dir = value;
    else if (key == "workers") workers = parse_int(key, value);
    else if (key.rfind("rules.", 0) == 0) {
        auto kv = thresholds.to_map();
        const std::string name = key.substr(6);
        if (!kv.count(name)) throw UserError("config: unknown rules threshold '" + name + "'");
        kv[name] = parse_double(key, value);
        thresholds = rules::RuleThresholds::from_map(kv);
    } else {
        throw UserError("config: unknown key '" + key + "'");
    }
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UserError("config: " + path + ":" + std::to_string(lineno) +
                            ": expected key = value");
        try {
            apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const UserError& e) {
            throw UserError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::map<std::string, std::string> RunConfig::to_flat_map() const {
    std::map<std::string, std::string> m;
    m["input.building_height"] = building_height;
    m["input.dsm"] = dsm;
    m["input.red"] = red;
    m["input.nir"] = nir;
    m["input.water"] = water;
    m["input.reference_lcz"] = reference_lcz;
    m["input.candidate_lcz"] = candidate_lcz;
    m["input.params_csv"] = params_csv;
    m["tile.size_m"] = format_num(tile_size_m);
    m["tile.min_valid_fraction"] = format_num(morpho.min_valid_fraction);
    m["footprint_threshold_m"] = format_num(morpho.footprint_threshold);
    m["svf.n_azimuths"] = std::to_string(morpho.svf.n_azimuths);
    m["svf.max_radius_m"] = format_num(morpho.svf.max_radius);
    m["svf.step_m"] = format_num(morpho.svf.step);
    m["psf.ndvi_threshold"] = format_num(morpho.ndvi_threshold);
    for (const auto& [k, v] : thresholds.to_map()) m["rules." + k] = format_num(v);
    m["output.dir"] = output_dir;
    m["workers"] = std::to_string(workers);
    return m;
}

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : to_flat_map()) j[k] = v;
    return j;
}

std::uint64_t RunConfig::config_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [k, v] : to_flat_map()) {
        h = fnv1a64(k.data(), k.size(), h);
        h = fnv1a64("=", 1, h);
        h = fnv1a64(v.data(), v.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    return h;
}

void RunConfig::validate() const {
    if (!(tile_size_m > 0)) throw UserError("tile.size_m must be positive");
    if (!(morpho.min_valid_fraction >= 0 && morpho.min_valid_fraction <= 1))
        throw UserError("tile.min_valid_fraction must be in [0,1]");
    if (!(morpho.ndvi_threshold >= -1 && morpho.ndvi_threshold <= 1))
        throw UserError("psf.ndvi_threshold must be in [-1,1]");
    if (morpho.svf.n_azimuths < 4) throw UserError("svf.n_azimuths must be >= 4");
    if (!(morpho.svf.max_radius > 0)) throw UserError("svf.max_radius_m must be positive");
    if (!(morpho.svf.step > 0)) throw UserError("svf.step_m must be positive");
    if (workers < 0) throw UserError("workers must be >= 0");
    thresholds.check();
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for checksumming");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof(buf));
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace lczgrid
