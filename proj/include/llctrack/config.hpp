#pragma once

#include <llctrack/error.hpp>
#include <llctrack/particle_tracker.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace llctrack {

/**
 * Flat JSON run configuration. Every key mirrors one tunable; unknown keys
 * are rejected.
 *
 *     {"p": 50, "n": 150, "max_positives": 100, "neighbor_counts": [5, 8, 10],
 *      "lambda": 1, "beta": 0.1, "iterations": 3, "alpha": 2.5,
 *      "particles": 600, "motion_sigmas": [4, 4, 0.01, 0.01, 0.002, 0.001],
 *      "update_interval": 5, "pos_error_threshold": 0.1, "use_threshold": 1e-3,
 *      "occlusion_min_negatives": 2, "inner_radius_factor": 0.1,
 *      "outer_radius_factor": 1.0, "threads": 0, "seed": 0}
 */
inline void apply_config(TrackerConfig& c, const nlohmann::json& j)
{
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "p") c.templates.positives = value.get<int>();
            else if (key == "n") c.templates.negatives = value.get<int>();
            else if (key == "max_positives") c.templates.max_positives = value.get<int>();
            else if (key == "neighbor_counts") c.encoder.neighbor_counts = value.get<std::vector<Eigen::Index>>();
            else if (key == "lambda") c.encoder.lambda = value.get<double>();
            else if (key == "beta") c.encoder.beta = value.get<double>();
            else if (key == "iterations") c.encoder.iterations = value.get<int>();
            else if (key == "alpha") c.alpha = value.get<double>();
            else if (key == "particles") c.particles = value.get<int>();
            else if (key == "motion_sigmas") {
                const auto v = value.get<std::vector<double>>();
                if (v.size() != c.motion.sigmas.size()) {
                    throw Error(ErrorCode::InvalidArgument, "motion_sigmas needs 6 entries");
                }
                std::copy(v.begin(), v.end(), c.motion.sigmas.begin());
            }
            else if (key == "update_interval") c.templates.update_interval = value.get<int>();
            else if (key == "pos_error_threshold") c.templates.pos_error_threshold = value.get<double>();
            else if (key == "use_threshold") c.use_threshold = value.get<double>();
            else if (key == "occlusion_min_negatives") c.occlusion_min_negatives = value.get<int>();
            else if (key == "inner_radius_factor") c.templates.inner_factor = value.get<double>();
            else if (key == "outer_radius_factor") c.templates.outer_factor = value.get<double>();
            else if (key == "threads") c.threads = value.get<int>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, "config key '" + key + "': " + e.what());
        }
    }
}

inline TrackerConfig load_config(const std::filesystem::path& path, TrackerConfig base = {})
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    apply_config(base, j);
    return base;
}

} // namespace llctrack
