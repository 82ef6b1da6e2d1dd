/**
 * @brief Serialization: configuration and trajectory CSVs with
 * bit-exact double round-trips, plus JSON manifests.
 *
 * Doubles are printed with %.17g (shortest form that always
 * round-trips) and parsed with strtod, so write → read → write is
 * byte-stable. Manifests use JSON objects with lexicographically sorted
 * keys; nothing time-dependent goes into sample or analysis manifests
 * (only trajectory manifests carry wall-clock, which is why analysis
 * summaries never embed trajectory manifests verbatim).
 */
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <loggas/dynamics.hpp>
#include <loggas/errors.hpp>
#include <loggas/geometry.hpp>

namespace loggas::io {

using json = nlohmann::ordered_json;

/// Shortest decimal form of a double that parses back bit-exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IOError("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw IOError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open for reading: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IOError("read failed: " + path.string());
    return buf.str();
}

inline void write_json_file(const std::filesystem::path& path,
                            const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw IOError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Windows and configurations
// ---------------------------------------------------------------------------

inline json window_to_json(const Window& w) {
    json j;
    if (w.kind == Window::Kind::disk) {
        j["shape"] = "disk";
        j["radius"] = w.radius;
    } else {
        j["shape"] = "rectangle";
        j["half_width"] = w.half_width;
        j["half_height"] = w.half_height;
    }
    j["center"] = {w.center.re, w.center.im};
    return j;
}

inline Window window_from_json(const json& j) {
    if (!j.is_object() || !j.contains("shape"))
        throw IOError("window JSON: missing 'shape'");
    Point c{0.0, 0.0};
    if (j.contains("center")) {
        c.re = j.at("center").at(0).get<double>();
        c.im = j.at("center").at(1).get<double>();
    }
    const std::string shape = j.at("shape").get<std::string>();
    if (shape == "disk")
        return Window::disk(j.at("radius").get<double>(), c);
    if (shape == "rectangle")
        return Window::rectangle(j.at("half_width").get<double>(),
                                 j.at("half_height").get<double>(), c);
    throw IOError("window JSON: unknown shape '" + shape + "'");
}

/// One point per row under a `re,im` header.
inline std::string configuration_csv(const Configuration& config) {
    std::string out = "re,im\n";
    for (const Point& p : config.points()) {
        out += format_double(p.re);
        out += ',';
        out += format_double(p.im);
        out += '\n';
    }
    return out;
}

inline Configuration parse_configuration_csv(const std::string& csv,
                                             const Window& window,
                                             const ConfigMeta& meta) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "re,im")
        throw IOError("configuration CSV: expected header 're,im'");
    std::vector<Point> pts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw IOError("configuration CSV: malformed row '" + line + "'");
        char* end = nullptr;
        const double re = std::strtod(line.c_str(), &end);
        const double im = std::strtod(line.c_str() + comma + 1, &end);
        pts.push_back({re, im});
    }
    return Configuration(std::move(pts), window, meta);
}

/// Sidecar manifest of one stored configuration.
inline json configuration_manifest(const Configuration& config) {
    json j;
    j["field"] = config.meta().field;
    j["seed"] = config.meta().seed;
    j["N"] = config.points().size();
    j["window"] = window_to_json(config.window());
    return j;
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// Thinned frames as rows `t,particle,re,im`, frame-major.
inline std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t,particle,re,im\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const std::string t = format_double(traj.times[k]);
        for (std::size_t i = 0; i < traj.frames[k].size(); ++i) {
            out += t;
            out += ',';
            out += std::to_string(i);
            out += ',';
            out += format_double(traj.frames[k][i].re);
            out += ',';
            out += format_double(traj.frames[k][i].im);
            out += '\n';
        }
    }
    return out;
}

/// Everything about a run except the frames; wall_seconds is the one
/// non-reproducible entry (kept out of analysis summaries by design).
inline json trajectory_manifest(const Trajectory& traj) {
    json j;
    j["scheme"] = traj.scheme;
    j["drift"] = traj.drift_kind;
    j["truncation_radius"] =
        std::isfinite(traj.truncation_radius)
            ? json(traj.truncation_radius)
            : json("all");
    j["confinement_strength"] = traj.confinement_strength;
    j["dt"] = traj.dt;
    j["thin"] = traj.thin;
    j["frames"] = traj.frames.size();
    j["particles"] = traj.n_particles();
    j["seed"] = traj.seed;
    j["capped_steps"] = traj.capped_steps;
    j["min_pair_distance"] = traj.min_pair_distance;
    j["complete"] = !traj.aborted;
    if (traj.aborted) j["abort_reason"] = traj.abort_reason;
    j["wall_seconds"] = traj.wall_seconds;
    return j;
}

/// Rebuild a Trajectory from its CSV and manifest.
inline Trajectory parse_trajectory(const std::string& csv,
                                   const json& manifest) {
    Trajectory traj;
    traj.scheme = manifest.at("scheme").get<std::string>();
    traj.drift_kind = manifest.at("drift").get<std::string>();
    const auto& tr = manifest.at("truncation_radius");
    traj.truncation_radius = tr.is_string()
                                 ? std::numeric_limits<double>::infinity()
                                 : tr.get<double>();
    traj.confinement_strength =
        manifest.at("confinement_strength").get<double>();
    traj.dt = manifest.at("dt").get<double>();
    traj.thin = manifest.at("thin").get<std::uint64_t>();
    traj.seed = manifest.at("seed").get<std::uint64_t>();
    traj.capped_steps = manifest.at("capped_steps").get<std::uint64_t>();
    traj.min_pair_distance = manifest.at("min_pair_distance").get<double>();
    traj.aborted = !manifest.at("complete").get<bool>();
    if (manifest.contains("abort_reason"))
        traj.abort_reason = manifest.at("abort_reason").get<std::string>();
    traj.wall_seconds = manifest.at("wall_seconds").get<double>();

    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "t,particle,re,im")
        throw IOError("trajectory CSV: expected header 't,particle,re,im'");
    const std::size_t n =
        manifest.at("particles").get<std::size_t>();
    std::vector<Point> frame;
    double frame_t = 0.0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const char* s = line.c_str();
        char* end = nullptr;
        const double t = std::strtod(s, &end);
        if (end == s || *end != ',')
            throw IOError("trajectory CSV: malformed row '" + line + "'");
        s = end + 1;
        const long particle = std::strtol(s, &end, 10);
        if (*end != ',')
            throw IOError("trajectory CSV: malformed row '" + line + "'");
        s = end + 1;
        const double re = std::strtod(s, &end);
        if (*end != ',')
            throw IOError("trajectory CSV: malformed row '" + line + "'");
        s = end + 1;
        const double im = std::strtod(s, &end);
        if (frame.empty()) {
            frame_t = t;
        } else if (t != frame_t) {
            throw IOError("trajectory CSV: frame interleaving at t = " +
                          std::to_string(t));
        }
        if (static_cast<std::size_t>(particle) != frame.size())
            throw IOError("trajectory CSV: particle order broken at t = " +
                          std::to_string(t));
        frame.push_back({re, im});
        if (frame.size() == n) {
            traj.times.push_back(frame_t);
            traj.frames.push_back(frame);
            frame.clear();
        }
    }
    if (!frame.empty())
        throw IOError("trajectory CSV: trailing partial frame");
    if (traj.frames.size() !=
        manifest.at("frames").get<std::size_t>())
        throw IOError("trajectory CSV: frame count disagrees with manifest");
    return traj;
}

}  // namespace loggas::io
