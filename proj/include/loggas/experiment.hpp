/**
 * @brief Declarative experiment runner: a strict JSON config describes
 * a point-field family, optional dynamics, and analysis requests; the
 * subcommand drivers expand it into deterministic artifact directories.
 *
 * Reproducibility rules:
 *   - every run is a pure function of (config, tool version): replica k
 *     uses seed_k = hash64(base_seed, k); inside a simulated replica,
 *     the initial configuration draws from hash64(seed_k, 1) and the
 *     integrator from hash64(seed_k, 2), so any replica can be replayed
 *     alone;
 *   - replicas execute in a worker pool but results land in per-index
 *     slots and all files and summaries are written in index order, so
 *     outputs are byte-identical for any --threads value;
 *   - unknown config keys are rejected, never ignored.
 */
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <loggas/dynamics.hpp>
#include <loggas/errors.hpp>
#include <loggas/geometry.hpp>
#include <loggas/io.hpp>
#include <loggas/observables.hpp>
#include <loggas/palm.hpp>
#include <loggas/rng.hpp>
#include <loggas/sampling.hpp>

namespace loggas {

inline constexpr const char* kToolName = "loggas";
inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

using io::json;

/// Strict-schema guard: every present key must be in the allow-list.
inline void require_known_keys(const json& j, const std::string& where,
                               std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw ConfigError(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
T get_required(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key))
        throw ConfigError(where + ": missing required key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

template <typename T>
T get_optional(const json& j, const std::string& where, const char* key,
               T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

/// Run fn(0..n-1) on a pool of `threads` workers. Results must go into
/// per-index slots; the first exception wins and is rethrown after all
/// workers drain.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (first_error) return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned width = std::min<std::size_t>(threads, n);
    pool.reserve(width);
    for (unsigned t = 0; t < width; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

/// Which equilibrium family supplies configurations.
struct FieldSpec {
    enum class Kind { ginibre, poisson, gibbs };

    Kind kind = Kind::ginibre;
    int N = 64;                          ///< ginibre
    double intensity = 1.0;              ///< poisson
    Window window = Window::disk(8.0);   ///< poisson / gibbs
    std::string psi = "gaussian_softcore";  ///< gibbs pair potential name
    double amplitude = 1.0;              ///< gibbs Ψ amplitude
    double beta = 2.0;                   ///< gibbs inverse temperature
    double activity = 0.3;               ///< gibbs grand-canonical activity
    double cutoff = 6.0;                 ///< gibbs interaction cutoff
    std::uint64_t steps = 20000;         ///< gibbs MCMC proposals

    [[nodiscard]] const char* kind_name() const {
        switch (kind) {
            case Kind::ginibre: return "ginibre";
            case Kind::poisson: return "poisson";
            case Kind::gibbs: return "gibbs";
        }
        return "?";
    }

    [[nodiscard]] io::json to_json() const {
        io::json j;
        j["kind"] = kind_name();
        if (kind == Kind::ginibre) {
            j["N"] = N;
        } else {
            if (kind == Kind::poisson) j["intensity"] = intensity;
            if (kind == Kind::gibbs) {
                j["psi"] = psi;
                j["amplitude"] = amplitude;
                j["beta"] = beta;
                j["activity"] = activity;
                j["cutoff"] = cutoff;
                j["steps"] = steps;
            }
            j["window"] = io::window_to_json(window);
        }
        return j;
    }

    static FieldSpec from_json(const io::json& j) {
        FieldSpec f;
        const std::string where = "field";
        const auto kind =
            detail::get_required<std::string>(j, where, "kind");
        if (kind == "ginibre") {
            detail::require_known_keys(j, where, {"kind", "N"});
            f.kind = Kind::ginibre;
            f.N = detail::get_required<int>(j, where, "N");
            if (f.N < 1) throw ConfigError("field.N: must be >= 1");
        } else if (kind == "poisson") {
            detail::require_known_keys(j, where,
                                       {"kind", "intensity", "window"});
            f.kind = Kind::poisson;
            f.intensity =
                detail::get_required<double>(j, where, "intensity");
            if (!(f.intensity > 0.0))
                throw ConfigError("field.intensity: must be > 0");
        } else if (kind == "gibbs") {
            detail::require_known_keys(
                j, where,
                {"kind", "psi", "amplitude", "beta", "activity", "cutoff",
                 "steps", "window"});
            f.kind = Kind::gibbs;
            f.psi = detail::get_optional<std::string>(j, where, "psi",
                                                      "gaussian_softcore");
            if (f.psi != "gaussian_softcore")
                throw ConfigError("field.psi: unknown potential '" + f.psi +
                                  "' (supported: gaussian_softcore)");
            f.amplitude =
                detail::get_optional<double>(j, where, "amplitude", 1.0);
            f.beta = detail::get_optional<double>(j, where, "beta", 2.0);
            f.activity =
                detail::get_required<double>(j, where, "activity");
            f.cutoff = detail::get_optional<double>(j, where, "cutoff", 6.0);
            f.steps = detail::get_optional<std::uint64_t>(j, where, "steps",
                                                          20000);
        } else {
            throw ConfigError(
                "field.kind: must be one of ginibre | poisson | gibbs");
        }
        if (f.kind != Kind::ginibre) {
            if (!j.contains("window"))
                throw ConfigError("field.window: required for " + kind);
            try {
                f.window = io::window_from_json(j.at("window"));
            } catch (const IOError& e) {
                throw ConfigError(std::string("field.window: ") + e.what());
            }
        }
        return f;
    }

    [[nodiscard]] Configuration sample(std::uint64_t seed) const {
        switch (kind) {
            case Kind::ginibre: return sample_ginibre(N, seed);
            case Kind::poisson:
                return sample_poisson(intensity, window, seed);
            case Kind::gibbs:
                return sample_gibbs(
                    GibbsPotential::gaussian_softcore(amplitude, beta,
                                                      activity, cutoff),
                    window, steps, seed);
        }
        throw ConfigError("field: invalid kind");
    }
};

/// Dynamics section: a DriftSpec plus integration parameters.
struct DynamicsSpec {
    DriftSpec drift = DriftSpec::free_motion();
    double dt = 1e-3;
    double T = 1.0;
    std::uint64_t thin = 1;

    [[nodiscard]] io::json to_json() const {
        io::json j;
        j["drift"] = drift.kind_name();
        j["truncation_radius"] = std::isfinite(drift.truncation_radius)
                                     ? io::json(drift.truncation_radius)
                                     : io::json("all");
        if (drift.kind == DriftSpec::Kind::coulomb_confined)
            j["confinement"] = drift.confinement_strength;
        if (drift.kind == DriftSpec::Kind::gibbs_gradient) {
            j["amplitude"] = drift.gibbs_amplitude;
            j["beta"] = drift.gibbs_beta;
        }
        j["dt"] = dt;
        j["T"] = T;
        j["thin"] = thin;
        return j;
    }

    static DynamicsSpec from_json(const io::json& j) {
        const std::string where = "dynamics";
        detail::require_known_keys(j, where,
                                   {"drift", "truncation_radius",
                                    "confinement", "amplitude", "beta", "dt",
                                    "T", "thin"});
        DynamicsSpec d;
        const auto kind =
            detail::get_required<std::string>(j, where, "drift");
        double truncation = std::numeric_limits<double>::infinity();
        if (j.contains("truncation_radius")) {
            const auto& tr = j.at("truncation_radius");
            if (tr.is_string()) {
                if (tr.get<std::string>() != "all")
                    throw ConfigError(
                        "dynamics.truncation_radius: must be a positive "
                        "number or \"all\"");
            } else if (tr.is_number()) {
                truncation = tr.get<double>();
                if (!(truncation > 0.0))
                    throw ConfigError(
                        "dynamics.truncation_radius: must be > 0");
            } else {
                throw ConfigError(
                    "dynamics.truncation_radius: must be a positive number "
                    "or \"all\"");
            }
        }
        if (kind == "coulomb_confined") {
            d.drift = DriftSpec::coulomb_confined(
                detail::get_optional<double>(j, where, "confinement", 1.0),
                truncation);
        } else if (kind == "free") {
            d.drift = DriftSpec::free_motion();
        } else if (kind == "gibbs_gradient") {
            d.drift = DriftSpec::gibbs_gaussian_softcore(
                detail::get_optional<double>(j, where, "amplitude", 1.0),
                detail::get_optional<double>(j, where, "beta", 2.0),
                std::isfinite(truncation) ? truncation : 4.0);
        } else {
            throw ConfigError(
                "dynamics.drift: must be one of coulomb_confined | free | "
                "gibbs_gradient");
        }
        d.dt = detail::get_required<double>(j, where, "dt");
        d.T = detail::get_required<double>(j, where, "T");
        d.thin = detail::get_optional<std::uint64_t>(j, where, "thin", 1);
        if (!(d.dt > 0.0)) throw ConfigError("dynamics.dt: must be > 0");
        if (!(d.T > 0.0)) throw ConfigError("dynamics.T: must be > 0");
        if (d.thin < 1) throw ConfigError("dynamics.thin: must be >= 1");
        return d;
    }
};

/// One requested analysis output.
struct AnalysisRequest {
    enum class Kind { msd, variance_profile, variational_bound };

    Kind kind = Kind::msd;
    // msd / exponent
    std::size_t tagged = 0;
    double fit_min = -1.0;  ///< −1 ⇒ default T/10
    double fit_max = -1.0;  ///< −1 ⇒ default T/2
    // variance profile
    std::vector<double> radii;
    // variational bound
    double R = 3.0;
    int p = 0;
    int L = 3;
    double eps = 1e-4;

    [[nodiscard]] io::json to_json() const {
        io::json j;
        switch (kind) {
            case Kind::msd:
                j["observable"] = "msd";
                j["tagged"] = tagged;
                if (fit_min >= 0.0) j["fit_min"] = fit_min;
                if (fit_max >= 0.0) j["fit_max"] = fit_max;
                break;
            case Kind::variance_profile:
                j["observable"] = "variance_profile";
                j["radii"] = radii;
                break;
            case Kind::variational_bound:
                j["observable"] = "variational_bound";
                j["R"] = R;
                j["p"] = p;
                j["L"] = L;
                j["eps"] = eps;
                break;
        }
        return j;
    }

    static AnalysisRequest from_json(const io::json& j, std::size_t index) {
        const std::string where = "analysis[" + std::to_string(index) + "]";
        AnalysisRequest r;
        const auto name =
            detail::get_required<std::string>(j, where, "observable");
        if (name == "msd") {
            detail::require_known_keys(
                j, where, {"observable", "tagged", "fit_min", "fit_max"});
            r.kind = Kind::msd;
            r.tagged = detail::get_optional<std::size_t>(j, where, "tagged",
                                                         0);
            r.fit_min =
                detail::get_optional<double>(j, where, "fit_min", -1.0);
            r.fit_max =
                detail::get_optional<double>(j, where, "fit_max", -1.0);
        } else if (name == "variance_profile") {
            detail::require_known_keys(j, where, {"observable", "radii"});
            r.kind = Kind::variance_profile;
            r.radii = detail::get_required<std::vector<double>>(j, where,
                                                                "radii");
            if (r.radii.empty())
                throw ConfigError(where + ".radii: must be non-empty");
        } else if (name == "variational_bound") {
            detail::require_known_keys(
                j, where, {"observable", "R", "p", "L", "eps"});
            r.kind = Kind::variational_bound;
            r.R = detail::get_required<double>(j, where, "R");
            r.p = detail::get_optional<int>(j, where, "p", 0);
            r.L = detail::get_optional<int>(j, where, "L", 3);
            r.eps = detail::get_optional<double>(j, where, "eps", 1e-4);
        } else {
            throw ConfigError(
                where +
                ".observable: must be one of msd | variance_profile | "
                "variational_bound");
        }
        return r;
    }
};

/// Palm-evaluation section for the `palm` subcommand.
struct PalmSpec {
    std::vector<Point> x;
    std::vector<Point> y;
    std::vector<double> radii{4.0, 6.0, 8.0, 10.0};

    [[nodiscard]] io::json to_json() const {
        io::json j;
        auto tuple = [](const std::vector<Point>& pts) {
            io::json arr = io::json::array();
            for (const Point& p : pts) arr.push_back({p.re, p.im});
            return arr;
        };
        j["x"] = tuple(x);
        j["y"] = tuple(y);
        j["radii"] = radii;
        return j;
    }

    static PalmSpec from_json(const io::json& j) {
        const std::string where = "palm";
        detail::require_known_keys(j, where, {"x", "y", "radii"});
        PalmSpec p;
        auto tuple = [&](const char* key) {
            std::vector<Point> pts;
            const auto arr = detail::get_required<io::json>(j, where, key);
            if (!arr.is_array())
                throw ConfigError(where + "." + key +
                                  ": expected an array of [re, im] pairs");
            for (const auto& e : arr) {
                if (!e.is_array() || e.size() != 2)
                    throw ConfigError(where + "." + key +
                                      ": expected [re, im] pairs");
                pts.push_back(
                    {e.at(0).get<double>(), e.at(1).get<double>()});
            }
            return pts;
        };
        p.x = tuple("x");
        p.y = tuple("y");
        if (j.contains("radii"))
            p.radii = j.at("radii").get<std::vector<double>>();
        if (p.x.empty() || p.x.size() != p.y.size())
            throw ConfigError(
                "palm: x and y must be non-empty tuples of equal length");
        return p;
    }
};

/// The whole experiment description; every run is a pure function of
/// this record plus the tool version.
struct ExperimentConfig {
    FieldSpec field;
    std::optional<DynamicsSpec> dynamics;
    std::optional<PalmSpec> palm;
    std::size_t ensemble_size = 0;
    std::uint64_t seed = 0;
    std::vector<AnalysisRequest> analysis;
    std::string output_dir;

    [[nodiscard]] io::json to_json() const {
        io::json j;
        j["field"] = field.to_json();
        if (dynamics) j["dynamics"] = dynamics->to_json();
        if (palm) j["palm"] = palm->to_json();
        j["ensemble_size"] = ensemble_size;
        j["seed"] = seed;
        if (!analysis.empty()) {
            io::json arr = io::json::array();
            for (const auto& a : analysis) arr.push_back(a.to_json());
            j["analysis"] = arr;
        }
        if (!output_dir.empty()) j["output_dir"] = output_dir;
        return j;
    }

    static ExperimentConfig from_json(const io::json& j) {
        detail::require_known_keys(j, "config",
                                   {"field", "dynamics", "palm",
                                    "ensemble_size", "seed", "analysis",
                                    "output_dir"});
        ExperimentConfig c;
        if (!j.contains("field"))
            throw ConfigError("config: missing required key 'field'");
        c.field = FieldSpec::from_json(j.at("field"));
        if (j.contains("dynamics"))
            c.dynamics = DynamicsSpec::from_json(j.at("dynamics"));
        if (j.contains("palm")) c.palm = PalmSpec::from_json(j.at("palm"));
        c.ensemble_size = detail::get_required<std::size_t>(
            j, "config", "ensemble_size");
        c.seed = detail::get_required<std::uint64_t>(j, "config", "seed");
        if (j.contains("analysis")) {
            const auto& arr = j.at("analysis");
            if (!arr.is_array())
                throw ConfigError("config.analysis: expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i)
                c.analysis.push_back(
                    AnalysisRequest::from_json(arr.at(i), i));
        }
        c.output_dir = detail::get_optional<std::string>(
            j, "config", "output_dir", "");
        return c;
    }

    static ExperimentConfig load(const std::filesystem::path& path) {
        io::json j;
        try {
            j = io::read_json_file(path);
        } catch (const IOError& e) {
            throw ConfigError(std::string("config file: ") + e.what());
        }
        return from_json(j);
    }
};

// ---------------------------------------------------------------------------
// Subcommand drivers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string zero_pad(std::size_t k, int width = 6) {
    std::string s = std::to_string(k);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IOError("cannot create output directory " + dir.string() +
                      ": " + ec.message());
}

inline json base_manifest(const ExperimentConfig& config,
                          const char* command) {
    json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["command"] = command;
    j["seed_split"] =
        "seed_k = hash64(seed, k); per replica: sample = hash64(seed_k, 1), "
        "dynamics = hash64(seed_k, 2)";
    j["config"] = config.to_json();
    return j;
}

}  // namespace detail

/**
 * @brief Draw ensemble_size configurations from the field family and
 * persist them as config_<k>.csv plus per-file sidecar manifests and
 * one batch manifest. Deterministic: rerunning overwrites with
 * byte-identical content.
 */
inline void cmd_sample(const ExperimentConfig& config,
                       const std::filesystem::path& outdir,
                       unsigned threads) {
    detail::ensure_dir(outdir);
    std::vector<Configuration> samples(config.ensemble_size);
    detail::parallel_for(config.ensemble_size, threads, [&](std::size_t k) {
        samples[k] = config.field.sample(rng::hash64(config.seed, k));
    });
    io::json files = io::json::array();
    for (std::size_t k = 0; k < config.ensemble_size; ++k) {
        const std::string stem = "config_" + detail::zero_pad(k);
        io::write_text_file(outdir / (stem + ".csv"),
                            io::configuration_csv(samples[k]));
        io::write_json_file(outdir / (stem + ".json"),
                            io::configuration_manifest(samples[k]));
        io::json entry;
        entry["file"] = stem + ".csv";
        entry["seed"] = samples[k].meta().seed;
        entry["points"] = samples[k].points().size();
        files.push_back(entry);
    }
    io::json manifest = detail::base_manifest(config, "sample");
    manifest["files"] = files;
    io::write_json_file(outdir / "manifest.json", manifest);
}

/**
 * @brief Integrate ensemble_size replicas of the configured dynamics
 * from fresh field samples. Partial (collision-aborted) trajectories
 * are persisted and flagged incomplete in both manifests.
 *
 * @return true when every replica completed.
 */
inline bool cmd_simulate(const ExperimentConfig& config,
                         const std::filesystem::path& outdir,
                         unsigned threads) {
    if (!config.dynamics)
        throw ConfigError("simulate: config has no 'dynamics' section");
    if (config.ensemble_size < 1)
        throw ConfigError("simulate: ensemble_size must be >= 1");
    detail::ensure_dir(outdir);
    const DynamicsSpec& dyn = *config.dynamics;
    std::vector<Trajectory> trajs(config.ensemble_size);
    detail::parallel_for(config.ensemble_size, threads, [&](std::size_t k) {
        const std::uint64_t seed_k = rng::hash64(config.seed, k);
        const Configuration init =
            config.field.sample(rng::hash64(seed_k, 1));
        trajs[k] = simulate(init, dyn.drift, dyn.T, dyn.dt, dyn.thin,
                            rng::hash64(seed_k, 2));
    });
    bool all_complete = true;
    io::json files = io::json::array();
    for (std::size_t k = 0; k < config.ensemble_size; ++k) {
        const std::string stem = "traj_" + detail::zero_pad(k);
        io::write_text_file(outdir / (stem + ".csv"),
                            io::trajectory_csv(trajs[k]));
        io::json tm = io::trajectory_manifest(trajs[k]);
        tm["replica"] = k;
        io::write_json_file(outdir / (stem + ".json"), tm);
        io::json entry;
        entry["file"] = stem + ".csv";
        entry["seed"] = trajs[k].seed;
        entry["complete"] = !trajs[k].aborted;
        if (trajs[k].aborted) entry["status"] = "incomplete";
        files.push_back(entry);
        all_complete = all_complete && !trajs[k].aborted;
    }
    io::json manifest = detail::base_manifest(config, "simulate");
    manifest["files"] = files;
    manifest["complete"] = all_complete;
    io::write_json_file(outdir / "manifest.json", manifest);
    return all_complete;
}

namespace detail {

/// Hard comparison of the data-directory manifest against the analysis
/// request; any parameter drift is a config error naming the paths.
inline void check_manifest_matches(const json& stored,
                                   const ExperimentConfig& config) {
    json want;
    want["field"] = config.field.to_json();
    if (config.dynamics) want["dynamics"] = config.dynamics->to_json();
    want["ensemble_size"] = config.ensemble_size;
    want["seed"] = config.seed;
    json have;
    const json& sc = stored.at("config");
    have["field"] = sc.contains("field") ? sc.at("field") : json();
    if (config.dynamics)
        have["dynamics"] =
            sc.contains("dynamics") ? sc.at("dynamics") : json();
    have["ensemble_size"] = sc.contains("ensemble_size")
                                ? sc.at("ensemble_size")
                                : json();
    have["seed"] = sc.contains("seed") ? sc.at("seed") : json();
    if (want != have) {
        const json patch = json::diff(have, want);
        std::string paths;
        for (const auto& op : patch) {
            if (!paths.empty()) paths += ", ";
            paths += op.at("path").get<std::string>();
        }
        throw ConfigError(
            "analyze: manifest in the data directory disagrees with the "
            "config (drifted: " +
            (paths.empty() ? std::string("structure") : paths) + ")");
    }
}

}  // namespace detail

/**
 * @brief Run the requested observables against a previously produced
 * data directory (sample or simulate output, matched by manifest) and
 * write per-observable files plus summary.json.
 *
 * Incomplete trajectories and replicas with a capped-step fraction
 * above 0.1% are excluded from the statistics and counted in the
 * summary.
 */
inline void cmd_analyze(const ExperimentConfig& config,
                        const std::filesystem::path& datadir,
                        unsigned threads) {
    (void)threads;  // analysis is one deterministic pass
    const auto manifest_path = datadir / "manifest.json";
    if (!std::filesystem::exists(manifest_path))
        throw IOError("analyze: no manifest.json in " + datadir.string());
    const io::json stored = io::read_json_file(manifest_path);
    detail::check_manifest_matches(stored, config);
    const std::string command = stored.at("command").get<std::string>();

    // Load whichever artifact type the directory holds.
    std::vector<Trajectory> trajs;
    std::vector<Configuration> configs;
    std::size_t excluded_incomplete = 0, excluded_capped = 0;
    if (command == "simulate") {
        for (const auto& entry : stored.at("files")) {
            const std::string csv_name =
                entry.at("file").get<std::string>();
            const std::string stem =
                csv_name.substr(0, csv_name.size() - 4);
            const io::json tm =
                io::read_json_file(datadir / (stem + ".json"));
            Trajectory t = io::parse_trajectory(
                io::read_text_file(datadir / csv_name), tm);
            if (t.aborted) {
                ++excluded_incomplete;
                continue;
            }
            const double steps_total =
                static_cast<double>(t.times.size() - 1) *
                static_cast<double>(t.thin) *
                static_cast<double>(t.n_particles());
            if (steps_total > 0.0 &&
                static_cast<double>(t.capped_steps) / steps_total > 1e-3) {
                ++excluded_capped;
                continue;
            }
            trajs.push_back(std::move(t));
        }
    } else if (command == "sample") {
        for (const auto& entry : stored.at("files")) {
            const std::string csv_name =
                entry.at("file").get<std::string>();
            const std::string stem =
                csv_name.substr(0, csv_name.size() - 4);
            const io::json cm =
                io::read_json_file(datadir / (stem + ".json"));
            ConfigMeta meta;
            meta.field = cm.at("field").get<std::string>();
            meta.seed = cm.at("seed").get<std::uint64_t>();
            configs.push_back(io::parse_configuration_csv(
                io::read_text_file(datadir / csv_name),
                io::window_from_json(cm.at("window")), meta));
        }
    } else {
        throw ConfigError("analyze: data directory was produced by '" +
                          command + "', expected sample or simulate");
    }

    io::json summary = detail::base_manifest(config, "analyze");
    summary["source_command"] = command;
    summary["ensemble_loaded"] =
        command == "simulate" ? trajs.size() : configs.size();
    summary["excluded_incomplete"] = excluded_incomplete;
    summary["excluded_capped"] = excluded_capped;
    io::json results;

    for (const AnalysisRequest& req : config.analysis) {
        if (req.kind == AnalysisRequest::Kind::msd) {
            if (command != "simulate")
                throw ConfigError(
                    "analyze: msd needs a simulate data directory");
            if (trajs.empty())
                throw NumericError("analyze: no usable trajectories");
            const MSDSeries series = msd(trajs, req.tagged, trajs[0].times);
            std::string csv = "lag,msd,stderr\n";
            for (std::size_t k = 0; k < series.lags.size(); ++k) {
                csv += io::format_double(series.lags[k]);
                csv += ',';
                csv += io::format_double(series.values[k]);
                csv += ',';
                csv += io::format_double(series.stderrs[k]);
                csv += '\n';
            }
            io::write_text_file(datadir / "msd.csv", csv);
            const double T = trajs[0].times.back();
            const double lo = req.fit_min >= 0.0 ? req.fit_min : T / 10.0;
            const double hi = req.fit_max >= 0.0 ? req.fit_max : T / 2.0;
            const ExponentFit fit = scaling_exponent(series, lo, hi);
            io::json ej;
            ej["alpha"] = fit.alpha;
            ej["stderr"] = fit.stderr_;
            ej["n_lags"] = fit.n_lags;
            ej["fit_window"] = {lo, hi};
            ej["tagged"] = req.tagged;
            ej["ensemble"] = series.ensemble;
            io::write_json_file(datadir / "exponent.json", ej);
            results["msd_file"] = "msd.csv";
            results["exponent"] = ej;
        } else if (req.kind == AnalysisRequest::Kind::variance_profile) {
            if (command != "sample")
                throw ConfigError(
                    "analyze: variance_profile needs a sample data "
                    "directory");
            const VarianceProfile prof =
                number_variance_profile(configs, req.radii);
            std::string csv = "R,mean,variance,mean_se,variance_se\n";
            io::json pj = io::json::array();
            for (std::size_t r = 0; r < prof.radii.size(); ++r) {
                csv += io::format_double(prof.radii[r]);
                csv += ',';
                csv += io::format_double(prof.mean[r]);
                csv += ',';
                csv += io::format_double(prof.variance[r]);
                csv += ',';
                csv += io::format_double(prof.mean_se[r]);
                csv += ',';
                csv += io::format_double(prof.variance_se[r]);
                csv += '\n';
                io::json row;
                row["R"] = prof.radii[r];
                row["mean"] = prof.mean[r];
                row["variance"] = prof.variance[r];
                row["variance_over_mean"] =
                    prof.mean[r] > 0.0 ? prof.variance[r] / prof.mean[r]
                                       : 0.0;
                pj.push_back(row);
            }
            io::write_text_file(datadir / "variance_profile.csv", csv);
            results["variance_profile_file"] = "variance_profile.csv";
            results["variance_profile"] = pj;
        } else {
            if (command != "sample")
                throw ConfigError(
                    "analyze: variational_bound needs a sample data "
                    "directory");
            const auto trial = TrialFunction::mean_shift(req.R, req.p,
                                                         req.L);
            const VariationalBound vb =
                variational_bound(trial, req.p, configs, req.eps);
            io::json bj;
            bj["estimate"] = vb.estimate;
            bj["stderr"] = vb.stderr_;
            bj["shift_term"] = vb.shift_term;
            bj["carre_term"] = vb.carre_term;
            bj["skipped_fraction"] = vb.skipped_fraction;
            bj["flagged_fraction"] = vb.flagged_fraction;
            bj["used"] = vb.used;
            bj["R"] = req.R;
            bj["p"] = req.p;
            bj["L"] = req.L;
            bj["eps"] = req.eps;
            io::write_json_file(datadir / "variational_bound.json", bj);
            results["variational_bound"] = bj;
        }
    }
    summary["results"] = results;
    io::write_json_file(datadir / "summary.json", summary);
}

/**
 * @brief Evaluate Palm density-ratio stabilization curves: for each of
 * ensemble_size fresh field samples and each truncation radius r,
 * log of the ratio-of-densities functional of the conditioned tuples
 * x, y. Emits palm.csv (`sample,r,log_ratio`) and palm_summary.json.
 */
inline void cmd_palm(const ExperimentConfig& config,
                     const std::filesystem::path& outdir,
                     unsigned threads) {
    if (!config.palm)
        throw ConfigError("palm: config has no 'palm' section");
    if (config.ensemble_size < 1)
        throw ConfigError("palm: ensemble_size must be >= 1");
    detail::ensure_dir(outdir);
    const PalmSpec& spec = *config.palm;
    const std::size_t nr = spec.radii.size();
    std::vector<std::vector<double>> ratios(config.ensemble_size,
                                            std::vector<double>(nr));
    detail::parallel_for(config.ensemble_size, threads, [&](std::size_t k) {
        const Configuration sample =
            config.field.sample(rng::hash64(config.seed, k));
        for (std::size_t r = 0; r < nr; ++r)
            ratios[k][r] = palm_density_ratio_log(spec.x, spec.y, sample,
                                                  spec.radii[r]);
    });
    std::string csv = "sample,r,log_ratio\n";
    for (std::size_t k = 0; k < config.ensemble_size; ++k)
        for (std::size_t r = 0; r < nr; ++r) {
            csv += std::to_string(k);
            csv += ',';
            csv += io::format_double(spec.radii[r]);
            csv += ',';
            csv += io::format_double(ratios[k][r]);
            csv += '\n';
        }
    io::write_text_file(outdir / "palm.csv", csv);

    io::json manifest = detail::base_manifest(config, "palm");
    manifest["log_normalization"] =
        palm_normalization_log(spec.x, spec.y);
    io::json per_radius = io::json::array();
    for (std::size_t r = 0; r < nr; ++r) {
        double s1 = 0.0, s2 = 0.0;
        const double m = static_cast<double>(config.ensemble_size);
        for (std::size_t k = 0; k < config.ensemble_size; ++k) {
            s1 += ratios[k][r];
            s2 += ratios[k][r] * ratios[k][r];
        }
        const double mean = s1 / m;
        io::json row;
        row["r"] = spec.radii[r];
        row["mean_log_ratio"] = mean;
        row["stderr"] =
            m > 1.0 ? std::sqrt(std::max(0.0, (s2 - m * mean * mean) /
                                                  (m - 1.0) / m))
                    : 0.0;
        per_radius.push_back(row);
    }
    manifest["stabilization"] = per_radius;
    io::write_json_file(outdir / "palm_summary.json", manifest);
}

}  // namespace loggas
