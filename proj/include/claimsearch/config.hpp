#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "claimsearch/corpus.hpp"
#include "claimsearch/error.hpp"
#include "claimsearch/evaluation.hpp"
#include "claimsearch/jsonl.hpp"
#include "claimsearch/pairs.hpp"
#include "claimsearch/remote_classifier.hpp"
#include "claimsearch/scoring.hpp"
#include "claimsearch/slicer.hpp"

namespace claimsearch {

struct QuerySpec {
    std::string reference_id;
    // Literal claim text; when empty, the first claim of reference_id in the corpus.
    std::string claim;
};

struct PipelineConfig {
    std::vector<std::filesystem::path> corpus_paths;
    std::string class_prefix;  // empty: no class filter
    std::uint64_t seed = 42;
    GroupSizes group_sizes;
    std::uint64_t group_seed = 42;
    std::vector<std::string> must_include_search;
    SliceConfig slice;
    AssemblyConfig assembly;
    double validation_fraction = 0.1;
    std::uint64_t pairs_seed = 42;
    std::string backend = "baseline";
    std::size_t batch_size = 32;
    std::chrono::milliseconds timeout{30000};
    std::size_t max_in_flight = 1;
    ScoringMode mode = ScoringMode::label;
    bool exclude_self = false;
    std::vector<QuerySpec> queries;
    CitedX cited_x;
    std::filesystem::path output_dir = "out";

    // Replaces the master seed and every per-stage seed.
    void override_seed(std::uint64_t s) {
        seed = group_seed = pairs_seed = slice.seed = s;
    }

    ClassifierBackend classifier_backend() const {
        auto b = parse_backend(backend);
        b.batch_size = batch_size;
        b.remote.batch_size = batch_size;
        b.remote.timeout = timeout;
        b.remote.max_in_flight = max_in_flight;
        return b;
    }
};

namespace detail {

template <typename T>
T config_value(const jsonl::Json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace detail

// Relative paths are resolved against base_dir (normally the config file's directory).
inline PipelineConfig config_from_json(const jsonl::Json& j, const std::filesystem::path& base_dir = {}) {
    using detail::config_value;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig c;
    c.seed = config_value<std::uint64_t>(j, "seed", c.seed);
    c.group_seed = c.pairs_seed = c.slice.seed = c.seed;

    if (auto it = j.find("corpus"); it != j.end()) {
        if (it->is_string()) {
            c.corpus_paths.push_back(detail::resolve(base_dir, it->get<std::string>()));
        } else if (it->is_array()) {
            for (const auto& p : *it) c.corpus_paths.push_back(detail::resolve(base_dir, p.get<std::string>()));
        } else {
            throw ConfigError("config field 'corpus' must be a path or a list of paths");
        }
    }
    c.class_prefix = config_value<std::string>(j, "class_prefix", "");

    if (auto it = j.find("groups"); it != j.end()) {
        const auto& g = *it;
        c.group_sizes.training = config_value<std::size_t>(g, "training", 0);
        c.group_sizes.pretest = config_value<std::size_t>(g, "pretest", 0);
        c.group_sizes.search = config_value<std::size_t>(g, "search", 0);
        c.group_seed = config_value<std::uint64_t>(g, "seed", c.seed);
        c.must_include_search = config_value<std::vector<std::string>>(g, "must_include_search", {});
    }
    if (auto it = j.find("slice"); it != j.end()) {
        c.slice.min_len = config_value<std::size_t>(*it, "min_len", c.slice.min_len);
        c.slice.max_len = config_value<std::size_t>(*it, "max_len", c.slice.max_len);
        c.slice.seed = config_value<std::uint64_t>(*it, "seed", c.seed);
    }
    if (auto it = j.find("assembly"); it != j.end()) {
        c.assembly.max_words = config_value<std::size_t>(*it, "max_words", c.assembly.max_words);
        c.assembly.render_markers = config_value<bool>(*it, "render_markers", false);
    }
    if (auto it = j.find("pairs"); it != j.end()) {
        c.validation_fraction = config_value<double>(*it, "validation_fraction", c.validation_fraction);
        c.pairs_seed = config_value<std::uint64_t>(*it, "seed", c.seed);
    }
    if (auto it = j.find("backend"); it != j.end()) {
        if (it->is_string()) {
            c.backend = it->get<std::string>();
        } else {
            c.backend = config_value<std::string>(*it, "spec", c.backend);
            c.batch_size = config_value<std::size_t>(*it, "batch_size", c.batch_size);
            c.timeout = std::chrono::milliseconds(config_value<long long>(*it, "timeout_ms", c.timeout.count()));
            c.max_in_flight = config_value<std::size_t>(*it, "max_in_flight", c.max_in_flight);
        }
    }
    c.mode = parse_scoring_mode(config_value<std::string>(j, "mode", "label"));
    c.exclude_self = config_value<bool>(j, "exclude_self", false);
    if (auto it = j.find("queries"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("config field 'queries' must be a list");
        for (const auto& q : *it) {
            QuerySpec spec;
            spec.reference_id = config_value<std::string>(q, "reference_id", "");
            spec.claim = config_value<std::string>(q, "claim", "");
            if (spec.reference_id.empty()) throw ConfigError("every query needs a reference_id");
            c.queries.push_back(std::move(spec));
        }
    }
    if (auto it = j.find("cited_x"); it != j.end()) {
        if (it->is_string()) {
            const auto path = detail::resolve(base_dir, it->get<std::string>());
            std::ifstream in(path);
            if (!in) throw ConfigError("cannot open cited_x file " + path.string());
            try {
                c.cited_x = jsonl::Json::parse(in).get<CitedX>();
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("cited_x file " + path.string() + ": " + e.what());
            }
        } else {
            c.cited_x = config_value<CitedX>(j, "cited_x", {});
        }
    }
    c.output_dir = detail::resolve(base_dir, config_value<std::string>(j, "output_dir", "out"));

    if (c.batch_size < 1) throw ConfigError("backend batch_size must be >= 1");
    validate(c.slice);
    validate(c.assembly);
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    jsonl::Json j;
    try {
        j = jsonl::Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

// Effective configuration, embedded in every artifact the CLI writes.
inline jsonl::Json config_to_json(const PipelineConfig& c) {
    jsonl::Json j;
    auto paths = jsonl::Json::array();
    for (const auto& p : c.corpus_paths) paths.push_back(p.generic_string());
    j["corpus"] = paths;
    j["class_prefix"] = c.class_prefix;
    j["seed"] = c.seed;
    j["groups"] = {{"training", c.group_sizes.training},
                   {"pretest", c.group_sizes.pretest},
                   {"search", c.group_sizes.search},
                   {"seed", c.group_seed},
                   {"must_include_search", c.must_include_search}};
    j["slice"] = {{"min_len", c.slice.min_len}, {"max_len", c.slice.max_len}, {"seed", c.slice.seed}};
    j["assembly"] = {{"max_words", c.assembly.max_words}, {"render_markers", c.assembly.render_markers}};
    j["pairs"] = {{"validation_fraction", c.validation_fraction}, {"seed", c.pairs_seed}};
    j["backend"] = {{"spec", c.backend},
                    {"batch_size", c.batch_size},
                    {"timeout_ms", c.timeout.count()},
                    {"max_in_flight", c.max_in_flight}};
    j["mode"] = to_string(c.mode);
    j["exclude_self"] = c.exclude_self;
    auto queries = jsonl::Json::array();
    for (const auto& q : c.queries) {
        jsonl::Json qj;
        qj["reference_id"] = q.reference_id;
        if (!q.claim.empty()) qj["claim"] = q.claim;
        queries.push_back(std::move(qj));
    }
    j["queries"] = queries;
    j["cited_x"] = c.cited_x;
    j["output_dir"] = c.output_dir.generic_string();
    return j;
}

}  // namespace claimsearch
