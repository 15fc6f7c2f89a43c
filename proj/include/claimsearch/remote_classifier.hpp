#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "claimsearch/classifier.hpp"
#include "claimsearch/error.hpp"

namespace claimsearch {

struct HealthInfo {
    std::string status;
    std::string model;
    long long max_tokens = 0;
};

// Wire format of POST /v1/classify. Exposed so stub servers and tests share it.
namespace wire {

using Json = nlohmann::json;

inline Json classify_request(std::span<const PairInput> batch) {
    Json pairs = Json::array();
    for (const auto& p : batch) {
        pairs.push_back(Json{{"id", p.pair_id}, {"claim", p.claim_text}, {"piece", p.piece_text}});
    }
    return Json{{"pairs", std::move(pairs)}};
}

// Label-1 probabilities aligned with the request. The response must name every
// requested id exactly once; ids may come back in any order.
inline std::vector<double> parse_classify_response(const std::string& body, std::span<const PairInput> batch) {
    std::vector<std::string> ids;
    ids.reserve(batch.size());
    for (const auto& p : batch) ids.push_back(p.pair_id);

    Json j;
    try {
        j = Json::parse(body);
    } catch (const Json::parse_error& e) {
        throw ProtocolError(std::string("classify response is not JSON: ") + e.what(), ids);
    }
    if (!j.is_object() || !j.contains("results") || !j["results"].is_array()) {
        throw ProtocolError("classify response lacks a 'results' array", ids);
    }
    const auto& results = j["results"];
    if (results.size() != batch.size()) {
        throw ProtocolError("classify response has " + std::to_string(results.size()) + " results for " +
                                std::to_string(batch.size()) + " pairs",
                            ids);
    }
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!pos.emplace(ids[i], i).second) {
            throw PreconditionError("duplicate pair id in one batch: " + ids[i]);
        }
    }
    std::vector<double> probs(batch.size(), 0.0);
    std::vector<char> seen(batch.size(), 0);
    for (const auto& r : results) {
        if (!r.is_object() || !r.contains("id") || !r["id"].is_string() || !r.contains("prob_label1") ||
            !r["prob_label1"].is_number()) {
            throw ProtocolError("classify result must be {\"id\": string, \"prob_label1\": number}", ids);
        }
        const auto id = r["id"].get<std::string>();
        auto it = pos.find(id);
        if (it == pos.end()) throw ProtocolError("classify response names unknown pair id '" + id + "'", ids);
        if (seen[it->second]) throw ProtocolError("classify response repeats pair id '" + id + "'", ids);
        seen[it->second] = 1;
        const double p = r["prob_label1"].get<double>();
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ProtocolError("prob_label1 for '" + id + "' outside [0, 1]", ids);
        }
        probs[it->second] = p;
    }
    return probs;
}

inline HealthInfo parse_health_response(const std::string& body) {
    Json j;
    try {
        j = Json::parse(body);
    } catch (const Json::parse_error& e) {
        throw ProtocolError(std::string("health response is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("status") || !j["status"].is_string() || !j.contains("model") ||
        !j["model"].is_string() || !j.contains("max_tokens") || !j["max_tokens"].is_number_integer()) {
        throw ProtocolError("health response must be {\"status\": string, \"model\": string, \"max_tokens\": integer}");
    }
    return {j["status"].get<std::string>(), j["model"].get<std::string>(), j["max_tokens"].get<long long>()};
}

}  // namespace wire

struct RemoteOptions {
    std::string endpoint;  // e.g. http://127.0.0.1:8080
    std::size_t batch_size = 32;
    std::chrono::milliseconds timeout{30000};
    std::size_t max_in_flight = 1;
};

// Client for a classifier service speaking the /v1 protocol. Each call opens
// its own connection, so one instance can serve concurrent batches.
class RemoteClassifier final : public Classifier {
public:
    explicit RemoteClassifier(RemoteOptions opts) : opts_(std::move(opts)) {
        if (opts_.batch_size < 1) throw ConfigError("remote backend: batch_size must be >= 1");
        if (opts_.max_in_flight < 1) throw ConfigError("remote backend: max_in_flight must be >= 1");
        auto scheme_end = opts_.endpoint.find("://");
        auto path_start = opts_.endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        if (path_start == std::string::npos) {
            base_ = opts_.endpoint;
        } else {
            base_ = opts_.endpoint.substr(0, path_start);
            prefix_ = opts_.endpoint.substr(path_start);
            while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        }
        if (base_.empty()) throw ConfigError("remote backend: empty endpoint");
    }

    std::vector<double> score(std::span<const PairInput> batch) const override {
        std::vector<std::string> ids;
        ids.reserve(batch.size());
        for (const auto& p : batch) ids.push_back(p.pair_id);
        const auto body = wire::classify_request(batch).dump();

        // One retry on transport failure, then the batch fails.
        std::string last_error;
        for (int attempt = 0; attempt < 2; ++attempt) {
            auto cli = client();
            auto res = cli.Post(prefix_ + "/v1/classify", body, "application/json");
            if (!res) {
                last_error = "POST " + opts_.endpoint + "/v1/classify failed: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_error = "POST /v1/classify returned HTTP " + std::to_string(res->status) + ": " + res->body;
                continue;
            }
            if (res->status != 200) {
                throw ProtocolError("POST /v1/classify returned HTTP " + std::to_string(res->status) + ": " + res->body,
                                    ids);
            }
            return wire::parse_classify_response(res->body, batch);
        }
        throw TransportError(last_error + " (after retry)", ids);
    }

    HealthInfo health() const {
        auto cli = client();
        auto res = cli.Get(prefix_ + "/v1/health");
        if (!res) throw TransportError("GET " + opts_.endpoint + "/v1/health failed: " + httplib::to_string(res.error()));
        if (res->status != 200) throw ProtocolError("GET /v1/health returned HTTP " + std::to_string(res->status));
        return wire::parse_health_response(res->body);
    }

    std::size_t batch_size() const override { return opts_.batch_size; }
    std::size_t max_in_flight() const override { return opts_.max_in_flight; }
    std::string name() const override { return "remote:" + opts_.endpoint; }
    const RemoteOptions& options() const noexcept { return opts_; }

private:
    httplib::Client client() const {
        httplib::Client cli(base_);
        const auto secs = opts_.timeout.count() / 1000;
        const auto usecs = (opts_.timeout.count() % 1000) * 1000;
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);
        return cli;
    }

    RemoteOptions opts_;
    std::string base_;
    std::string prefix_;
};

enum class BackendKind { lexical_baseline, remote };

struct ClassifierBackend {
    BackendKind kind = BackendKind::lexical_baseline;
    RemoteOptions remote;
    std::size_t batch_size = 256;
};

// Environment variable that overrides the remote endpoint.
inline constexpr const char* kEndpointEnv = "CLAIMSEARCH_ENDPOINT";

// "baseline" or "remote:<url>". A set CLAIMSEARCH_ENDPOINT replaces the url.
inline ClassifierBackend parse_backend(const std::string& spec) {
    ClassifierBackend b;
    if (spec == "baseline" || spec == "lexical_baseline") return b;
    if (spec.rfind("remote", 0) == 0) {
        b.kind = BackendKind::remote;
        if (spec.size() > 6) {
            if (spec[6] != ':') throw ConfigError("backend must be 'baseline' or 'remote:<url>', got '" + spec + "'");
            b.remote.endpoint = spec.substr(7);
        }
        if (const char* env = std::getenv(kEndpointEnv); env != nullptr && *env != '\0') b.remote.endpoint = env;
        if (b.remote.endpoint.empty()) throw ConfigError("remote backend needs a url or " + std::string(kEndpointEnv));
        return b;
    }
    throw ConfigError("backend must be 'baseline' or 'remote:<url>', got '" + spec + "'");
}

inline std::unique_ptr<Classifier> make_classifier(const ClassifierBackend& backend) {
    switch (backend.kind) {
        case BackendKind::lexical_baseline: return std::make_unique<LexicalBaseline>(backend.batch_size);
        case BackendKind::remote: return std::make_unique<RemoteClassifier>(backend.remote);
    }
    throw ConfigError("unknown backend kind");
}

}  // namespace claimsearch
