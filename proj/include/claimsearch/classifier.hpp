#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include "claimsearch/error.hpp"
#include "claimsearch/pairs.hpp"
#include "claimsearch/text.hpp"

namespace claimsearch {

inline constexpr double kDecisionThreshold = 0.5;

// Label 1 iff the label-1 probability reaches the threshold.
constexpr int decide_label(double prob_label1) noexcept { return prob_label1 >= kDecisionThreshold ? 1 : 0; }

struct ClassificationResult {
    std::string pair_id;
    double prob_label1 = 0.0;
    int predicted_label = 0;

    // The two label probabilities sum to one; only label 1 is stored.
    double prob_label0() const noexcept { return 1.0 - prob_label1; }

    bool operator==(const ClassificationResult&) const = default;
};

inline ClassificationResult make_result(std::string pair_id, double prob_label1) {
    if (!std::isfinite(prob_label1) || prob_label1 < 0.0 || prob_label1 > 1.0) {
        throw ProtocolError("probability for pair '" + pair_id + "' outside [0, 1]: " +
                                text::format_double(prob_label1),
                            {pair_id});
    }
    return {std::move(pair_id), prob_label1, decide_label(prob_label1)};
}

// A sequence-pair relevance classifier. score() must be safe to call from
// several threads at once.
class Classifier {
public:
    virtual ~Classifier() = default;

    // Label-1 probability for each pair of one batch, aligned with the input.
    virtual std::vector<double> score(std::span<const PairInput> batch) const = 0;

    virtual std::size_t batch_size() const { return 256; }
    // Batches that may be in flight at the same time.
    virtual std::size_t max_in_flight() const { return 1; }
    virtual std::string name() const = 0;
};

// Set of lowercased, punctuation-trimmed words.
inline std::unordered_set<std::string> normalized_word_set(std::string_view s) {
    std::unordered_set<std::string> out;
    for (auto w : text::split_words(s)) {
        auto n = text::normalize_word(w);
        if (!n.empty()) out.insert(std::move(n));
    }
    return out;
}

// Fraction of the claim's distinct words that also occur in the piece.
inline double baseline_probability(std::string_view claim_text, std::string_view piece_text) {
    const auto claim = normalized_word_set(claim_text);
    if (claim.empty()) throw PreconditionError("baseline_probability: claim has no words after normalization");
    const auto piece = normalized_word_set(piece_text);
    std::size_t hits = 0;
    for (const auto& w : claim) hits += piece.count(w);
    return static_cast<double>(hits) / static_cast<double>(claim.size());
}

// Deterministic claim-coverage stand-in for a trained model.
class LexicalBaseline final : public Classifier {
public:
    explicit LexicalBaseline(std::size_t batch_size = 256) : batch_size_(std::max<std::size_t>(1, batch_size)) {}

    std::vector<double> score(std::span<const PairInput> batch) const override {
        std::vector<double> out;
        out.reserve(batch.size());
        for (const auto& p : batch) out.push_back(baseline_probability(p.claim_text, p.piece_text));
        return out;
    }

    std::size_t batch_size() const override { return batch_size_; }
    std::string name() const override { return "lexical_baseline"; }

private:
    std::size_t batch_size_;
};

// Per-pair outcome of a classification run; unscored slots are empty.
struct PartialClassification {
    std::vector<std::optional<ClassificationResult>> results;
    std::vector<std::string> failed_pair_ids;  // input order
    std::string error_code;
    std::string error_message;

    bool complete() const noexcept { return failed_pair_ids.empty(); }
};

// Classifies all pairs in batches of classifier.batch_size(). Batches may run
// concurrently; results are written back by input position, so output order
// never depends on completion order. Failed batches leave their slots empty.
inline PartialClassification classify_batch_partial(std::span<const PairInput> pairs, const Classifier& classifier) {
    if (pairs.empty()) throw PreconditionError("classify_batch: no pairs given");
    const std::size_t bs = std::max<std::size_t>(1, classifier.batch_size());
    const std::size_t n_batches = (pairs.size() + bs - 1) / bs;

    PartialClassification out;
    out.results.resize(pairs.size());
    std::vector<char> failed(n_batches, 0);
    std::mutex err_mu;
    bool saw_transport = false;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_batches) return;
            const std::size_t lo = b * bs;
            const auto batch = pairs.subspan(lo, std::min(bs, pairs.size() - lo));
            try {
                const auto probs = classifier.score(batch);
                if (probs.size() != batch.size()) {
                    throw ProtocolError("classifier returned " + std::to_string(probs.size()) + " results for " +
                                        std::to_string(batch.size()) + " pairs");
                }
                std::vector<ClassificationResult> tmp;
                tmp.reserve(batch.size());
                for (std::size_t i = 0; i < batch.size(); ++i) tmp.push_back(make_result(batch[i].pair_id, probs[i]));
                for (std::size_t i = 0; i < batch.size(); ++i) out.results[lo + i] = std::move(tmp[i]);
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mu);
                failed[b] = 1;
                const auto* be = dynamic_cast<const Error*>(&e);
                const bool transport = be == nullptr || be->code() == "transport";
                saw_transport = saw_transport || transport;
                if (!out.error_message.empty()) out.error_message += "; ";
                out.error_message += e.what();
            }
        }
    };

    const std::size_t n_threads = std::min(n_batches, std::max<std::size_t>(1, classifier.max_in_flight()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    for (std::size_t b = 0; b < n_batches; ++b) {
        if (!failed[b]) continue;
        for (std::size_t i = b * bs; i < std::min(pairs.size(), (b + 1) * bs); ++i) {
            out.failed_pair_ids.push_back(pairs[i].pair_id);
        }
    }
    if (!out.complete()) out.error_code = saw_transport ? "transport" : "protocol";
    return out;
}

// All-or-nothing variant: throws TransportError or ProtocolError naming every
// unscored pair if any batch fails.
inline std::vector<ClassificationResult> classify_batch(std::span<const PairInput> pairs, const Classifier& classifier) {
    auto partial = classify_batch_partial(pairs, classifier);
    if (!partial.complete()) {
        if (partial.error_code == "transport") {
            throw TransportError(partial.error_message, std::move(partial.failed_pair_ids));
        }
        throw ProtocolError(partial.error_message, std::move(partial.failed_pair_ids));
    }
    std::vector<ClassificationResult> out;
    out.reserve(partial.results.size());
    for (auto& r : partial.results) out.push_back(std::move(*r));
    return out;
}

}  // namespace claimsearch
