#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "claimsearch/corpus.hpp"
#include "claimsearch/error.hpp"
#include "claimsearch/jsonl.hpp"
#include "claimsearch/rng.hpp"
#include "claimsearch/slicer.hpp"
#include "claimsearch/text.hpp"

namespace claimsearch {

enum class Purpose { training, validation, pretest, search };

inline const char* to_string(Purpose p) {
    switch (p) {
        case Purpose::training: return "training";
        case Purpose::validation: return "validation";
        case Purpose::pretest: return "pretest";
        case Purpose::search: return "search";
    }
    return "?";
}

// One claim + description piece input. label is 1 when claim and piece come
// from the same patent, 0 when they come from different patents, and absent
// for search queries.
struct PairInput {
    std::string pair_id;
    std::string claim_patent_id;
    std::string piece_patent_id;
    std::size_t piece_index = 0;
    std::string claim_text;
    std::string piece_text;
    std::optional<int> label;
    Purpose purpose = Purpose::training;

    bool operator==(const PairInput&) const = default;
};

inline std::string training_pair_id(const std::string& claim_patent, const std::string& piece_patent,
                                    std::size_t piece_index) {
    return claim_patent + ">" + piece_patent + "#" + std::to_string(piece_index);
}

inline std::string query_pair_id(const std::string& piece_patent, std::size_t piece_index) {
    return piece_patent + "#" + std::to_string(piece_index);
}

// One label-1 pair per piece: each piece joined with the first claim of its own patent.
inline std::vector<PairInput> build_positive_pairs(const PieceTable& pieces, const Corpus& claims,
                                                   Purpose purpose = Purpose::training) {
    std::vector<PairInput> out;
    out.reserve(pieces.total_pieces());
    for (const auto& entry : pieces.entries()) {
        const Patent* patent = claims.find(entry.patent_id);
        if (patent == nullptr) throw MissingIdError(entry.patent_id, "claims corpus");
        for (const auto& piece : entry.pieces) {
            PairInput pair;
            pair.pair_id = training_pair_id(entry.patent_id, entry.patent_id, piece.piece_index);
            pair.claim_patent_id = entry.patent_id;
            pair.piece_patent_id = entry.patent_id;
            pair.piece_index = piece.piece_index;
            pair.claim_text = patent->first_claim;
            pair.piece_text = piece.text;
            pair.label = 1;
            pair.purpose = purpose;
            out.push_back(std::move(pair));
        }
    }
    return out;
}

namespace detail {

inline bool crosses_patents(const std::vector<PairInput>& pos, const std::vector<std::size_t>& perm) {
    for (std::size_t i = 0; i < perm.size(); ++i) {
        if (pos[i].claim_patent_id == pos[perm[i]].piece_patent_id) return false;
    }
    return true;
}

inline constexpr int kNegativeRejections = 100;

}  // namespace detail

// Label-0 pairs reusing exactly the claims and pieces of the positives, with
// every claim moved onto a piece of a different patent.
//
// The assignment is a random permutation of pieces over claims, redrawn until
// no claim keeps a piece of its own patent. After kNegativeRejections failed
// draws it falls back to a cycle shift: pieces are arranged in patent blocks
// (random block and in-block order) and rotated by the largest block size,
// which cannot land any piece on its own block. A valid assignment exists iff
// no patent holds more than half of all pieces.
inline std::vector<PairInput> build_negative_pairs(const std::vector<PairInput>& positives, std::uint64_t seed) {
    const std::size_t n = positives.size();
    std::map<std::string, std::vector<std::size_t>> by_patent;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = positives[i];
        if (!p.label || *p.label != 1 || p.claim_patent_id != p.piece_patent_id) {
            throw PreconditionError("build_negative_pairs: input pair '" + p.pair_id + "' is not a label-1 pair");
        }
        by_patent[p.piece_patent_id].push_back(i);
    }
    if (n == 0) return {};
    if (by_patent.size() < 2) {
        throw PreconditionError("build_negative_pairs: positives come from a single patent; "
                                "no cross-patent pairing exists");
    }
    std::size_t largest = 0;
    std::string largest_id;
    for (const auto& [id, idx] : by_patent) {
        if (idx.size() > largest) {
            largest = idx.size();
            largest_id = id;
        }
    }
    if (2 * largest > n) {
        throw PreconditionError("build_negative_pairs: patent '" + largest_id + "' holds " +
                                std::to_string(largest) + " of " + std::to_string(n) +
                                " pieces; more than half makes cross-patent pairing impossible");
    }

    Rng rng(seed);
    std::vector<std::size_t> perm(n);
    bool found = false;
    for (int attempt = 0; attempt < detail::kNegativeRejections && !found; ++attempt) {
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        rng.shuffle(std::span<std::size_t>(perm));
        found = detail::crosses_patents(positives, perm);
    }
    if (!found) {
        std::vector<std::vector<std::size_t>> blocks;
        for (auto& [id, idx] : by_patent) blocks.push_back(idx);
        rng.shuffle(std::span<std::vector<std::size_t>>(blocks));
        std::vector<std::size_t> order;
        order.reserve(n);
        for (auto& b : blocks) {
            rng.shuffle(std::span<std::size_t>(b));
            order.insert(order.end(), b.begin(), b.end());
        }
        for (std::size_t j = 0; j < n; ++j) perm[order[j]] = order[(j + largest) % n];
    }

    std::vector<PairInput> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& claim = positives[i];
        const auto& piece = positives[perm[i]];
        PairInput pair;
        pair.claim_patent_id = claim.claim_patent_id;
        pair.piece_patent_id = piece.piece_patent_id;
        pair.piece_index = piece.piece_index;
        pair.pair_id = training_pair_id(pair.claim_patent_id, pair.piece_patent_id, pair.piece_index);
        pair.claim_text = claim.claim_text;
        pair.piece_text = piece.piece_text;
        pair.label = 0;
        pair.purpose = claim.purpose;
        out.push_back(std::move(pair));
    }
    return out;
}

struct AssemblyConfig {
    // Word budget for claim + piece together; stands in for the classifier's token limit.
    std::size_t max_words = 500;
    // Render [CLS]/[SEP] markers into exported text.
    bool render_markers = false;
};

inline void validate(const AssemblyConfig& c) {
    if (c.max_words < 2) throw PreconditionError("assembly config: max_words must be >= 2");
}

struct AssembledInput {
    std::string pair_id;
    std::string claim;
    std::string piece;
    std::size_t claim_words = 0;
    std::size_t piece_words = 0;
    bool truncated = false;
    bool render_markers = false;

    std::size_t word_count() const noexcept { return claim_words + piece_words; }

    // claim | separator | piece
    std::string rendered() const {
        if (render_markers) return "[CLS] " + claim + " [SEP] " + piece + " [SEP]";
        return claim + " [SEP] " + piece;
    }
};

// Fits claim + piece into the word budget by dropping trailing piece words.
// The claim is never shortened.
inline AssembledInput assemble(const PairInput& pair, const AssemblyConfig& config) {
    validate(config);
    const auto claim_words = text::count_words(pair.claim_text);
    if (claim_words == 0) throw PreconditionError("assemble: pair '" + pair.pair_id + "' has an empty claim");
    if (claim_words >= config.max_words) throw ClaimTooLongError(claim_words, config.max_words);

    AssembledInput out;
    out.pair_id = pair.pair_id;
    out.claim = pair.claim_text;
    out.claim_words = claim_words;
    out.render_markers = config.render_markers;

    const std::size_t budget = config.max_words - claim_words;
    const auto piece_words = text::split_words(pair.piece_text);
    if (piece_words.size() <= budget) {
        out.piece = pair.piece_text;
        out.piece_words = piece_words.size();
    } else {
        const auto& last = piece_words[budget - 1];
        const auto end = static_cast<std::size_t>(last.data() + last.size() - pair.piece_text.data());
        out.piece = pair.piece_text.substr(0, end);
        out.piece_words = budget;
        out.truncated = true;
    }
    return out;
}

// The pair with its piece cut to the budget, ready for classification.
inline PairInput fit_to_budget(PairInput pair, const AssemblyConfig& config) {
    auto assembled = assemble(pair, config);
    if (assembled.truncated) pair.piece_text = std::move(assembled.piece);
    return pair;
}

struct ValidationSplit {
    std::vector<PairInput> training;
    std::vector<PairInput> validation;
};

// Random pair-level hold-out of round(fraction * N) pairs. Both outputs keep input order.
inline ValidationSplit split_validation(const std::vector<PairInput>& pairs, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) {
        throw PreconditionError("split_validation: fraction must lie in [0, 1), got " + text::format_double(fraction));
    }
    const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pairs.size())));
    std::vector<std::size_t> idx(pairs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(idx));
    std::vector<bool> held(pairs.size(), false);
    for (std::size_t i = 0; i < n_val; ++i) held[idx[i]] = true;

    ValidationSplit out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (held[i]) {
            out.validation.push_back(pairs[i]);
            out.validation.back().purpose = Purpose::validation;
        } else {
            out.training.push_back(pairs[i]);
        }
    }
    return out;
}

// {pair_id, claim, piece, label}; label omitted for search pairs. With markers
// on, the rendered sequence is added as "text".
inline void export_pairs(std::ostream& out, const std::vector<PairInput>& pairs, const AssemblyConfig& config,
                         const std::optional<jsonl::Json>& meta = std::nullopt) {
    if (meta) jsonl::write_meta(out, *meta);
    for (const auto& pair : pairs) {
        const auto assembled = assemble(pair, config);
        jsonl::Json rec;
        rec["pair_id"] = pair.pair_id;
        rec["claim"] = assembled.claim;
        rec["piece"] = assembled.piece;
        if (pair.purpose != Purpose::search && pair.label) rec["label"] = *pair.label;
        if (config.render_markers) rec["text"] = assembled.rendered();
        jsonl::write_record(out, rec);
    }
}

}  // namespace claimsearch
