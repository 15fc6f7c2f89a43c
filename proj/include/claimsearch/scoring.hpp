#pragma once

#include <algorithm>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "claimsearch/classifier.hpp"
#include "claimsearch/error.hpp"
#include "claimsearch/jsonl.hpp"
#include "claimsearch/pairs.hpp"
#include "claimsearch/text.hpp"

namespace claimsearch {

enum class ScoringMode { label, sigmoid };

inline const char* to_string(ScoringMode m) { return m == ScoringMode::label ? "label" : "sigmoid"; }

inline ScoringMode parse_scoring_mode(const std::string& s) {
    if (s == "label") return ScoringMode::label;
    if (s == "sigmoid") return ScoringMode::sigmoid;
    throw ConfigError("mode must be 'label' or 'sigmoid', got '" + s + "'");
}

// Classification of one description piece, joined to its provenance.
struct PieceResult {
    std::string pair_id;
    std::string patent_id;
    std::size_t piece_index = 0;
    double prob_label1 = 0.0;
    int predicted_label = 0;

    bool operator==(const PieceResult&) const = default;
};

struct PatentScore {
    std::string patent_id;
    std::size_t n_label1 = 0;
    std::size_t n_label0 = 0;
    double sum_sigmoid1 = 0.0;
    double score_label = 0.0;    // n_label1 / n_pieces
    double score_sigmoid = 0.0;  // sum_sigmoid1 / n_pieces
    std::size_t rank = 0;

    std::size_t n_pieces() const noexcept { return n_label0 + n_label1; }
    double score(ScoringMode mode) const noexcept {
        return mode == ScoringMode::label ? score_label : score_sigmoid;
    }
    bool operator==(const PatentScore&) const = default;
};

// Joins classifier output to the pieces it was computed for.
inline std::vector<PieceResult> join_results(std::span<const ClassificationResult> results,
                                             std::span<const PairInput> pairs) {
    std::unordered_map<std::string, const PairInput*> by_id;
    for (const auto& p : pairs) by_id.emplace(p.pair_id, &p);
    std::vector<PieceResult> out;
    out.reserve(results.size());
    for (const auto& r : results) {
        auto it = by_id.find(r.pair_id);
        if (it == by_id.end()) throw MissingIdError(r.pair_id, "scored pieces");
        out.push_back({r.pair_id, it->second->piece_patent_id, it->second->piece_index, r.prob_label1,
                       r.predicted_label});
    }
    return out;
}

// Per-patent density scores. Each patent's score is the fraction of its pieces
// labeled relevant (label mode) or the mean label-1 probability over its
// pieces (sigmoid mode); both are always computed. Patents appear in order of
// first occurrence. Sigmoid sums run in piece order, so the result does not
// depend on the order of the input rows.
inline std::vector<PatentScore> score_pieces(std::span<const PieceResult> rows) {
    std::unordered_set<std::string> seen_pairs;
    std::unordered_set<std::string> seen_pieces;
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<const PieceResult*>> grouped;
    for (const auto& r : rows) {
        if (!seen_pairs.insert(r.pair_id).second) {
            throw PreconditionError("score_patents: duplicate result for pair '" + r.pair_id + "'");
        }
        if (!seen_pieces.insert(r.patent_id + '\x1f' + std::to_string(r.piece_index)).second) {
            throw PreconditionError("score_patents: piece " + r.patent_id + "#" + std::to_string(r.piece_index) +
                                    " scored more than once");
        }
        auto [it, inserted] = grouped.try_emplace(r.patent_id);
        if (inserted) order.push_back(r.patent_id);
        it->second.push_back(&r);
    }

    std::vector<PatentScore> out;
    out.reserve(order.size());
    for (const auto& id : order) {
        auto& pieces = grouped[id];
        std::sort(pieces.begin(), pieces.end(),
                  [](const PieceResult* a, const PieceResult* b) { return a->piece_index < b->piece_index; });
        PatentScore s;
        s.patent_id = id;
        for (const auto* p : pieces) {
            if (p->predicted_label == 1) {
                ++s.n_label1;
            } else {
                ++s.n_label0;
            }
            s.sum_sigmoid1 += p->prob_label1;
        }
        const auto n = static_cast<double>(s.n_pieces());
        s.score_label = static_cast<double>(s.n_label1) / n;
        s.score_sigmoid = s.sum_sigmoid1 / n;
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<PatentScore> score_patents(std::span<const ClassificationResult> results,
                                              std::span<const PairInput> pairs) {
    const auto rows = join_results(results, pairs);
    return score_pieces(rows);
}

struct Ranking {
    std::string query;
    ScoringMode mode = ScoringMode::label;
    std::vector<PatentScore> entries;  // rank order, entries[i].rank == i + 1

    std::optional<std::size_t> position_of(const std::string& patent_id) const {
        for (const auto& e : entries) {
            if (e.patent_id == patent_id) return e.rank;
        }
        return std::nullopt;
    }

    const PatentScore* find(const std::string& patent_id) const {
        for (const auto& e : entries) {
            if (e.patent_id == patent_id) return &e;
        }
        return nullptr;
    }

    // Patents sharing exactly this patent's score, itself included.
    std::size_t tie_group_size(const std::string& patent_id) const {
        const auto* e = find(patent_id);
        if (e == nullptr) return 0;
        const double s = e->score(mode);
        return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(),
                                                      [&](const PatentScore& o) { return o.score(mode) == s; }));
    }
};

// Score descending, ties by ascending patent_id; ranks 1..N without gaps.
inline Ranking rank(std::vector<PatentScore> scores, ScoringMode mode, std::string query = {}) {
    if (scores.empty()) throw PreconditionError("rank: no scores given");
    std::sort(scores.begin(), scores.end(), [mode](const PatentScore& a, const PatentScore& b) {
        const double sa = a.score(mode), sb = b.score(mode);
        if (sa != sb) return sa > sb;
        return a.patent_id < b.patent_id;
    });
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i].rank = i + 1;
    return {std::move(query), mode, std::move(scores)};
}

inline void export_ranking_csv(std::ostream& out, const Ranking& r, const std::optional<jsonl::Json>& meta = std::nullopt) {
    if (meta) out << "# " << meta->dump() << '\n';
    out << "rank,patent_id,score_label,score_sigmoid,n_label1,n_pieces\n";
    for (const auto& e : r.entries) {
        out << e.rank << ',' << e.patent_id << ',' << text::format_double(e.score_label) << ','
            << text::format_double(e.score_sigmoid) << ',' << e.n_label1 << ',' << e.n_pieces() << '\n';
    }
}

inline jsonl::Json ranking_to_json(const Ranking& r, const std::optional<jsonl::Json>& meta = std::nullopt) {
    jsonl::Json j;
    if (meta) j["meta"] = *meta;
    j["query"] = r.query;
    j["mode"] = to_string(r.mode);
    auto rows = jsonl::Json::array();
    for (const auto& e : r.entries) {
        jsonl::Json row;
        row["rank"] = e.rank;
        row["patent_id"] = e.patent_id;
        row["score_label"] = e.score_label;
        row["score_sigmoid"] = e.score_sigmoid;
        row["n_label1"] = e.n_label1;
        row["n_pieces"] = e.n_pieces();
        rows.push_back(std::move(row));
    }
    j["ranking"] = std::move(rows);
    return j;
}

inline void export_ranking_json(std::ostream& out, const Ranking& r, const std::optional<jsonl::Json>& meta = std::nullopt) {
    out << ranking_to_json(r, meta).dump(2) << '\n';
}

}  // namespace claimsearch
