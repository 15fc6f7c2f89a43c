#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "claimsearch/classifier.hpp"
#include "claimsearch/corpus.hpp"
#include "claimsearch/error.hpp"
#include "claimsearch/jsonl.hpp"
#include "claimsearch/pairs.hpp"
#include "claimsearch/scoring.hpp"
#include "claimsearch/slicer.hpp"

namespace claimsearch {

struct SearchJob {
    std::string claim_of_interest;
    std::optional<std::string> claim_source_id;
    CorpusGroup target_group{GroupName::search, {}};
    SliceConfig slice_config;
    AssemblyConfig assembly_config;
    ScoringMode mode = ScoringMode::label;
    // Drop claim_source_id from the target group before searching.
    bool exclude_self = false;

    std::string query_label() const { return claim_source_id.value_or("claim_of_interest"); }
};

struct AuditRow {
    PieceResult result;
    bool complete = true;
};

struct SearchOutcome {
    Ranking ranking;
    std::vector<AuditRow> audit;
    std::vector<std::string> warnings;
};

// A search aborted because some pairs stayed unscored. audit() holds every
// query pair; the unscored ones are marked incomplete.
class SearchFailed : public BackendError {
public:
    SearchFailed(const BackendError& cause, std::vector<AuditRow> audit)
        : BackendError(cause.code(), std::string("search aborted, ") + std::to_string(cause.failed_pair_ids().size()) +
                                         " pairs unscored: " + cause.what(),
                       cause.failed_pair_ids()),
          audit_(std::move(audit)) {}

    const std::vector<AuditRow>& audit() const noexcept { return audit_; }

private:
    std::vector<AuditRow> audit_;
};

inline std::vector<std::string> effective_targets(const SearchJob& job) {
    std::vector<std::string> ids;
    for (const auto& id : job.target_group.patent_ids) {
        if (job.exclude_self && job.claim_source_id && id == *job.claim_source_id) continue;
        ids.push_back(id);
    }
    return ids;
}

inline void validate(const SearchJob& job) {
    if (text::count_words(job.claim_of_interest) == 0) throw PreconditionError("search: claim of interest is empty");
    if (effective_targets(job).empty()) throw PreconditionError("search: target group is empty");
}

// One search pair per (patent, piece) of the target group, every pair carrying
// the same claim. Pieces are cut to the word budget.
inline std::vector<PairInput> build_query_inputs(const SearchJob& job, const PieceTable& pieces) {
    validate(job);
    validate(job.assembly_config);
    std::vector<PairInput> out;
    for (const auto& id : effective_targets(job)) {
        const auto* patent_pieces = pieces.find(id);
        if (patent_pieces == nullptr) throw MissingIdError(id, "piece table");
        for (const auto& piece : *patent_pieces) {
            PairInput pair;
            pair.pair_id = query_pair_id(id, piece.piece_index);
            pair.claim_patent_id = job.claim_source_id.value_or("");
            pair.piece_patent_id = id;
            pair.piece_index = piece.piece_index;
            pair.claim_text = job.claim_of_interest;
            pair.piece_text = piece.text;
            pair.purpose = Purpose::search;
            out.push_back(fit_to_budget(std::move(pair), job.assembly_config));
        }
    }
    return out;
}

inline PieceTable slice_targets(const SearchJob& job, const Corpus& corpus) {
    PieceTable table;
    for (const auto& id : effective_targets(job)) table.add(id, slice(corpus.at(id), job.slice_config));
    return table;
}

inline std::vector<PairInput> build_query_inputs(const SearchJob& job, const Corpus& corpus) {
    validate(job);
    return build_query_inputs(job, slice_targets(job, corpus));
}

// Classifies every query pair, scores and ranks the target patents. Any
// unscored pair aborts the search with SearchFailed.
inline SearchOutcome run_search(const SearchJob& job, const PieceTable& pieces, const Classifier& classifier) {
    SearchOutcome out;
    for (const auto& id : effective_targets(job)) {
        const auto* p = pieces.find(id);
        if (p != nullptr && p->empty()) out.warnings.push_back("patent " + id + " has no pieces; left out of the ranking");
    }
    const auto pairs = build_query_inputs(job, pieces);
    if (pairs.empty()) throw PreconditionError("search: target group has no description pieces");

    auto partial = classify_batch_partial(pairs, classifier);
    out.audit.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        AuditRow row;
        row.result.pair_id = pairs[i].pair_id;
        row.result.patent_id = pairs[i].piece_patent_id;
        row.result.piece_index = pairs[i].piece_index;
        if (partial.results[i]) {
            row.result.prob_label1 = partial.results[i]->prob_label1;
            row.result.predicted_label = partial.results[i]->predicted_label;
        } else {
            row.complete = false;
        }
        out.audit.push_back(std::move(row));
    }
    if (!partial.complete()) {
        if (partial.error_code == "transport") {
            throw SearchFailed(TransportError(partial.error_message, partial.failed_pair_ids), std::move(out.audit));
        }
        throw SearchFailed(ProtocolError(partial.error_message, partial.failed_pair_ids), std::move(out.audit));
    }

    std::vector<PieceResult> rows;
    rows.reserve(out.audit.size());
    for (const auto& a : out.audit) rows.push_back(a.result);
    out.ranking = rank(score_pieces(rows), job.mode, job.query_label());
    return out;
}

inline SearchOutcome run_search(const SearchJob& job, const Corpus& corpus, const Classifier& classifier) {
    validate(job);
    return run_search(job, slice_targets(job, corpus), classifier);
}

inline std::optional<std::size_t> position_of(const Ranking& ranking, const std::string& patent_id) {
    return ranking.position_of(patent_id);
}

// Re-ranks a completed audit table under any scoring mode without classifying again.
inline Ranking rank_from_audit(const std::vector<AuditRow>& audit, ScoringMode mode, std::string query) {
    std::vector<PieceResult> rows;
    rows.reserve(audit.size());
    for (const auto& a : audit) {
        if (!a.complete) throw PreconditionError("audit table is incomplete (pair '" + a.result.pair_id + "')");
        rows.push_back(a.result);
    }
    return rank(score_pieces(rows), mode, std::move(query));
}

inline void export_audit(std::ostream& out, const std::vector<AuditRow>& audit,
                         const std::optional<jsonl::Json>& meta = std::nullopt) {
    if (meta) jsonl::write_meta(out, *meta);
    for (const auto& a : audit) {
        jsonl::Json rec;
        rec["pair_id"] = a.result.pair_id;
        rec["patent_id"] = a.result.patent_id;
        rec["piece_index"] = a.result.piece_index;
        if (a.complete) {
            rec["prob_label1"] = a.result.prob_label1;
            rec["predicted_label"] = a.result.predicted_label;
        } else {
            rec["prob_label1"] = nullptr;
            rec["predicted_label"] = nullptr;
        }
        rec["complete"] = a.complete;
        jsonl::write_record(out, rec);
    }
}

inline std::vector<AuditRow> import_audit(std::istream& in) {
    std::vector<AuditRow> out;
    jsonl::for_each_record(in, [&](const jsonl::Json& rec, std::size_t line) {
        try {
            AuditRow row;
            row.result.pair_id = rec.at("pair_id").get<std::string>();
            row.result.patent_id = rec.at("patent_id").get<std::string>();
            row.result.piece_index = rec.at("piece_index").get<std::size_t>();
            row.complete = rec.value("complete", true);
            if (row.complete) {
                row.result.prob_label1 = rec.at("prob_label1").get<double>();
                row.result.predicted_label = rec.at("predicted_label").get<int>();
                if (row.result.predicted_label != decide_label(row.result.prob_label1)) {
                    throw FormatError("predicted_label disagrees with prob_label1");
                }
            }
            out.push_back(std::move(row));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("audit line " + std::to_string(line) + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError("audit line " + std::to_string(line) + ": " + e.what());
        }
    });
    return out;
}

}  // namespace claimsearch
