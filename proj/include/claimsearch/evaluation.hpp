#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "claimsearch/classifier.hpp"
#include "claimsearch/corpus.hpp"
#include "claimsearch/error.hpp"
#include "claimsearch/pairs.hpp"
#include "claimsearch/scoring.hpp"
#include "claimsearch/search.hpp"
#include "claimsearch/slicer.hpp"
#include "claimsearch/text.hpp"

namespace claimsearch {

// Label 1 is the positive class.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }

    void add(int gold, int predicted) noexcept {
        if (gold == 1) {
            predicted == 1 ? ++tp : ++fn;
        } else {
            predicted == 1 ? ++fp : ++tn;
        }
    }

    bool operator==(const ConfusionCounts&) const = default;
};

struct F1Summary {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // No positives in gold or prediction: F1 is reported as 1.
    bool degenerate = false;
};

// F1 = 2tp / (2tp + fp + fn). An undefined precision or recall is reported as 0.
inline F1Summary f1_score(const ConfusionCounts& c) {
    F1Summary s;
    const auto denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) {
        s.precision = s.recall = s.f1 = 1.0;
        s.degenerate = true;
        return s;
    }
    s.f1 = static_cast<double>(2 * c.tp) / static_cast<double>(denom);
    s.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    s.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    return s;
}

inline ConfusionCounts confusion(std::span<const int> gold, std::span<const int> predicted) {
    if (gold.size() != predicted.size()) throw PreconditionError("confusion: gold and predicted lengths differ");
    ConfusionCounts c;
    for (std::size_t i = 0; i < gold.size(); ++i) c.add(gold[i], predicted[i]);
    return c;
}

struct PretestConfig {
    SliceConfig slice;
    AssemblyConfig assembly;
    std::uint64_t seed = 0;  // negative pairing
    ScoringMode mode = ScoringMode::label;
    // Also rank every pretest patent against each pretest claim.
    bool patent_level = true;
};

struct PretestPatentRow {
    std::string patent_id;
    std::optional<std::size_t> own_rank;
    double own_score = 0.0;
    std::size_t n_ranked = 0;
};

struct PretestResult {
    ConfusionCounts counts;
    F1Summary pair_f1;
    std::size_t n_pairs = 0;
    std::vector<PieceResult> pair_audit;
    std::vector<int> gold_labels;  // aligned with pair_audit
    std::vector<PretestPatentRow> patents;

    // Pretest patents whose own description ranks first for their own claim.
    std::size_t own_first() const {
        std::size_t n = 0;
        for (const auto& r : patents) n += r.own_rank && *r.own_rank == 1;
        return n;
    }
    double patent_level_metric() const {
        return patents.empty() ? 0.0 : static_cast<double>(own_first()) / static_cast<double>(patents.size());
    }
};

// Pair-level check of whether the classifier recognizes each claim's own
// description pieces: label-1 and label-0 pairs are built over the group
// exactly as for training, classified, and scored with F1. With patent_level
// on, each claim is also searched over the whole group and the rank of its own
// patent recorded.
inline PretestResult pretest(const Corpus& group, const PretestConfig& config, const Classifier& classifier,
                             const CorpusGroup* training = nullptr) {
    if (group.size() < 2) throw PreconditionError("pretest: group needs at least two patents");
    if (training != nullptr) {
        for (const auto& p : group) {
            if (training->contains(p.patent_id)) {
                throw PreconditionError("pretest: patent " + p.patent_id + " is also in the training group");
            }
        }
    }
    const auto pieces = slice_corpus(group, config.slice);
    auto positives = build_positive_pairs(pieces, group, Purpose::pretest);
    auto negatives = build_negative_pairs(positives, config.seed);
    std::vector<PairInput> pairs;
    pairs.reserve(positives.size() + negatives.size());
    for (auto& p : positives) pairs.push_back(fit_to_budget(std::move(p), config.assembly));
    for (auto& p : negatives) pairs.push_back(fit_to_budget(std::move(p), config.assembly));

    const auto results = classify_batch(pairs, classifier);
    PretestResult out;
    out.n_pairs = pairs.size();
    out.pair_audit.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        out.counts.add(*pairs[i].label, results[i].predicted_label);
        out.gold_labels.push_back(*pairs[i].label);
        out.pair_audit.push_back({results[i].pair_id, pairs[i].piece_patent_id, pairs[i].piece_index,
                                  results[i].prob_label1, results[i].predicted_label});
    }
    out.pair_f1 = f1_score(out.counts);

    if (config.patent_level) {
        CorpusGroup all{GroupName::pretest, {}};
        for (const auto& p : group) all.patent_ids.push_back(p.patent_id);
        for (const auto& p : group) {
            SearchJob job;
            job.claim_of_interest = p.first_claim;
            job.claim_source_id = p.patent_id;
            job.target_group = all;
            job.slice_config = config.slice;
            job.assembly_config = config.assembly;
            job.mode = config.mode;
            const auto outcome = run_search(job, pieces, classifier);
            PretestPatentRow row;
            row.patent_id = p.patent_id;
            row.own_rank = outcome.ranking.position_of(p.patent_id);
            if (const auto* e = outcome.ranking.find(p.patent_id)) row.own_score = e->score(config.mode);
            row.n_ranked = outcome.ranking.entries.size();
            out.patents.push_back(std::move(row));
        }
    }
    return out;
}

struct XRow {
    std::string reference_id;
    std::string cited_x_id;
    std::optional<std::size_t> position;
    double score = 0.0;
    std::size_t tie_group_size = 0;
    std::size_t n_ranked = 0;
};

struct XReport {
    ScoringMode mode = ScoringMode::label;
    std::vector<XRow> rows;
    std::size_t corpus_size = 0;  // largest searched group
};

struct ReferenceRanking {
    std::string reference_id;
    Ranking ranking;
    CorpusGroup target_group;
};

using CitedX = std::map<std::string, std::vector<std::string>>;

// One row per (reference, cited X) pair: rank position and score of the cited
// patent in the reference claim's ranking.
inline XReport x_position_report(const std::vector<ReferenceRanking>& searches, const CitedX& cited_x) {
    XReport report;
    if (!searches.empty()) report.mode = searches.front().ranking.mode;
    std::map<std::string, const ReferenceRanking*> by_ref;
    for (const auto& s : searches) by_ref[s.reference_id] = &s;
    for (const auto& [ref, cited] : cited_x) {
        auto it = by_ref.find(ref);
        if (it == by_ref.end()) throw MissingIdError(ref, "searched references");
        const auto& search = *it->second;
        report.corpus_size = std::max(report.corpus_size, search.ranking.entries.size());
        for (const auto& x : cited) {
            if (!search.target_group.contains(x)) {
                throw MissingIdError(x, "target group of reference " + ref);
            }
            XRow row;
            row.reference_id = ref;
            row.cited_x_id = x;
            row.position = search.ranking.position_of(x);
            if (const auto* e = search.ranking.find(x)) row.score = e->score(search.ranking.mode);
            row.tie_group_size = search.ranking.tie_group_size(x);
            row.n_ranked = search.ranking.entries.size();
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

struct ReferenceSearch {
    std::string reference_id;
    SearchJob job;
};

// Runs every search, then reports cited X positions.
inline XReport x_position_report(const std::vector<ReferenceSearch>& jobs, const Corpus& corpus,
                                 const Classifier& classifier, const CitedX& cited_x) {
    for (const auto& [ref, cited] : cited_x) {
        for (const auto& j : jobs) {
            if (j.reference_id != ref) continue;
            for (const auto& x : cited) {
                if (!j.job.target_group.contains(x)) throw MissingIdError(x, "target group of reference " + ref);
            }
        }
    }
    std::vector<ReferenceRanking> rankings;
    for (const auto& j : jobs) {
        auto outcome = run_search(j.job, corpus, classifier);
        rankings.push_back({j.reference_id, std::move(outcome.ranking), j.job.target_group});
    }
    return x_position_report(rankings, cited_x);
}

inline std::string position_text(const std::optional<std::size_t>& pos) {
    return pos ? std::to_string(*pos) : std::string("not found");
}

inline void write_x_report_csv(std::ostream& out, const XReport& r, const std::optional<jsonl::Json>& meta = std::nullopt) {
    if (meta) out << "# " << meta->dump() << '\n';
    out << "reference_id,cited_x_id,position,score,tie_group_size,n_ranked\n";
    for (const auto& row : r.rows) {
        out << row.reference_id << ',' << row.cited_x_id << ',' << (row.position ? std::to_string(*row.position) : "")
            << ',' << text::format_double(row.score) << ',' << row.tie_group_size << ',' << row.n_ranked << '\n';
    }
}

inline void write_x_report_markdown(std::ostream& out, const XReport& r,
                                    const std::optional<jsonl::Json>& meta = std::nullopt) {
    if (meta) out << "<!-- " << meta->dump() << " -->\n";
    out << "| Reference patent | Cited X patent | Pos. relevance score | Score (" << to_string(r.mode)
        << ") | Tie group |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& row : r.rows) {
        out << "| " << row.reference_id << " | " << row.cited_x_id << " | " << position_text(row.position) << " of "
            << row.n_ranked << " | " << text::format_double(row.score) << " | " << row.tie_group_size << " |\n";
    }
}

// Reference patents and their cited X patents.
inline void write_reference_table_markdown(std::ostream& out, const CitedX& cited_x) {
    out << "| Reference patent | Cited X patent |\n|---|---|\n";
    for (const auto& [ref, cited] : cited_x) {
        for (const auto& x : cited) out << "| " << ref << " | " << x << " |\n";
    }
}

inline void write_pretest_markdown(std::ostream& out, const PretestResult& r,
                                   const std::optional<jsonl::Json>& meta = std::nullopt) {
    if (meta) out << "<!-- " << meta->dump() << " -->\n";
    out << "| Pairs | TP | FP | TN | FN | Precision | Recall | F1 |\n|---|---|---|---|---|---|---|---|\n";
    out << "| " << r.n_pairs << " | " << r.counts.tp << " | " << r.counts.fp << " | " << r.counts.tn << " | "
        << r.counts.fn << " | " << text::format_double(r.pair_f1.precision) << " | "
        << text::format_double(r.pair_f1.recall) << " | " << text::format_double(r.pair_f1.f1)
        << (r.pair_f1.degenerate ? " (degenerate)" : "") << " |\n";
    if (!r.patents.empty()) {
        out << "\nOwn description ranked first: " << r.own_first() << " / " << r.patents.size() << "\n";
    }
}

}  // namespace claimsearch
