#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
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
#include "claimsearch/text.hpp"

namespace claimsearch {

struct DescriptionPiece {
    std::string patent_id;
    std::size_t piece_index = 0;
    std::string text;
    std::size_t word_count = 0;

    bool operator==(const DescriptionPiece&) const = default;
};

/// Piece lengths in words; every piece except a patent's last one has a
/// length in [min_len, max_len].
struct SliceConfig {
    std::size_t min_len = 100;
    std::size_t max_len = 200;
    std::uint64_t seed = 0;
};

inline void validate(const SliceConfig& c) {
    if (c.min_len < 1) throw PreconditionError("slice config: min_len must be >= 1");
    if (c.min_len > c.max_len) {
        throw PreconditionError("slice config: min_len (" + std::to_string(c.min_len) + ") > max_len (" +
                                std::to_string(c.max_len) + ")");
    }
}

// Cuts the description into consecutive word slices. Each length is drawn
// uniformly from [min_len, max_len] by a generator keyed on (seed, patent_id),
// so a patent's pieces do not depend on which other patents are sliced.
// The last piece keeps whatever words remain.
inline std::vector<DescriptionPiece> slice(const Patent& patent, const SliceConfig& config) {
    validate(config);
    const auto words = text::split_words(patent.description);
    if (words.empty()) throw EmptyFieldError("description", patent.patent_id);

    Rng rng(derive_seed(config.seed, patent.patent_id));
    std::vector<DescriptionPiece> pieces;
    std::size_t pos = 0;
    while (pos < words.size()) {
        const auto want = static_cast<std::size_t>(rng.uniform(config.min_len, config.max_len));
        const std::size_t take = std::min(want, words.size() - pos);
        DescriptionPiece piece;
        piece.patent_id = patent.patent_id;
        piece.piece_index = pieces.size();
        piece.text = text::join_words(std::span(words).subspan(pos, take));
        piece.word_count = take;
        pieces.push_back(std::move(piece));
        pos += take;
    }
    return pieces;
}

// Pieces of several patents, grouped per patent in insertion order.
class PieceTable {
public:
    struct Entry {
        std::string patent_id;
        std::vector<DescriptionPiece> pieces;
    };

    void add(std::string patent_id, std::vector<DescriptionPiece> pieces) {
        if (index_.count(patent_id) != 0) throw DuplicateIdError(patent_id);
        index_.emplace(patent_id, entries_.size());
        total_ += pieces.size();
        entries_.push_back({std::move(patent_id), std::move(pieces)});
    }

    const std::vector<DescriptionPiece>* find(const std::string& patent_id) const {
        auto it = index_.find(patent_id);
        return it == index_.end() ? nullptr : &entries_[it->second].pieces;
    }

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::size_t patent_count() const noexcept { return entries_.size(); }
    std::size_t total_pieces() const noexcept { return total_; }
    bool empty() const noexcept { return entries_.empty(); }

    // Table restricted to the given patents, in the order of ids.
    PieceTable subset(const std::vector<std::string>& ids) const {
        PieceTable out;
        for (const auto& id : ids) {
            const auto* p = find(id);
            if (p == nullptr) throw MissingIdError(id, "piece table");
            out.add(id, *p);
        }
        return out;
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t total_ = 0;
};

inline PieceTable slice_corpus(const Corpus& corpus, const SliceConfig& config) {
    validate(config);
    PieceTable table;
    for (const auto& p : corpus) table.add(p.patent_id, slice(p, config));
    return table;
}

inline void export_pieces(std::ostream& out, const PieceTable& table,
                          const std::optional<jsonl::Json>& meta = std::nullopt) {
    if (meta) jsonl::write_meta(out, *meta);
    for (const auto& e : table.entries()) {
        for (const auto& piece : e.pieces) {
            jsonl::Json rec;
            rec["patent_id"] = piece.patent_id;
            rec["piece_index"] = piece.piece_index;
            rec["text"] = piece.text;
            jsonl::write_record(out, rec);
        }
    }
}

// Reads a piece export. Pieces of one patent must be contiguous and numbered 0, 1, 2...
inline PieceTable import_pieces(std::istream& in) {
    PieceTable table;
    std::string current;
    std::vector<DescriptionPiece> pieces;
    bool have = false;
    jsonl::for_each_record(in, [&](const jsonl::Json& rec, std::size_t line) {
        if (!rec.contains("patent_id") || !rec.contains("piece_index") || !rec.contains("text")) {
            throw FormatError("line " + std::to_string(line) + ": piece record needs patent_id, piece_index, text");
        }
        DescriptionPiece piece;
        piece.patent_id = rec["patent_id"].get<std::string>();
        piece.piece_index = rec["piece_index"].get<std::size_t>();
        piece.text = rec["text"].get<std::string>();
        piece.word_count = text::count_words(piece.text);
        if (!have || piece.patent_id != current) {
            if (have) table.add(current, std::move(pieces));
            pieces.clear();
            current = piece.patent_id;
            have = true;
        }
        if (piece.piece_index != pieces.size()) {
            throw FormatError("line " + std::to_string(line) + ": piece_index out of sequence for " + current);
        }
        pieces.push_back(std::move(piece));
    });
    if (have) table.add(current, std::move(pieces));
    return table;
}

}  // namespace claimsearch
