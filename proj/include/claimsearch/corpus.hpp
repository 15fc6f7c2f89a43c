#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "claimsearch/error.hpp"
#include "claimsearch/jsonl.hpp"
#include "claimsearch/rng.hpp"
#include "claimsearch/text.hpp"

namespace claimsearch {

struct Patent {
    std::string patent_id;
    std::string kind_code;
    std::vector<std::string> ipc_classes;
    std::string first_claim;
    std::string description;
    std::string language;

    bool operator==(const Patent&) const = default;
};

// Throws if the patent violates the record invariants.
inline void validate(const Patent& p) {
    if (p.patent_id.empty()) throw EmptyFieldError("patent_id", "<unnamed>");
    if (text::count_words(p.first_claim) == 0) throw EmptyFieldError("first_claim", p.patent_id);
    if (text::count_words(p.description) == 0) throw EmptyFieldError("description", p.patent_id);
}

// Insertion-ordered collection of patents keyed by patent_id. Immutable once
// built, so concurrent readers need no locking.
class Corpus {
public:
    Corpus() = default;

    void add(Patent p) {
        validate(p);
        if (index_.count(p.patent_id) != 0) throw DuplicateIdError(p.patent_id);
        index_.emplace(p.patent_id, patents_.size());
        patents_.push_back(std::move(p));
    }

    const Patent* find(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? nullptr : &patents_[it->second];
    }

    const Patent& at(const std::string& id) const {
        if (const auto* p = find(id)) return *p;
        throw MissingIdError(id, "corpus");
    }

    bool contains(const std::string& id) const { return index_.count(id) != 0; }
    std::size_t size() const noexcept { return patents_.size(); }
    bool empty() const noexcept { return patents_.empty(); }
    const std::vector<Patent>& patents() const noexcept { return patents_; }
    auto begin() const noexcept { return patents_.begin(); }
    auto end() const noexcept { return patents_.end(); }

    // Patents with the given ids, in the order of ids.
    Corpus subset(const std::vector<std::string>& ids) const {
        Corpus out;
        for (const auto& id : ids) out.add(at(id));
        return out;
    }

    bool operator==(const Corpus& other) const { return patents_ == other.patents_; }

private:
    std::vector<Patent> patents_;
    std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline std::string string_field(const jsonl::Json& rec, const char* key, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end() || it->is_null()) return {};
    if (!it->is_string()) {
        throw FormatError("line " + std::to_string(line) + ": field '" + key + "' must be a string");
    }
    return it->get<std::string>();
}

}  // namespace detail

inline Patent patent_from_json(const jsonl::Json& rec, std::size_t line = 0) {
    Patent p;
    p.patent_id = detail::string_field(rec, "patent_id", line);
    p.kind_code = detail::string_field(rec, "kind_code", line);
    p.first_claim = detail::string_field(rec, "first_claim", line);
    p.description = detail::string_field(rec, "description", line);
    p.language = detail::string_field(rec, "language", line);
    if (auto it = rec.find("ipc_classes"); it != rec.end() && !it->is_null()) {
        if (!it->is_array()) {
            throw FormatError("line " + std::to_string(line) + ": field 'ipc_classes' must be an array");
        }
        for (const auto& c : *it) {
            if (!c.is_string()) {
                throw FormatError("line " + std::to_string(line) + ": ipc class must be a string");
            }
            p.ipc_classes.push_back(c.get<std::string>());
        }
    }
    return p;
}

inline jsonl::Json patent_to_json(const Patent& p) {
    jsonl::Json rec;
    rec["patent_id"] = p.patent_id;
    rec["kind_code"] = p.kind_code;
    rec["ipc_classes"] = p.ipc_classes;
    rec["first_claim"] = p.first_claim;
    rec["description"] = p.description;
    rec["language"] = p.language;
    return rec;
}

// Reads a JSONL corpus. Text is stored verbatim; no normalization happens here.
inline Corpus ingest(std::istream& in) {
    Corpus corpus;
    jsonl::for_each_record(in, [&](const jsonl::Json& rec, std::size_t line) {
        corpus.add(patent_from_json(rec, line));
    });
    return corpus;
}

inline void export_corpus(std::ostream& out, const Corpus& corpus,
                          const std::optional<jsonl::Json>& meta = std::nullopt) {
    if (meta) jsonl::write_meta(out, *meta);
    for (const auto& p : corpus) jsonl::write_record(out, patent_to_json(p));
}

// Patents with at least one IPC class starting with class_prefix, stable order.
inline Corpus filter_by_class(const Corpus& corpus, const std::string& class_prefix) {
    if (class_prefix.empty()) throw PreconditionError("filter_by_class: class prefix must be non-empty");
    Corpus out;
    for (const auto& p : corpus) {
        const bool match = std::any_of(p.ipc_classes.begin(), p.ipc_classes.end(), [&](const auto& c) {
            return c.compare(0, class_prefix.size(), class_prefix) == 0;
        });
        if (match) out.add(p);
    }
    return out;
}

enum class GroupName { training, pretest, search };

inline const char* to_string(GroupName g) {
    switch (g) {
        case GroupName::training: return "training";
        case GroupName::pretest: return "pretest";
        case GroupName::search: return "search";
    }
    return "?";
}

struct CorpusGroup {
    GroupName name = GroupName::training;
    std::vector<std::string> patent_ids;

    bool contains(const std::string& id) const {
        return std::find(patent_ids.begin(), patent_ids.end(), id) != patent_ids.end();
    }
    std::size_t size() const noexcept { return patent_ids.size(); }
    bool operator==(const CorpusGroup&) const = default;
};

struct GroupSizes {
    std::size_t training = 0;
    std::size_t pretest = 0;
    std::size_t search = 0;
};

struct Groups {
    CorpusGroup training{GroupName::training, {}};
    CorpusGroup pretest{GroupName::pretest, {}};
    CorpusGroup search{GroupName::search, {}};

    bool operator==(const Groups&) const = default;
};

// Draws the three experiment groups.
//
// Training and pretest are drawn without replacement from one shuffle, so they
// never overlap. The search group is an independent draw from everything
// outside the pretest group, so it may share members with training. Ids in
// must_include_search are kept out of training and pretest and appended to the
// search group when the random draw missed them, so the search group may end
// up larger than sizes.search.
inline Groups assign_groups(const Corpus& corpus, const GroupSizes& sizes, std::uint64_t seed,
                            const std::vector<std::string>& must_include_search = {}) {
    std::unordered_set<std::string> forced;
    for (const auto& id : must_include_search) {
        if (!corpus.contains(id)) throw MissingIdError(id, "corpus (must_include_search)");
        forced.insert(id);
    }

    std::vector<std::string> pool;
    for (const auto& p : corpus) {
        if (forced.count(p.patent_id) == 0) pool.push_back(p.patent_id);
    }
    if (sizes.training + sizes.pretest > pool.size()) {
        throw CorpusTooSmallError("training (" + std::to_string(sizes.training) + ") + pretest (" +
                                  std::to_string(sizes.pretest) + ") patents requested, only " +
                                  std::to_string(pool.size()) + " eligible");
    }

    Rng rng(seed);
    rng.shuffle(std::span<std::string>(pool));

    Groups g;
    g.training.patent_ids.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(sizes.training));
    g.pretest.patent_ids.assign(pool.begin() + static_cast<std::ptrdiff_t>(sizes.training),
                                pool.begin() + static_cast<std::ptrdiff_t>(sizes.training + sizes.pretest));

    std::unordered_set<std::string> pretest_set(g.pretest.patent_ids.begin(), g.pretest.patent_ids.end());
    std::vector<std::string> search_pool;
    for (const auto& p : corpus) {
        if (pretest_set.count(p.patent_id) == 0) search_pool.push_back(p.patent_id);
    }
    if (sizes.search > search_pool.size()) {
        throw CorpusTooSmallError("search group of " + std::to_string(sizes.search) +
                                  " requested, only " + std::to_string(search_pool.size()) +
                                  " patents outside the pretest group");
    }
    rng.shuffle(std::span<std::string>(search_pool));
    g.search.patent_ids.assign(search_pool.begin(),
                               search_pool.begin() + static_cast<std::ptrdiff_t>(sizes.search));
    for (const auto& id : must_include_search) {
        if (!g.search.contains(id)) g.search.patent_ids.push_back(id);
    }
    return g;
}

inline jsonl::Json groups_to_json(const Groups& g) {
    jsonl::Json j;
    j["training"] = g.training.patent_ids;
    j["pretest"] = g.pretest.patent_ids;
    j["search"] = g.search.patent_ids;
    return j;
}

inline Groups groups_from_json(const jsonl::Json& j) {
    Groups g;
    auto read = [&](const char* key, CorpusGroup& grp) {
        if (!j.contains(key) || !j[key].is_array()) throw FormatError(std::string("groups: missing array '") + key + "'");
        for (const auto& id : j[key]) grp.patent_ids.push_back(id.get<std::string>());
    };
    read("training", g.training);
    read("pretest", g.pretest);
    read("search", g.search);
    return g;
}

}  // namespace claimsearch
