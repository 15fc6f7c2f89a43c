#pragma once

#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "claimsearch/error.hpp"

namespace claimsearch::jsonl {

using Json = nlohmann::ordered_json;

// Key of the optional reproducibility header record that may open a JSONL file.
inline constexpr const char* kMetaKey = "_meta";

inline void write_meta(std::ostream& out, const Json& meta) {
    Json rec;
    rec[kMetaKey] = meta;
    out << rec.dump() << '\n';
}

inline void write_record(std::ostream& out, const Json& rec) { out << rec.dump() << '\n'; }

// Calls fn(record, line_number) for every data record. Blank lines and
// header records are skipped.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        Json rec;
        try {
            rec = Json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        if (!rec.is_object()) {
            throw FormatError("line " + std::to_string(line_no) + ": expected a JSON object");
        }
        if (rec.contains(kMetaKey)) continue;
        fn(rec, line_no);
    }
}

}  // namespace claimsearch::jsonl
