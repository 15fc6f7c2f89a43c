#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace claimsearch::text {

namespace detail {

// Decodes one UTF-8 sequence starting at pos. Malformed bytes decode as
// themselves with length 1, so arbitrary input never stalls the scanner.
inline std::uint32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& len) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    auto cont = [&](std::size_t i) -> int {
        if (pos + i >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[pos + i]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) {
        len = 1;
        return b0;
    }
    if ((b0 & 0xE0) == 0xC0) {
        const int c1 = cont(1);
        if (c1 >= 0) {
            len = 2;
            return ((b0 & 0x1Fu) << 6) | static_cast<std::uint32_t>(c1);
        }
    } else if ((b0 & 0xF0) == 0xE0) {
        const int c1 = cont(1), c2 = cont(2);
        if (c1 >= 0 && c2 >= 0) {
            len = 3;
            return ((b0 & 0x0Fu) << 12) | (static_cast<std::uint32_t>(c1) << 6) |
                   static_cast<std::uint32_t>(c2);
        }
    } else if ((b0 & 0xF8) == 0xF0) {
        const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
        if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
            len = 4;
            return ((b0 & 0x07u) << 18) | (static_cast<std::uint32_t>(c1) << 12) |
                   (static_cast<std::uint32_t>(c2) << 6) | static_cast<std::uint32_t>(c3);
        }
    }
    len = 1;
    return b0;
}

}  // namespace detail

// Unicode White_Space property.
constexpr bool is_space(std::uint32_t cp) noexcept {
    return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
           (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
           cp == 0x205F || cp == 0x3000;
}

// A word is a maximal run of non-whitespace code points. Views point into text.
inline std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> words;
    std::size_t pos = 0;
    std::size_t start = std::string_view::npos;
    while (pos < text.size()) {
        std::size_t len = 1;
        const auto cp = detail::decode_utf8(text, pos, len);
        if (is_space(cp)) {
            if (start != std::string_view::npos) {
                words.push_back(text.substr(start, pos - start));
                start = std::string_view::npos;
            }
        } else if (start == std::string_view::npos) {
            start = pos;
        }
        pos += len;
    }
    if (start != std::string_view::npos) words.push_back(text.substr(start));
    return words;
}

inline std::size_t count_words(std::string_view text) { return split_words(text).size(); }

// Joins words with a single ASCII space.
template <typename Range>
std::string join_words(const Range& words) {
    std::string out;
    bool first = true;
    for (const auto& w : words) {
        if (!first) out.push_back(' ');
        out.append(w.data(), w.size());
        first = false;
    }
    return out;
}

// Lowercases ASCII letters and strips leading/trailing ASCII punctuation.
// Non-ASCII bytes are kept as they are.
inline std::string normalize_word(std::string_view word) {
    auto is_punct = [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u < 0x80 && ((u >= 0x21 && u <= 0x2F) || (u >= 0x3A && u <= 0x40) ||
                            (u >= 0x5B && u <= 0x60) || (u >= 0x7B && u <= 0x7E));
    };
    std::size_t b = 0, e = word.size();
    while (b < e && is_punct(word[b])) ++b;
    while (e > b && is_punct(word[e - 1])) --e;
    std::string out(word.substr(b, e - b));
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

// Shortest representation that round-trips; locale independent.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace claimsearch::text
