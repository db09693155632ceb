#pragma once

// Shared tokenizer: ASCII-lowercase, split on Unicode whitespace, strip
// leading/trailing ASCII punctuation per token. Internal hyphens and
// apostrophes survive ("state-of-the-art", "don't"). Multi-byte UTF-8
// sequences are never stripped or case-folded.

#include <cstdint>
#include <string>
#include <vector>

namespace vizscore {

namespace detail {

// Whitespace code points recognized as token separators.
inline bool is_unicode_space(std::uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Decodes one UTF-8 code point at `i`, advancing `i`. Malformed bytes are
// treated as Latin-1 so tokenization stays total over arbitrary input.
inline std::uint32_t decode_utf8(const std::string& s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    const unsigned char b0 = byte(i);
    std::size_t len = 1;
    std::uint32_t cp = b0;
    if ((b0 & 0x80u) == 0) {
        len = 1;
    } else if ((b0 & 0xE0u) == 0xC0u && i + 1 < s.size()) {
        cp = b0 & 0x1Fu;
        len = 2;
    } else if ((b0 & 0xF0u) == 0xE0u && i + 2 < s.size()) {
        cp = b0 & 0x0Fu;
        len = 3;
    } else if ((b0 & 0xF8u) == 0xF0u && i + 3 < s.size()) {
        cp = b0 & 0x07u;
        len = 4;
    } else {
        ++i;
        return cp;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const unsigned char bk = byte(i + k);
        if ((bk & 0xC0u) != 0x80u) {  // malformed continuation
            ++i;
            return b0;
        }
        cp = (cp << 6) | (bk & 0x3Fu);
    }
    i += len;
    return cp;
}

inline bool is_ascii_alnum(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

}  // namespace detail

// Lowercases ASCII letters; other bytes pass through untouched.
inline std::string ascii_lower(const std::string& s) {
    std::string out = s;
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    const auto flush = [&] {
        if (current.empty()) return;
        // Strip leading/trailing ASCII non-alphanumerics; multi-byte chars
        // (bytes >= 0x80) are kept.
        std::size_t b = 0, e = current.size();
        while (b < e) {
            const auto c = static_cast<unsigned char>(current[b]);
            if (c >= 0x80 || detail::is_ascii_alnum(c)) break;
            ++b;
        }
        while (e > b) {
            const auto c = static_cast<unsigned char>(current[e - 1]);
            if (c >= 0x80 || detail::is_ascii_alnum(c)) break;
            --e;
        }
        if (e > b) tokens.push_back(ascii_lower(current.substr(b, e - b)));
        current.clear();
    };
    while (i < text.size()) {
        const std::size_t start = i;
        const std::uint32_t cp = detail::decode_utf8(text, i);
        if (detail::is_unicode_space(cp)) {
            flush();
        } else {
            current.append(text, start, i - start);
        }
    }
    flush();
    return tokens;
}

}  // namespace vizscore
