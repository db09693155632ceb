#include "vizscore/tokenize.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace vizscore;

TEST_CASE("tokenize lowercases and splits on whitespace", "[tokenize]") {
    CHECK(tokenize("The Red Apple") == std::vector<std::string>{"the", "red", "apple"});
    CHECK(tokenize("a\tb\nc") == std::vector<std::string>{"a", "b", "c"});
    CHECK(tokenize("  spaced   out  ") == std::vector<std::string>{"spaced", "out"});
}

TEST_CASE("tokenize strips edge punctuation and keeps internal marks", "[tokenize]") {
    CHECK(tokenize("Hello, world!") == std::vector<std::string>{"hello", "world"});
    CHECK(tokenize("\"quoted\"") == std::vector<std::string>{"quoted"});
    CHECK(tokenize("state-of-the-art") == std::vector<std::string>{"state-of-the-art"});
    CHECK(tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
    CHECK(tokenize("(999) 123-4567") == std::vector<std::string>{"999", "123-4567"});
    CHECK(tokenize("...") == std::vector<std::string>{});
}

TEST_CASE("tokenize handles unicode spaces and multi-byte text", "[tokenize]") {
    // U+00A0 no-break space and U+2003 em space act as separators
    CHECK(tokenize("a\xC2\xA0m") == std::vector<std::string>{"a", "m"});
    CHECK(tokenize("x\xE2\x80\x83y") == std::vector<std::string>{"x", "y"});
    // multi-byte letters survive untouched
    CHECK(tokenize("caf\xC3\xA9!") == std::vector<std::string>{"caf\xC3\xA9"});
}

TEST_CASE("tokenize keeps digits", "[tokenize]") {
    CHECK(tokenize("25% quorum") == std::vector<std::string>{"25", "quorum"});
}
