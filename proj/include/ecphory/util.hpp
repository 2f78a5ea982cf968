#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ecphory {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Network/backend failures that survived the retry policy.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& msg) : Error(msg) {}
};

// Malformed or incompatible on-disk data (bad record, version, checksum).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Caller-side mistakes: bad flags, bad config, missing inputs. The CLI maps
// these to exit status 2.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

// FNV-1a, 64-bit. Stable across platforms; used for mock seeding,
// content hashing and file checksums.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

// Whitespace-delimited word tokens. Chunking and the token-estimate rule
// both run on these, never on model tokenizer output.
std::vector<std::string_view> split_words(std::string_view text);

inline std::size_t count_words(std::string_view text) {
    return split_words(text).size();
}

// Estimated model-token count for text without backend usage data:
// ceil(words * 4 / 3). Results carrying this estimate are flagged.
inline std::uint64_t estimate_tokens(std::string_view text) {
    const std::uint64_t words = count_words(text);
    return (words * 4 + 2) / 3;
}

std::string trim(std::string_view s);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Replaces every occurrence of `placeholder` in `text`.
std::string replace_all(std::string text, std::string_view placeholder, std::string_view value);

// Single-pass template rendering: each {name} placeholder is substituted
// once and substituted content is never rescanned, so values containing
// placeholder syntax cannot alter the prompt structure.
std::string render_template(
    std::string_view tpl,
    const std::vector<std::pair<std::string_view, std::string_view>>& values);

}  // namespace ecphory
