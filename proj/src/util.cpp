#include "ecphory/util.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace ecphory {

std::string to_hex(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) words.push_back(text.substr(start, i - start));
    }
    return words;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    std::size_t e = s.size();
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file for reading: " + path.string());
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open file for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + path.string());
}

std::string replace_all(std::string text, std::string_view placeholder, std::string_view value) {
    if (placeholder.empty()) return text;
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return text;
}

std::string render_template(
    std::string_view tpl,
    const std::vector<std::pair<std::string_view, std::string_view>>& values) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            bool matched = false;
            for (const auto& [name, value] : values) {
                const std::size_t end = i + 1 + name.size();
                if (end < tpl.size() && tpl.substr(i + 1, name.size()) == name &&
                    tpl[end] == '}') {
                    out.append(value);
                    i = end + 1;
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        out.push_back(tpl[i++]);
    }
    return out;
}

}  // namespace ecphory
