#include "ecphory/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace ecphory {

namespace fs = std::filesystem;
using nlohmann::json;

CorpusFormat parse_corpus_format(const std::string& name) {
    if (name == "jsonl") return CorpusFormat::jsonl;
    if (name == "plain-dir") return CorpusFormat::plain_dir;
    throw UsageError("unknown corpus format: '" + name + "' (expected jsonl or plain-dir)");
}

std::string make_chunk_id(const std::string& doc_id, std::size_t ordinal) {
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "#%04zu", ordinal);
    return doc_id + suffix;
}

namespace {

std::vector<Document> load_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file: " + path.string());

    std::vector<Document> docs;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;

        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": malformed JSON record: " + e.what());
        }
        if (!record.is_object() || !record.contains("doc_id") || !record["doc_id"].is_string())
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": record missing string field 'doc_id'");

        Document doc;
        doc.doc_id = record["doc_id"].get<std::string>();
        if (!record.contains("body") || !record["body"].is_string())
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": record '" +
                              doc.doc_id + "' missing string field 'body'");
        doc.body = record["body"].get<std::string>();
        if (record.contains("title") && record["title"].is_string())
            doc.title = record["title"].get<std::string>();

        if (doc.doc_id.empty())
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": empty doc_id");
        if (trim(doc.body).empty())
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": record '" +
                              doc.doc_id + "' has empty body");
        if (!seen_ids.insert(doc.doc_id).second)
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": duplicate doc_id '" + doc.doc_id + "'");
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<Document> load_plain_dir(const fs::path& path) {
    if (!fs::is_directory(path))
        throw Error("corpus path is not a directory: " + path.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<Document> docs;
    for (const auto& file : files) {
        Document doc;
        doc.doc_id = file.filename().string();
        doc.body = read_text_file(file);
        if (trim(doc.body).empty())
            throw FormatError("corpus file '" + file.string() + "' has empty body");
        docs.push_back(std::move(doc));
    }
    return docs;
}

}  // namespace

std::vector<Document> load_corpus(const fs::path& path, CorpusFormat format) {
    if (!fs::exists(path)) throw UsageError("corpus path does not exist: " + path.string());
    switch (format) {
        case CorpusFormat::jsonl:
            return load_jsonl(path);
        case CorpusFormat::plain_dir:
            return load_plain_dir(path);
    }
    throw Error("unreachable corpus format");
}

void write_corpus_jsonl(const std::vector<Document>& docs, const fs::path& path) {
    std::ostringstream out;
    for (const auto& doc : docs)
        out << json{{"doc_id", doc.doc_id}, {"title", doc.title}, {"body", doc.body}}.dump()
            << "\n";
    write_text_file(path, out.str());
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkingParams& params) {
    if (params.max_tokens == 0) throw Error("max_tokens must be positive");
    if (params.overlap_tokens >= params.max_tokens)
        throw Error("overlap_tokens must be smaller than max_tokens");

    // Word positions as byte ranges so chunk text stays a verbatim substring
    // of the body.
    struct Span {
        std::size_t begin, end;
    };
    std::vector<Span> tokens;
    const std::string& body = doc.body;
    std::size_t i = 0;
    while (i < body.size()) {
        while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
        std::size_t start = i;
        while (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i]))) ++i;
        if (i > start) tokens.push_back({start, i});
    }

    std::vector<Chunk> chunks;
    if (tokens.empty()) return chunks;

    const std::size_t stride = params.max_tokens - params.overlap_tokens;
    for (std::size_t start = 0; start < tokens.size(); start += stride) {
        const std::size_t end = std::min(start + params.max_tokens, tokens.size());
        Chunk chunk;
        chunk.doc_id = doc.doc_id;
        chunk.ordinal = chunks.size();
        chunk.chunk_id = make_chunk_id(doc.doc_id, chunk.ordinal);
        chunk.token_count = end - start;
        chunk.text = body.substr(tokens[start].begin, tokens[end - 1].end - tokens[start].begin);
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

}  // namespace ecphory
