#include "ecphory/memory.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace ecphory {

namespace fs = std::filesystem;
using nlohmann::json;

std::string engram_embedding_text(const Engram& engram) {
    return engram.name + ": " + engram.description;
}

Embedding embed_engram(const Engram& engram, EmbeddingClient& embedder, const std::string& tag) {
    if (engram.name.empty()) throw Error("cannot embed an engram without a name");
    return embedder.embed_one(engram_embedding_text(engram), tag);
}

std::string hash_corpus(const std::vector<Document>& corpus) {
    std::uint64_t h = fnv1a64("corpus");
    for (const auto& doc : corpus) {
        h = fnv1a64(doc.doc_id, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(doc.title, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(doc.body, h);
        h = fnv1a64("\x1e", h);
    }
    return to_hex(h);
}

namespace {

std::string utc_timestamp() {
    if (const char* fixed = std::getenv("ECPHORY_BUILD_TIME")) return fixed;
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string hash_build_config(const BuildOptions& options, std::size_t dim) {
    std::uint64_t h = fnv1a64("config");
    h = fnv1a64(std::to_string(options.chunking.max_tokens), h);
    h = fnv1a64(std::to_string(options.chunking.overlap_tokens), h);
    h = fnv1a64(options.extraction_template.empty() ? kDefaultExtractionTemplate
                                                    : options.extraction_template,
                h);
    h = fnv1a64(options.chat_model_name, h);
    h = fnv1a64(options.embed_model_name, h);
    h = fnv1a64(std::to_string(dim), h);
    return to_hex(h);
}

}  // namespace

MemorySystem build_memory_system(const std::vector<Document>& corpus, ChatClient& chat,
                                 EmbeddingClient& embedder, const BuildOptions& options) {
    if (corpus.empty()) throw Error("cannot build a memory system from an empty corpus");

    MemorySystem ms;

    std::vector<Chunk> all_chunks;
    for (const auto& doc : corpus) {
        auto chunks = chunk_document(doc, options.chunking);
        all_chunks.insert(all_chunks.end(), chunks.begin(), chunks.end());
    }
    if (all_chunks.empty()) throw Error("corpus produced no chunks");

    // Extraction fans out across chunks; results land in per-chunk slots so
    // downstream state never depends on completion order.
    std::vector<ExtractionResult> results(all_chunks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;

    const int workers = options.workers > 0
                            ? options.workers
                            : std::max(1, std::min<int>(chat.max_concurrency(),
                                                        static_cast<int>(all_chunks.size())));
    auto work = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= all_chunks.size()) return;
            try {
                results[i] = extract_entities(all_chunks[i], chat, options.extraction_template);
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    if (failed.load()) throw Error("extraction failed: " + first_error);

    std::uint64_t indexing_tokens = 0;
    for (const auto& result : results) {
        indexing_tokens += result.prompt_tokens + result.completion_tokens;
        if (options.warning_sink)
            for (const auto& warning : result.parse_warnings) options.warning_sink(warning);
    }

    ms.engrams = canonicalize(results);
    for (auto& chunk : all_chunks) ms.chunks.emplace(chunk.chunk_id, std::move(chunk));
    ms.graph = build_graph(ms.engrams);

    // Embed in sorted-id order; this order is also the index row order and
    // the persistence order.
    std::vector<std::string> entity_ids, entity_texts;
    for (const auto& [entity_id, engram] : ms.engrams) {
        entity_ids.push_back(entity_id);
        entity_texts.push_back(engram_embedding_text(engram));
    }
    std::vector<std::string> chunk_ids, chunk_texts;
    for (const auto& [chunk_id, chunk] : ms.chunks) {
        chunk_ids.push_back(chunk_id);
        chunk_texts.push_back(chunk.text);
    }

    if (!entity_ids.empty()) {
        auto vectors = embedder.embed(entity_texts, "index:embed:entities");
        for (std::size_t i = 0; i < entity_ids.size(); ++i)
            ms.entity_index.add(entity_ids[i], vectors[i]);
    }
    auto chunk_vectors = embedder.embed(chunk_texts, "index:embed:chunks");
    for (std::size_t i = 0; i < chunk_ids.size(); ++i)
        ms.chunk_index.add(chunk_ids[i], chunk_vectors[i]);
    if (ms.entity_index.size() == 0)
        ms.entity_index = VectorIndex(ms.chunk_index.dim());

    ms.manifest.corpus_hash = hash_corpus(corpus);
    ms.manifest.config_hash = hash_build_config(options, embedder.embedding_dim());
    ms.manifest.chat_model = options.chat_model_name;
    ms.manifest.embed_model = options.embed_model_name;
    ms.manifest.build_timestamp = utc_timestamp();
    ms.manifest.total_indexing_tokens = indexing_tokens;
    ms.manifest.engram_count = ms.engrams.size();
    ms.manifest.chunk_count = ms.chunks.size();
    ms.manifest.edge_count = ms.graph.edge_count();
    ms.manifest.embedding_dim = ms.chunk_index.dim();
    return ms;
}

namespace {

void write_matrix_file(const fs::path& path, const VectorIndex& index) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    const std::vector<float>& data = index.raw_data();
    for (float value : data) {
        std::uint32_t bits;
        std::memcpy(&bits, &value, 4);
        // Little-endian, byte by byte, independent of host order.
        const unsigned char bytes[4] = {
            static_cast<unsigned char>(bits & 0xff),
            static_cast<unsigned char>((bits >> 8) & 0xff),
            static_cast<unsigned char>((bits >> 16) & 0xff),
            static_cast<unsigned char>((bits >> 24) & 0xff),
        };
        out.write(reinterpret_cast<const char*>(bytes), 4);
    }
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<float> read_matrix_file(const fs::path& path, std::size_t expected_count) {
    const std::string raw = read_text_file(path);
    if (raw.size() != expected_count * 4)
        throw FormatError(path.string() + ": expected " + std::to_string(expected_count * 4) +
                          " bytes, found " + std::to_string(raw.size()));
    std::vector<float> values(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) {
        const auto* b = reinterpret_cast<const unsigned char*>(raw.data() + i * 4);
        const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                                   (static_cast<std::uint32_t>(b[1]) << 8) |
                                   (static_cast<std::uint32_t>(b[2]) << 16) |
                                   (static_cast<std::uint32_t>(b[3]) << 24);
        std::memcpy(&values[i], &bits, 4);
    }
    return values;
}

std::string file_checksum(const fs::path& path) {
    return to_hex(fnv1a64(read_text_file(path)));
}

json manifest_to_json(const BuildManifest& manifest) {
    return json{
        {"format_version", manifest.format_version},
        {"corpus_hash", manifest.corpus_hash},
        {"config_hash", manifest.config_hash},
        {"chat_model", manifest.chat_model},
        {"embed_model", manifest.embed_model},
        {"build_timestamp", manifest.build_timestamp},
        {"total_indexing_tokens", manifest.total_indexing_tokens},
        {"engram_count", manifest.engram_count},
        {"chunk_count", manifest.chunk_count},
        {"edge_count", manifest.edge_count},
        {"embedding_dim", manifest.embedding_dim},
    };
}

const std::vector<std::string>& checksummed_files() {
    static const std::vector<std::string> files = {
        "engrams.jsonl", "chunks.jsonl", "edges.jsonl", "entity_index.f32", "chunk_index.f32",
    };
    return files;
}

}  // namespace

void save_memory_system(const MemorySystem& ms, const fs::path& dir) {
    fs::create_directories(dir);

    {
        std::ostringstream out;
        for (const auto& [entity_id, engram] : ms.engrams) {
            json record{{"entity_id", engram.entity_id},
                        {"name", engram.name},
                        {"type", engram.entity_type},
                        {"description", engram.description},
                        {"importance", engram.importance},
                        {"source_chunk_ids", engram.source_chunk_ids}};
            out << record.dump() << "\n";
        }
        write_text_file(dir / "engrams.jsonl", out.str());
    }
    {
        std::ostringstream out;
        for (const auto& [chunk_id, chunk] : ms.chunks) {
            json record{{"chunk_id", chunk.chunk_id},
                        {"doc_id", chunk.doc_id},
                        {"ordinal", chunk.ordinal},
                        {"text", chunk.text},
                        {"token_count", chunk.token_count}};
            out << record.dump() << "\n";
        }
        write_text_file(dir / "chunks.jsonl", out.str());
    }
    {
        std::ostringstream out;
        for (const auto& [edge, sources] : ms.graph.edge_sources) {
            json record{{"a", edge.first}, {"b", edge.second}, {"sources", sources}};
            out << record.dump() << "\n";
        }
        write_text_file(dir / "edges.jsonl", out.str());
    }
    write_matrix_file(dir / "entity_index.f32", ms.entity_index);
    write_matrix_file(dir / "chunk_index.f32", ms.chunk_index);
    write_text_file(dir / "manifest.json", manifest_to_json(ms.manifest).dump(2) + "\n");

    std::ostringstream sums;
    for (const auto& name : checksummed_files())
        sums << file_checksum(dir / name) << "  " << name << "\n";
    write_text_file(dir / "checksums.txt", sums.str());
}

MemorySystem load_memory_system(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw Error("no manifest found in " + dir.string());

    json manifest_doc;
    try {
        manifest_doc = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
        throw FormatError("bad manifest: " + std::string(e.what()));
    }
    const std::string version = manifest_doc.value("format_version", "");
    if (version != kMemoryFormatVersion)
        throw FormatError("memory format version mismatch: found '" + version + "', expected '" +
                          kMemoryFormatVersion + "'");

    // Checksums first; nothing else is trusted until they match.
    {
        std::istringstream sums(read_text_file(dir / "checksums.txt"));
        std::string line;
        while (std::getline(sums, line)) {
            if (trim(line).empty()) continue;
            const std::size_t split = line.find("  ");
            if (split == std::string::npos) throw FormatError("malformed checksums.txt line: " + line);
            const std::string expected = line.substr(0, split);
            const std::string name = line.substr(split + 2);
            const std::string actual = file_checksum(dir / name);
            if (actual != expected)
                throw FormatError("checksum mismatch for " + name + ": expected " + expected +
                                  ", found " + actual);
        }
    }

    MemorySystem ms;
    ms.manifest.format_version = version;
    ms.manifest.corpus_hash = manifest_doc.value("corpus_hash", "");
    ms.manifest.config_hash = manifest_doc.value("config_hash", "");
    ms.manifest.chat_model = manifest_doc.value("chat_model", "");
    ms.manifest.embed_model = manifest_doc.value("embed_model", "");
    ms.manifest.build_timestamp = manifest_doc.value("build_timestamp", "");
    ms.manifest.total_indexing_tokens = manifest_doc.value("total_indexing_tokens", 0ULL);
    ms.manifest.engram_count = manifest_doc.value("engram_count", std::size_t{0});
    ms.manifest.chunk_count = manifest_doc.value("chunk_count", std::size_t{0});
    ms.manifest.edge_count = manifest_doc.value("edge_count", std::size_t{0});
    ms.manifest.embedding_dim = manifest_doc.value("embedding_dim", std::size_t{0});

    auto parse_jsonl = [&](const fs::path& path, auto&& handle) {
        std::istringstream in(read_text_file(path));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            try {
                handle(json::parse(line));
            } catch (const json::exception& e) {
                throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    };

    parse_jsonl(dir / "engrams.jsonl", [&](const json& record) {
        Engram engram;
        engram.entity_id = record.at("entity_id").get<std::string>();
        engram.name = record.at("name").get<std::string>();
        engram.entity_type = record.at("type").get<std::string>();
        engram.description = record.at("description").get<std::string>();
        engram.importance = record.at("importance").get<double>();
        for (const auto& src : record.at("source_chunk_ids"))
            engram.source_chunk_ids.insert(src.get<std::string>());
        ms.engrams.emplace(engram.entity_id, std::move(engram));
    });
    parse_jsonl(dir / "chunks.jsonl", [&](const json& record) {
        Chunk chunk;
        chunk.chunk_id = record.at("chunk_id").get<std::string>();
        chunk.doc_id = record.at("doc_id").get<std::string>();
        chunk.ordinal = record.at("ordinal").get<std::size_t>();
        chunk.text = record.at("text").get<std::string>();
        chunk.token_count = record.at("token_count").get<std::size_t>();
        ms.chunks.emplace(chunk.chunk_id, std::move(chunk));
    });
    parse_jsonl(dir / "edges.jsonl", [&](const json& record) {
        const EdgeKey key{record.at("a").get<std::string>(), record.at("b").get<std::string>()};
        auto& sources = ms.graph.edge_sources[key];
        for (const auto& src : record.at("sources")) sources.insert(src.get<std::string>());
    });
    for (const auto& [entity_id, engram] : ms.engrams) ms.graph.nodes.insert(entity_id);

    const std::size_t dim = ms.manifest.embedding_dim;
    if (dim == 0 && (!ms.engrams.empty() || !ms.chunks.empty()))
        throw FormatError("manifest missing embedding_dim");

    auto load_index = [&](const fs::path& path, const auto& keyed_map, VectorIndex& index) {
        auto values = read_matrix_file(path, keyed_map.size() * dim);
        index = VectorIndex(dim);
        std::size_t row = 0;
        for (const auto& [id, unused] : keyed_map) {
            index.add_raw(id, std::span<const float>(values.data() + row * dim, dim));
            ++row;
        }
    };
    load_index(dir / "entity_index.f32", ms.engrams, ms.entity_index);
    load_index(dir / "chunk_index.f32", ms.chunks, ms.chunk_index);
    return ms;
}

}  // namespace ecphory
