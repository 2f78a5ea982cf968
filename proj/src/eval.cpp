#include "ecphory/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace ecphory {

using nlohmann::json;

std::vector<QAExample> load_qa_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open examples file: " + path.string());

    std::vector<QAExample> examples;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        QAExample example;
        example.example_id = record.at("example_id").get<std::string>();
        example.question = record.at("question").get<std::string>();
        for (const auto& answer : record.at("answers"))
            example.gold_answers.push_back(answer.get<std::string>());
        if (example.gold_answers.empty())
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": example '" + example.example_id + "' has no answers");
        // Unique ids keep per-example token attribution unambiguous.
        if (!seen_ids.insert(example.example_id).second)
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": duplicate example_id '" + example.example_id + "'");
        examples.push_back(std::move(example));
    }
    return examples;
}

void write_qa_jsonl(const std::vector<QAExample>& examples, const std::filesystem::path& path) {
    std::ostringstream out;
    for (const auto& example : examples)
        out << json{{"example_id", example.example_id},
                    {"question", example.question},
                    {"answers", example.gold_answers}}
                   .dump()
            << "\n";
    write_text_file(path, out.str());
}

namespace {

std::string passage_doc_id(const std::string& title, const std::string& body) {
    std::string slug;
    for (unsigned char c : title) {
        if (std::isalnum(c)) slug.push_back(static_cast<char>(std::tolower(c)));
        else if (!slug.empty() && slug.back() != '-') slug.push_back('-');
        if (slug.size() >= 48) break;
    }
    if (slug.empty()) slug = "passage";
    return slug + "-" + to_hex(fnv1a64(body)).substr(0, 8);
}

void collect_benchmark_record(const json& record, std::size_t index, BenchmarkData& data,
                              std::map<std::string, bool>& seen_docs) {
    QAExample example;
    if (record.contains("_id")) example.example_id = record["_id"].get<std::string>();
    else if (record.contains("id")) example.example_id = record["id"].get<std::string>();
    else if (record.contains("example_id")) example.example_id = record["example_id"].get<std::string>();
    else example.example_id = "q" + std::to_string(index);

    if (!record.contains("question") || !record["question"].is_string()) return;
    example.question = record["question"].get<std::string>();

    if (record.contains("answer") && record["answer"].is_string())
        example.gold_answers.push_back(record["answer"].get<std::string>());
    if (record.contains("answers") && record["answers"].is_array())
        for (const auto& a : record["answers"])
            if (a.is_string()) example.gold_answers.push_back(a.get<std::string>());
    if (record.contains("answer_aliases") && record["answer_aliases"].is_array())
        for (const auto& a : record["answer_aliases"])
            if (a.is_string()) example.gold_answers.push_back(a.get<std::string>());
    if (example.gold_answers.empty()) return;

    auto add_passage = [&](const std::string& title, const std::string& body) {
        if (trim(body).empty()) return;
        const std::string doc_id = passage_doc_id(title, body);
        if (seen_docs.emplace(doc_id, true).second)
            data.corpus.push_back({doc_id, title, body});
    };
    // [title, [sentences...]] pairs.
    if (record.contains("context") && record["context"].is_array()) {
        for (const auto& entry : record["context"]) {
            if (!entry.is_array() || entry.size() < 2 || !entry[0].is_string() ||
                !entry[1].is_array())
                continue;
            std::string body;
            for (const auto& sentence : entry[1])
                if (sentence.is_string()) body += sentence.get<std::string>();
            add_passage(entry[0].get<std::string>(), body);
        }
    }
    // [{"title", "paragraph_text"}] objects.
    if (record.contains("paragraphs") && record["paragraphs"].is_array()) {
        for (const auto& entry : record["paragraphs"]) {
            if (!entry.is_object() || !entry.contains("paragraph_text")) continue;
            add_passage(entry.value("title", ""), entry["paragraph_text"].get<std::string>());
        }
    }
    data.examples.push_back(std::move(example));
}

}  // namespace

BenchmarkData convert_benchmark(const std::filesystem::path& input) {
    const std::string raw = read_text_file(input);
    BenchmarkData data;
    std::map<std::string, bool> seen_docs;

    const std::string trimmed = trim(raw);
    if (!trimmed.empty() && trimmed.front() == '[') {
        json doc;
        try {
            doc = json::parse(trimmed);
        } catch (const json::exception& e) {
            throw FormatError(input.string() + ": " + e.what());
        }
        std::size_t index = 0;
        for (const auto& record : doc)
            collect_benchmark_record(record, index++, data, seen_docs);
    } else {
        std::istringstream in(raw);
        std::string line;
        std::size_t index = 0;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            json record;
            try {
                record = json::parse(line);
            } catch (const json::exception& e) {
                throw FormatError(input.string() + ": " + e.what());
            }
            collect_benchmark_record(record, index++, data, seen_docs);
        }
    }
    if (data.examples.empty())
        throw FormatError(input.string() + ": no usable question records found");
    return data;
}

std::string normalize_answer(const std::string& s) {
    // lowercase -> strip punctuation -> drop articles -> collapse whitespace
    std::string depunct;
    depunct.reserve(s.size());
    for (unsigned char c : s) {
        if (std::ispunct(c)) continue;
        depunct.push_back(static_cast<char>(std::tolower(c)));
    }

    std::string out;
    for (const auto word : split_words(depunct)) {
        if (word == "a" || word == "an" || word == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out.append(word);
    }
    return out;
}

int exact_match(const std::string& prediction, const std::vector<std::string>& golds) {
    if (golds.empty()) throw Error("exact_match requires at least one gold answer");
    const std::string normalized = normalize_answer(prediction);
    for (const auto& gold : golds)
        if (normalized == normalize_answer(gold)) return 1;
    return 0;
}

namespace {

double f1_single(const std::string& prediction, const std::string& gold) {
    const std::string norm_pred = normalize_answer(prediction);
    const std::string norm_gold = normalize_answer(gold);
    const auto pred_tokens = split_words(norm_pred);
    const auto gold_tokens = split_words(norm_gold);
    if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
    if (pred_tokens.empty() || gold_tokens.empty()) return 0.0;

    std::map<std::string_view, std::size_t> gold_counts;
    for (const auto token : gold_tokens) ++gold_counts[token];
    std::size_t overlap = 0;
    for (const auto token : pred_tokens) {
        auto it = gold_counts.find(token);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / pred_tokens.size();
    const double recall = static_cast<double>(overlap) / gold_tokens.size();
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double f1_score(const std::string& prediction, const std::vector<std::string>& golds) {
    if (golds.empty()) throw Error("f1_score requires at least one gold answer");
    double best = 0.0;
    for (const auto& gold : golds) best = std::max(best, f1_single(prediction, gold));
    return best;
}

namespace {

double percentile(std::vector<double> sorted_values, double q) {
    if (sorted_values.empty()) return 0.0;
    const std::size_t n = sorted_values.size();
    const std::size_t rank =
        std::min(n - 1, static_cast<std::size_t>(std::ceil(q * n)) - (q > 0.0 ? 1 : 0));
    return sorted_values[rank];
}

}  // namespace

std::string EvalReport::to_json(bool include_timing, int indent) const {
    json per = json::array();
    for (const auto& r : per_example) {
        json item{{"example_id", r.example_id}, {"em", r.em},      {"f1", r.f1},
                  {"qt_tokens", r.qt_tokens},   {"answer", r.answer_text}};
        if (!r.error.empty()) item["error"] = r.error;
        if (bridge_recall.has_value()) item["bridge_hit"] = r.bridge_hit;
        if (include_timing) item["wall_seconds"] = r.wall_seconds;
        per.push_back(item);
    }
    json params{{"k_initial", params_used.k_initial},
                {"retrieval_depth", params_used.retrieval_depth},
                {"k_final", params_used.k_final},
                {"seed_count", params_used.seed_count},
                {"direct_chunk_k", params_used.direct_chunk_k},
                {"final_chunk_count", params_used.final_chunk_count},
                {"expansion_factor", params_used.expansion_factor},
                {"hybrid_graph_expansion", params_used.hybrid_graph_expansion}};
    json doc{{"em", em},
             {"f1", f1},
             {"total_qt", total_qt},
             {"avg_qt", avg_qt},
             {"indexing_tokens", indexing_tokens},
             {"qt_embed_tokens_estimated", true},
             {"context_mode", context_mode},
             {"params", params},
             {"per_example", per}};
    if (bridge_recall.has_value()) doc["bridge_recall"] = *bridge_recall;
    if (include_timing)
        doc["timing"] = json{{"wall_mean_s", wall_mean}, {"wall_p50_s", wall_p50},
                             {"wall_p95_s", wall_p95}};
    return doc.dump(indent) + "\n";
}

EvalReport run_eval(const std::vector<QAExample>& examples, const MemorySystem& ms,
                    const RetrievalParams& params, ChatClient& chat, EmbeddingClient& embedder,
                    const EvalOptions& options) {
    params.validate();

    EvalReport report;
    report.params_used = params;
    report.context_mode = context_mode_name(options.mode);
    report.indexing_tokens = ms.manifest.total_indexing_tokens;
    report.per_example.resize(examples.size());

    const std::size_t log_start = options.usage_log ? options.usage_log->size() : 0;
    std::atomic<std::size_t> next{0};
    const int workers =
        options.workers > 0
            ? options.workers
            : std::max(1, std::min<int>(chat.max_concurrency(), static_cast<int>(examples.size())));

    auto evaluate_one = [&](const QAExample& example, ExampleResult& slot) {
        slot.example_id = example.example_id;
        const std::string tag = "query:" + example.example_id;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const RetrievalTrace trace = retrieve(example.question, ms, params, embedder, tag);
            const GenerationContext context =
                make_generation_context(example.question, trace, ms, options.mode);
            const Answer result = answer(context, chat, options.generation_template, tag);
            slot.answer_text = result.text;
            slot.em = exact_match(result.text, example.gold_answers);
            slot.f1 = f1_score(result.text, example.gold_answers);
            if (options.bridge_map) {
                auto it = options.bridge_map->find(example.example_id);
                if (it != options.bridge_map->end()) {
                    for (const auto& entity : trace.final_entities)
                        if (entity.entity_id == it->second.terminal_adjacent_id) {
                            slot.bridge_hit = true;
                            break;
                        }
                }
            }
        } catch (const std::exception& e) {
            slot.em = 0;
            slot.f1 = 0.0;
            slot.error = e.what();
        }
        const auto t1 = std::chrono::steady_clock::now();
        slot.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
        if (options.usage_log)
            slot.qt_tokens = options.usage_log->total_for_tag_since(tag, log_start);
    };

    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= examples.size()) return;
            evaluate_one(examples[i], report.per_example[i]);
        }
    };
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();

    std::sort(report.per_example.begin(), report.per_example.end(),
              [](const ExampleResult& a, const ExampleResult& b) {
                  return a.example_id < b.example_id;
              });

    double em_sum = 0.0, f1_sum = 0.0;
    std::uint64_t qt_sum = 0;
    std::size_t bridge_hits = 0;
    std::vector<double> walls;
    for (const auto& r : report.per_example) {
        em_sum += r.em;
        f1_sum += r.f1;
        qt_sum += r.qt_tokens;
        walls.push_back(r.wall_seconds);
        if (r.bridge_hit) ++bridge_hits;
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, report.per_example.size()));
    report.em = em_sum / n;
    report.f1 = f1_sum / n;
    report.total_qt = qt_sum;
    report.avg_qt = static_cast<double>(qt_sum) / n;
    if (options.bridge_map)
        report.bridge_recall = static_cast<double>(bridge_hits) / n;

    std::sort(walls.begin(), walls.end());
    double wall_sum = 0.0;
    for (double w : walls) wall_sum += w;
    report.wall_mean = walls.empty() ? 0.0 : wall_sum / walls.size();
    report.wall_p50 = percentile(walls, 0.50);
    report.wall_p95 = percentile(walls, 0.95);
    return report;
}

AblationGrid parse_grid_spec(const std::string& spec) {
    AblationGrid grid;
    std::istringstream axes(spec);
    std::string axis;
    while (std::getline(axes, axis, ';')) {
        if (trim(axis).empty()) continue;
        const std::size_t eq = axis.find('=');
        if (eq == std::string::npos)
            throw UsageError("bad grid axis '" + axis + "': expected name=v1,v2,...");
        const std::string name = trim(axis.substr(0, eq));
        std::vector<double> values;
        std::istringstream list(axis.substr(eq + 1));
        std::string item;
        while (std::getline(list, item, ',')) {
            const std::string value = trim(item);
            if (value.empty()) continue;
            try {
                std::size_t used = 0;
                values.push_back(std::stod(value, &used));
                if (used != value.size()) throw std::invalid_argument(value);
            } catch (const std::exception&) {
                throw UsageError("bad grid value '" + value + "' for axis '" + name + "'");
            }
        }
        if (name.empty() || values.empty())
            throw UsageError("bad grid axis '" + axis + "': expected name=v1,v2,...");
        grid.emplace_back(name, std::move(values));
    }
    if (grid.empty()) throw UsageError("empty ablation grid spec");
    return grid;
}

RetrievalParams apply_param(RetrievalParams params, const std::string& name, double value) {
    const int v = static_cast<int>(value);
    if (name == "k_initial") params.k_initial = v;
    else if (name == "retrieval_depth" || name == "depth") params.retrieval_depth = v;
    else if (name == "k_final" || name == "k") params.k_final = v;
    else if (name == "seed_count") params.seed_count = v;
    else if (name == "direct_chunk_k") params.direct_chunk_k = v;
    else if (name == "final_chunk_count") params.final_chunk_count = v;
    else if (name == "expansion_factor") params.expansion_factor = v;
    else if (name == "hybrid_graph_expansion") params.hybrid_graph_expansion = v != 0;
    else throw UsageError("unknown retrieval parameter '" + name + "'");
    return params;
}

std::vector<AblationRow> run_ablation(const AblationGrid& grid,
                                      const std::vector<QAExample>& examples,
                                      const MemorySystem& ms, const RetrievalParams& base,
                                      ChatClient& chat, EmbeddingClient& embedder,
                                      const EvalOptions& options) {
    if (grid.empty()) throw Error("ablation grid must be nonempty");

    std::vector<std::vector<std::pair<std::string, double>>> assignments{{}};
    for (const auto& [name, values] : grid) {
        std::vector<std::vector<std::pair<std::string, double>>> expanded;
        for (const auto& partial : assignments) {
            for (double value : values) {
                auto next = partial;
                next.emplace_back(name, value);
                expanded.push_back(std::move(next));
            }
        }
        assignments = std::move(expanded);
    }

    std::vector<AblationRow> rows;
    for (const auto& assignment : assignments) {
        RetrievalParams params = base;
        for (const auto& [name, value] : assignment)
            params = apply_param(params, name, value);
        AblationRow row;
        row.assignment = assignment;
        row.report = run_eval(examples, ms, params, chat, embedder, options);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string format_metric(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

std::string csv_from(const std::vector<ParsedAblationRow>& rows) {
    if (rows.empty()) return "";
    std::ostringstream out;
    for (const auto& [name, value] : rows.front().assignment) out << name << ",";
    out << "em,f1,avg_time_s,qt\n";
    for (const auto& row : rows) {
        for (const auto& [name, value] : row.assignment) out << format_metric(value) << ",";
        out << format_metric(row.em) << "," << format_metric(row.f1) << ","
            << format_metric(row.avg_time_s) << "," << format_metric(row.qt) << "\n";
    }
    return out.str();
}

}  // namespace

std::string ablation_to_csv(const std::vector<AblationRow>& rows) {
    std::vector<ParsedAblationRow> flat;
    for (const auto& row : rows) {
        ParsedAblationRow parsed;
        parsed.assignment = row.assignment;
        parsed.em = row.report.em;
        parsed.f1 = row.report.f1;
        parsed.avg_time_s = row.report.wall_mean;
        parsed.qt = row.report.avg_qt;
        flat.push_back(std::move(parsed));
    }
    return csv_from(flat);
}

std::string ablation_rows_to_csv(const std::vector<ParsedAblationRow>& rows) {
    return csv_from(rows);
}

std::vector<ParsedAblationRow> parse_ablation_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string header;
    if (!std::getline(in, header)) throw FormatError("empty ablation CSV");

    std::vector<std::string> columns;
    std::istringstream header_stream(header);
    std::string column;
    while (std::getline(header_stream, column, ',')) columns.push_back(trim(column));
    if (columns.size() < 4 || columns[columns.size() - 4] != "em" ||
        columns[columns.size() - 3] != "f1" || columns[columns.size() - 2] != "avg_time_s" ||
        columns.back() != "qt")
        throw FormatError("ablation CSV header must end with em,f1,avg_time_s,qt");
    const std::size_t param_count = columns.size() - 4;

    std::vector<ParsedAblationRow> rows;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<double> values;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                values.push_back(std::stod(trim(cell)));
            } catch (const std::exception&) {
                throw FormatError("ablation CSV line " + std::to_string(line_no) +
                                  ": bad number '" + cell + "'");
            }
        }
        if (values.size() != columns.size())
            throw FormatError("ablation CSV line " + std::to_string(line_no) +
                              ": expected " + std::to_string(columns.size()) + " cells");
        ParsedAblationRow row;
        for (std::size_t i = 0; i < param_count; ++i)
            row.assignment.emplace_back(columns[i], values[i]);
        row.em = values[param_count];
        row.f1 = values[param_count + 1];
        row.avg_time_s = values[param_count + 2];
        row.qt = values[param_count + 3];
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace ecphory
