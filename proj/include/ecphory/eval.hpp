#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecphory/generate.hpp"
#include "ecphory/memory.hpp"
#include "ecphory/retrieve.hpp"

namespace ecphory {

struct QAExample {
    std::string example_id;
    std::string question;
    std::vector<std::string> gold_answers;  // nonempty
};

std::vector<QAExample> load_qa_jsonl(const std::filesystem::path& path);
void write_qa_jsonl(const std::vector<QAExample>& examples, const std::filesystem::path& path);

struct BenchmarkData {
    std::vector<Document> corpus;  // one document per distinct supporting passage
    std::vector<QAExample> examples;
};

// Best-effort adapter for the common multi-hop QA distribution shapes: a JSON
// array or JSONL of records carrying a question, an answer (plus optional
// aliases), and supporting passages under "context" ([title, [sentences]])
// or "paragraphs" ([{title, paragraph_text}]). Passages repeated across
// records are emitted once.
BenchmarkData convert_benchmark(const std::filesystem::path& input);

// SQuAD-style answer normalization: lowercase, strip punctuation, drop the
// articles a/an/the, collapse whitespace. Applied to both sides of every
// comparison.
std::string normalize_answer(const std::string& s);

int exact_match(const std::string& prediction, const std::vector<std::string>& golds);

// Word-level F1 on token multisets, maximized over golds. Both sides empty
// after normalization scores 1, exactly one empty scores 0.
double f1_score(const std::string& prediction, const std::vector<std::string>& golds);

// Per-chain ground truth emitted by the synthetic corpus generator.
struct BridgeInfo {
    std::string head_id;
    std::vector<std::string> bridge_ids;     // intermediates, in chain order
    std::string terminal_adjacent_id;        // last bridge before the terminal
    std::string terminal_id;
};
using BridgeMap = std::map<std::string, BridgeInfo>;  // keyed by example_id

struct ExampleResult {
    std::string example_id;
    int em = 0;
    double f1 = 0.0;
    std::uint64_t qt_tokens = 0;  // chat usage + flagged embed estimates
    double wall_seconds = 0.0;
    std::string answer_text;
    std::string error;  // nonempty when the pipeline failed for this example
    bool bridge_hit = false;
};

struct EvalReport {
    double em = 0.0;  // mean over examples
    double f1 = 0.0;
    std::vector<ExampleResult> per_example;  // ordered by example_id
    std::uint64_t total_qt = 0;
    double avg_qt = 0.0;
    std::uint64_t indexing_tokens = 0;
    RetrievalParams params_used;
    std::string context_mode;
    double wall_mean = 0.0, wall_p50 = 0.0, wall_p95 = 0.0;
    std::optional<double> bridge_recall;  // set when a bridge map was supplied

    // Wall-clock stats are measurements, not pipeline outputs; exclude them
    // for byte-stable comparisons across runs.
    std::string to_json(bool include_timing = true, int indent = 2) const;
};

struct EvalOptions {
    ContextMode mode = ContextMode::entity_plus_chunk;
    std::string generation_template;  // empty -> default
    const BridgeMap* bridge_map = nullptr;
    int workers = 0;  // 0 -> chat client's concurrency bound
    UsageLog* usage_log = nullptr;  // required for QT accounting; else QT = 0
};

// Runs the full pipeline per example. Per-example failures score em=f1=0
// with an error note and never abort the run.
EvalReport run_eval(const std::vector<QAExample>& examples, const MemorySystem& ms,
                    const RetrievalParams& params, ChatClient& chat, EmbeddingClient& embedder,
                    const EvalOptions& options = {});

// One grid axis: a RetrievalParams field name and its values. Multiple axes
// expand to their cartesian product.
using AblationGrid = std::vector<std::pair<std::string, std::vector<double>>>;

AblationGrid parse_grid_spec(const std::string& spec);  // "depth=0,1,2;k_final=20,40"

RetrievalParams apply_param(RetrievalParams params, const std::string& name, double value);

struct AblationRow {
    std::vector<std::pair<std::string, double>> assignment;
    EvalReport report;
};

std::vector<AblationRow> run_ablation(const AblationGrid& grid,
                                      const std::vector<QAExample>& examples,
                                      const MemorySystem& ms, const RetrievalParams& base,
                                      ChatClient& chat, EmbeddingClient& embedder,
                                      const EvalOptions& options = {});

// Columns: one per grid axis, then em, f1, avg_time_s, qt.
std::string ablation_to_csv(const std::vector<AblationRow>& rows);

struct ParsedAblationRow {
    std::vector<std::pair<std::string, double>> assignment;
    double em = 0.0, f1 = 0.0, avg_time_s = 0.0, qt = 0.0;
};

std::vector<ParsedAblationRow> parse_ablation_csv(const std::string& csv);
std::string ablation_rows_to_csv(const std::vector<ParsedAblationRow>& rows);

}  // namespace ecphory
