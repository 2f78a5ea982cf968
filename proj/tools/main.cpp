// ecphory command-line tool: index a corpus into a memory system, query it,
// evaluate QA examples, run parameter ablations, or emit a synthetic
// multi-hop benchmark.

#include <chrono>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecphory/config.hpp"
#include "ecphory/eval.hpp"
#include "ecphory/generate.hpp"
#include "ecphory/hnsw.hpp"
#include "ecphory/memory.hpp"
#include "ecphory/retrieve.hpp"
#include "ecphory/synthetic.hpp"

namespace {

using namespace ecphory;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
    std::string config_path;
    std::string corpus_path;
    std::string corpus_format;
    std::string memory_dir;
    std::string out_dir;
    std::string run_id;
    std::string mode;
    std::optional<int> k_initial, retrieval_depth, k_final, seed_count, direct_chunk_k,
        final_chunk_count, expansion_factor;
    std::optional<bool> hybrid_graph_expansion;
};

void add_retrieval_flags(CLI::App* cmd, CommonArgs& args) {
    auto opt_int = [&](const char* name, std::optional<int>& slot, const char* help) {
        cmd->add_option_function<int>(
            name, [&slot](const int& v) { slot = v; }, help);
    };
    opt_int("--k_initial", args.k_initial, "Initial entity activation breadth");
    opt_int("--retrieval_depth", args.retrieval_depth, "Associative expansion rounds");
    cmd->add_option_function<int>(
        "--depth", [&args](const int& v) { args.retrieval_depth = v; },
        "Alias for --retrieval_depth");
    opt_int("--k_final", args.k_final, "Entities kept after the final re-rank");
    opt_int("--seed_count", args.seed_count, "Seeds per expansion round");
    opt_int("--direct_chunk_k", args.direct_chunk_k, "Direct chunk search width");
    opt_int("--final_chunk_count", args.final_chunk_count, "Grounding chunks for generation");
    opt_int("--expansion_factor", args.expansion_factor, "Per-round width = k_initial * factor");
    cmd->add_option_function<bool>(
        "--hybrid_graph_expansion",
        [&args](const bool& v) { args.hybrid_graph_expansion = v; },
        "Also union graph neighbors of seeds during expansion");
}

Config resolve_config(const CommonArgs& args) {
    Config config;
    if (!args.config_path.empty()) config = load_config(args.config_path);
    if (!args.corpus_path.empty()) config.corpus_path = args.corpus_path;
    if (!args.corpus_format.empty()) config.corpus_format = args.corpus_format;
    if (!args.memory_dir.empty()) config.memory_dir = args.memory_dir;
    if (!args.out_dir.empty()) config.out_dir = args.out_dir;
    if (!args.mode.empty()) config.generation_mode = parse_context_mode(args.mode);

    RetrievalParams& p = config.retrieval;
    if (args.k_initial) p.k_initial = *args.k_initial;
    if (args.retrieval_depth) p.retrieval_depth = *args.retrieval_depth;
    if (args.k_final) p.k_final = *args.k_final;
    if (args.seed_count) p.seed_count = *args.seed_count;
    if (args.direct_chunk_k) p.direct_chunk_k = *args.direct_chunk_k;
    if (args.final_chunk_count) p.final_chunk_count = *args.final_chunk_count;
    if (args.expansion_factor) p.expansion_factor = *args.expansion_factor;
    if (args.hybrid_graph_expansion) p.hybrid_graph_expansion = *args.hybrid_graph_expansion;
    return config;
}

std::filesystem::path run_output_dir(const Config& config, const std::string& run_id) {
    std::string name = run_id;
    if (name.empty()) {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::tm tm_utc{};
        gmtime_r(&t, &tm_utc);
        std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm_utc);
        name = buf;
    }
    const std::filesystem::path dir = std::filesystem::path(config.out_dir) / name;
    std::filesystem::create_directories(dir);
    return dir;
}

MemorySystem load_memory(const Config& config) {
    if (config.memory_dir.empty()) throw UsageError("no memory_dir configured");
    return load_memory_system(config.memory_dir);
}

// Must run after the memory system has reached its final address: the
// accelerator keeps a reference into the index it serves.
void maybe_attach_ann(MemorySystem& ms, const Config& config) {
    if (!config.use_ann) return;
    HnswParams params;
    params.m = config.ann_m;
    params.ef_construction = config.ann_ef_construction;
    params.ef_search = config.ann_ef_search;
    ms.entity_index.attach_ann(std::make_shared<HnswIndex>(ms.entity_index, params));
    ms.chunk_index.attach_ann(std::make_shared<HnswIndex>(ms.chunk_index, params));
}

int cmd_index(const CommonArgs& args) {
    const Config config = resolve_config(args);
    if (config.corpus_path.empty()) throw UsageError("no corpus path configured");
    if (config.memory_dir.empty()) throw UsageError("no memory_dir configured");

    const auto corpus =
        load_corpus(config.corpus_path, parse_corpus_format(config.corpus_format));
    auto log = std::make_shared<UsageLog>();
    auto chat = make_chat_client(config, log);
    auto embedder = make_embedding_client(config, log);

    BuildOptions options;
    options.chunking = config.chunking;
    options.extraction_template = config.load_extraction_template();
    options.chat_model_name = config.chat.backend == "http" ? config.chat.http.model : "mock";
    options.embed_model_name = config.embed.backend == "http" ? config.embed.http.model : "mock";
    options.warning_sink = [](const std::string& warning) {
        std::cerr << "warning: " << warning << "\n";
    };

    const MemorySystem ms = build_memory_system(corpus, *chat, *embedder, options);
    save_memory_system(ms, config.memory_dir);

    if (ms.engrams.empty())
        std::cerr << "warning: extraction produced no engrams; queries against this memory "
                     "will fail (is the chat backend configured for extraction?)\n";
    std::cout << "indexed " << corpus.size() << " documents -> " << ms.chunks.size()
              << " chunks, " << ms.engrams.size() << " engrams, " << ms.graph.edge_count()
              << " edges\n"
              << "indexing tokens: " << ms.manifest.total_indexing_tokens << "\n"
              << "memory dir: " << config.memory_dir << "\n";
    return kExitOk;
}

int cmd_query(const CommonArgs& args, const std::string& question, const std::string& trace_path) {
    const Config config = resolve_config(args);
    MemorySystem ms = load_memory(config);
    maybe_attach_ann(ms, config);
    auto log = std::make_shared<UsageLog>();
    auto chat = make_chat_client(config, log);
    auto embedder = make_embedding_client(config, log);

    const RetrievalTrace trace = retrieve(question, ms, config.retrieval, *embedder, "query:cli");
    const GenerationContext context =
        make_generation_context(question, trace, ms, config.generation_mode);
    const Answer result = answer(context, *chat, config.load_generation_template(), "query:cli");

    std::cout << result.text << "\n";
    if (!trace_path.empty()) {
        write_text_file(trace_path, trace.to_json());
        std::cerr << "trace written to " << trace_path << "\n";
    }
    std::cerr << "query tokens: " << log->total_for_tag("query:cli") << "\n";
    return kExitOk;
}

int cmd_eval(const CommonArgs& args, const std::string& examples_path,
             const std::string& bridge_map_path) {
    const Config config = resolve_config(args);
    MemorySystem ms = load_memory(config);
    maybe_attach_ann(ms, config);
    auto log = std::make_shared<UsageLog>();
    auto chat = make_chat_client(config, log);
    auto embedder = make_embedding_client(config, log);

    const auto examples = load_qa_jsonl(examples_path);
    BridgeMap bridges;
    EvalOptions options;
    options.mode = config.generation_mode;
    options.generation_template = config.load_generation_template();
    options.usage_log = log.get();
    if (!bridge_map_path.empty()) {
        bridges = load_bridge_map(bridge_map_path);
        options.bridge_map = &bridges;
    }

    const EvalReport report =
        run_eval(examples, ms, config.retrieval, *chat, *embedder, options);

    const auto out_dir = run_output_dir(config, args.run_id);
    write_text_file(out_dir / "report.json", report.to_json());
    std::cout << "examples: " << report.per_example.size() << "  EM: " << report.em
              << "  F1: " << report.f1 << "  avg QT: " << report.avg_qt << "\n";
    if (report.bridge_recall)
        std::cout << "bridge recall: " << *report.bridge_recall << "\n";
    std::cout << "report: " << (out_dir / "report.json").string() << "\n";
    return kExitOk;
}

int cmd_ablate(const CommonArgs& args, const std::string& examples_path,
               const std::string& grid_spec) {
    const Config config = resolve_config(args);
    const AblationGrid grid = parse_grid_spec(grid_spec);
    MemorySystem ms = load_memory(config);
    maybe_attach_ann(ms, config);
    auto log = std::make_shared<UsageLog>();
    auto chat = make_chat_client(config, log);
    auto embedder = make_embedding_client(config, log);

    const auto examples = load_qa_jsonl(examples_path);
    EvalOptions options;
    options.mode = config.generation_mode;
    options.generation_template = config.load_generation_template();
    options.usage_log = log.get();

    const auto rows =
        run_ablation(grid, examples, ms, config.retrieval, *chat, *embedder, options);
    const std::string csv = ablation_to_csv(rows);

    const auto out_dir = run_output_dir(config, args.run_id);
    write_text_file(out_dir / "ablation.csv", csv);
    std::cout << csv;
    std::cout << "ablation: " << (out_dir / "ablation.csv").string() << "\n";
    return kExitOk;
}

int cmd_synth(const std::string& out_dir, int chains, int hops, std::uint64_t seed,
              bool adversarial, int distractors) {
    SyntheticOptions options;
    options.adversarial = adversarial;
    if (distractors >= 0) options.distractors_per_chain = distractors;
    const SyntheticSuite suite = make_synthetic_corpus(chains, hops, seed, options);
    write_synthetic_suite(suite, out_dir);
    std::cout << "synthetic suite: " << suite.corpus.size() << " documents, "
              << suite.examples.size() << " questions, dim " << suite.dim << "\n"
              << "written to " << out_dir << " (config.json is ready for 'index')\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ecphory: entity-centric retrieval-augmented generation toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string question, trace_path, examples_path, grid_spec, bridge_map_path;
    std::string synth_out = "synth";
    int synth_chains = 20, synth_hops = 3, synth_distractors = -1;
    std::uint64_t synth_seed = 7;
    bool synth_adversarial = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "JSON config file (flags win)");
        cmd->add_option("--memory-dir", args.memory_dir, "Memory system directory");
        cmd->add_option("--out", args.out_dir, "Output root; runs go in timestamped subdirs");
        cmd->add_option("--run-id", args.run_id, "Fixed name for the run subdirectory");
        cmd->add_option("--mode", args.mode,
                        "Context mode: entity_only | entity_plus_chunk | chunk_only");
        add_retrieval_flags(cmd, args);
    };

    CLI::App* index = app.add_subcommand("index", "Build and save a memory system");
    index->add_option("--corpus", args.corpus_path, "Corpus file or directory");
    index->add_option("--format", args.corpus_format, "Corpus format: jsonl | plain-dir");
    add_common(index);

    CLI::App* query = app.add_subcommand("query", "Answer one question");
    query->add_option("question", question, "The question to answer")->required();
    query->add_option("--trace", trace_path, "Write the retrieval trace JSON here");
    add_common(query);

    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate QA examples (EM/F1, tokens)");
    eval_cmd->add_option("--examples", examples_path, "QA examples JSONL")->required();
    eval_cmd->add_option("--bridge-map", bridge_map_path,
                         "Bridge map JSON for bridge-recall reporting");
    add_common(eval_cmd);

    CLI::App* ablate = app.add_subcommand("ablate", "Sweep retrieval parameters");
    ablate->add_option("--examples", examples_path, "QA examples JSONL")->required();
    ablate->add_option("--grid", grid_spec, "e.g. \"depth=0,1,2,3\" or \"k_final=20,40,80\"")
        ->required();
    add_common(ablate);

    CLI::App* synth = app.add_subcommand("synth", "Emit a synthetic multi-hop benchmark");
    synth->add_option("--out", synth_out, "Output directory");
    synth->add_option("--chains", synth_chains, "Number of entity chains");
    synth->add_option("--hops", synth_hops, "Hops per chain (>= 2)");
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_flag("--adversarial", synth_adversarial,
                    "Crowd the initial ranking so only expansion finds bridges");
    synth->add_option("--distractors", synth_distractors, "Distractor entities per chain");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (index->parsed()) return cmd_index(args);
        if (query->parsed()) return cmd_query(args, question, trace_path);
        if (eval_cmd->parsed()) return cmd_eval(args, examples_path, bridge_map_path);
        if (ablate->parsed()) return cmd_ablate(args, examples_path, grid_spec);
        if (synth->parsed())
            return cmd_synth(synth_out, synth_chains, synth_hops, synth_seed, synth_adversarial,
                             synth_distractors);
    } catch (const ecphory::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
