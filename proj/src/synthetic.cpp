#include "ecphory/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <json.hpp>

namespace ecphory {

using nlohmann::json;

namespace {

std::string two_digits(int v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d", v);
    return buf;
}

std::string entity_name(int chain, int step) {
    return "ent_c" + two_digits(chain) + "_s" + two_digits(step);
}

std::string distractor_name(int chain, int index) {
    return "dis_c" + two_digits(chain) + "_d" + two_digits(index);
}

// Unit vector in the plane spanned by two basis axes.
std::vector<float> planted(std::size_t dim, std::size_t axis_a, std::size_t axis_b,
                           double angle) {
    std::vector<float> v(dim, 0.0f);
    v[axis_a] = static_cast<float>(std::cos(angle));
    v[axis_b] = static_cast<float>(std::sin(angle));
    return v;
}

std::string entity_json(const std::string& name, const std::string& description,
                        double importance) {
    json entry{{"name", name}, {"type", "node"}, {"description", description},
               {"importance", importance}};
    return entry.dump();
}

}  // namespace

MockChatClient SyntheticSuite::make_chat_client(std::shared_ptr<UsageLog> log) const {
    return MockChatClient(chat_rules, std::move(log));
}

MockEmbeddingClient SyntheticSuite::make_embedding_client(std::shared_ptr<UsageLog> log) const {
    MockEmbeddingClient client(dim, std::move(log));
    for (const auto& [text, vector] : embedding_overrides) client.plant(text, vector);
    return client;
}

SyntheticSuite make_synthetic_corpus(int n_chains, int hops, std::uint64_t seed,
                                     const SyntheticOptions& options) {
    if (n_chains < 1 || n_chains > 99) throw Error("n_chains must be in [1, 99]");
    if (hops < 2 || hops > 99) throw Error("hops must be in [2, 99]");

    const int distractors =
        options.distractors_per_chain >= 0 ? options.distractors_per_chain
                                           : (options.adversarial ? 20 : 0);

    SyntheticSuite suite;
    const std::size_t needed =
        2 * static_cast<std::size_t>(n_chains) + (distractors > 0 ? n_chains : 0);
    suite.dim = std::max<std::size_t>({16, needed, options.dim});

    // Chain geometry: entities sit on an arc of the chain's own 2-plane, the
    // query at the head of the arc. The terminal stays slightly inside 90
    // degrees so its query cosine is positive and ties with unrelated
    // entities cannot occur.
    const double arc = 80.0 * std::acos(-1.0) / 180.0;
    const double step = arc / hops;
    std::mt19937_64 jitter_rng(seed);

    std::vector<MockChatRule> generation_rules;
    std::vector<MockChatRule> extraction_rules;

    for (int c = 0; c < n_chains; ++c) {
        const std::size_t axis_a = 2 * static_cast<std::size_t>(c);
        const std::size_t axis_b = axis_a + 1;
        const std::size_t axis_r = 2 * static_cast<std::size_t>(n_chains) + c;

        std::vector<std::string> names;
        for (int s = 0; s <= hops; ++s) names.push_back(entity_name(c, s));

        for (int s = 0; s <= hops; ++s) {
            const std::string description = "node " + two_digits(s) + " on chain " + two_digits(c);
            suite.embedding_overrides[names[s] + ": " + description] =
                planted(suite.dim, axis_a, axis_b, s * step);
        }

        for (int d = 0; d < hops; ++d) {
            Document doc;
            doc.doc_id = "chain" + two_digits(c) + "_doc" + std::to_string(d);
            doc.body = "Link record " + doc.doc_id + ": " + names[d] +
                       " connects onward to " + names[d + 1] + " in this chain.";
            suite.embedding_overrides[doc.body] =
                planted(suite.dim, axis_a, axis_b, d * step + step / 2.0);

            MockChatRule rule;
            rule.match_all = {doc.doc_id + ":"};
            rule.response =
                "[" +
                entity_json(names[d], "node " + two_digits(d) + " on chain " + two_digits(c),
                            0.8) +
                "," +
                entity_json(names[d + 1],
                            "node " + two_digits(d + 1) + " on chain " + two_digits(c), 0.8) +
                "]";
            extraction_rules.push_back(std::move(rule));
            suite.corpus.push_back(std::move(doc));
        }

        for (int i = 0; i < distractors; ++i) {
            const std::string name = distractor_name(c, i);
            const std::string description = "distractor " + two_digits(i) + " near chain " +
                                            two_digits(c);
            // Angles strictly inside (0, first-bridge angle) so every
            // distractor outranks every bridge against this chain's query.
            const double jitter =
                (static_cast<double>(jitter_rng() >> 11) * (1.0 / 9007199254740992.0)) * 0.04;
            const double fraction =
                0.25 + 0.65 * (distractors > 1 ? static_cast<double>(i) / (distractors - 1) : 0.0);
            const double angle = std::min(0.95, fraction + jitter) * step;

            suite.embedding_overrides[name + ": " + description] =
                planted(suite.dim, axis_a, axis_r, angle);

            Document doc;
            doc.doc_id = "chain" + two_digits(c) + "_dis" + two_digits(i);
            doc.body = "Note " + doc.doc_id + ": " + name + " stands alone.";
            suite.embedding_overrides[doc.body] = planted(suite.dim, axis_a, axis_r, angle);

            MockChatRule rule;
            rule.match_all = {doc.doc_id + ":"};
            rule.response = "[" + entity_json(name, description, 0.5) + "]";
            extraction_rules.push_back(std::move(rule));
            suite.corpus.push_back(std::move(doc));
        }

        QAExample example;
        example.example_id = "chain" + two_digits(c);
        example.question =
            "What lies at the end of the chain that begins at " + names[0] + "?";
        example.gold_answers = {names[hops]};
        suite.embedding_overrides[example.question] = planted(suite.dim, axis_a, axis_b, 0.0);

        MockChatRule rule;
        rule.match_all = {"begins at " + names[0] + "?", names[hops]};
        rule.response = "The chain leads step by step to its last node.\nAnswer: " + names[hops];
        generation_rules.push_back(std::move(rule));

        BridgeInfo info;
        info.head_id = names[0];
        for (int s = 1; s < hops; ++s) info.bridge_ids.push_back(names[s]);
        info.terminal_adjacent_id = names[hops - 1];
        info.terminal_id = names[hops];
        suite.bridge_map.emplace(example.example_id, std::move(info));
        suite.examples.push_back(std::move(example));
    }

    // Generation rules come first: their question marker only occurs in
    // generation prompts, while chunk markers also appear inside evidence
    // sections. The fallback keeps unanswerable prompts deterministic.
    suite.chat_rules = std::move(generation_rules);
    MockChatRule fallback;
    fallback.match_all = {"QUESTION:"};
    fallback.response = "The context does not name the final node.\nAnswer: unknown";
    suite.chat_rules.push_back(std::move(fallback));
    suite.chat_rules.insert(suite.chat_rules.end(), extraction_rules.begin(),
                            extraction_rules.end());
    return suite;
}

void write_synthetic_suite(const SyntheticSuite& suite, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    write_corpus_jsonl(suite.corpus, dir / "corpus.jsonl");
    write_qa_jsonl(suite.examples, dir / "examples.jsonl");
    {
        json rules = json::array();
        for (const auto& rule : suite.chat_rules)
            rules.push_back(json{{"match_all", rule.match_all}, {"response", rule.response}});
        write_text_file(dir / "chat_fixture.json", rules.dump(2) + "\n");
    }
    {
        json overrides = json::object();
        for (const auto& [text, vector] : suite.embedding_overrides) overrides[text] = vector;
        json doc{{"dim", suite.dim}, {"overrides", overrides}};
        write_text_file(dir / "embed_fixture.json", doc.dump(2) + "\n");
    }
    {
        json map = json::object();
        for (const auto& [example_id, info] : suite.bridge_map)
            map[example_id] = json{{"head", info.head_id},
                                   {"bridges", info.bridge_ids},
                                   {"terminal_adjacent", info.terminal_adjacent_id},
                                   {"terminal", info.terminal_id}};
        write_text_file(dir / "bridge_map.json", map.dump(2) + "\n");
    }
    {
        json config{
            {"chat", json{{"backend", "mock"}, {"fixture", (dir / "chat_fixture.json").string()}}},
            {"embed",
             json{{"backend", "mock"}, {"fixture", (dir / "embed_fixture.json").string()}}},
            {"paths", json{{"corpus", (dir / "corpus.jsonl").string()},
                           {"corpus_format", "jsonl"},
                           {"memory_dir", (dir / "memory").string()},
                           {"out_dir", (dir / "out").string()}}},
        };
        write_text_file(dir / "config.json", config.dump(2) + "\n");
    }
}

BridgeMap load_bridge_map(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw FormatError("bad bridge map " + path.string() + ": " + e.what());
    }
    BridgeMap map;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        BridgeInfo info;
        info.head_id = it.value().at("head").get<std::string>();
        for (const auto& bridge : it.value().at("bridges"))
            info.bridge_ids.push_back(bridge.get<std::string>());
        info.terminal_adjacent_id = it.value().at("terminal_adjacent").get<std::string>();
        info.terminal_id = it.value().at("terminal").get<std::string>();
        map.emplace(it.key(), std::move(info));
    }
    return map;
}

}  // namespace ecphory
