#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include <sys/wait.h>

#include "sembench/corpus.hpp"
#include "sembench/ranking.hpp"
#include "support/helpers.hpp"

using nlohmann::json;
using testsupport::TempDir;
using testsupport::read_text;
using testsupport::write_text;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
    const auto out_path = dir.file("cli_stdout.txt");
    const auto err_path = dir.file("cli_stderr.txt");
    const std::string cmd = std::string(SEMBENCH_CLI_PATH) + " " + args + " > " +
                            out_path.string() + " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = read_text(out_path);
    result.err = read_text(err_path);
    return result;
}

// Five docs per query; grade-2 docs lie on the query axis, grade-1 at an
// angle, grade-0 nearly orthogonal, so cosine ranking recovers the grades.
void write_search_fixture(const TempDir& dir, int n_queries) {
    std::vector<sembench::Document> docs;
    std::vector<sembench::Query> queries;
    std::vector<sembench::Judgment> judgments;
    std::vector<sembench::EmbeddingRecord> embeddings;
    const int dim = 4;
    int doc_counter = 0;
    for (int q = 0; q < n_queries; ++q) {
        const std::string query_id = "q" + std::to_string(q + 1);
        queries.push_back({query_id, "استعلام " + std::to_string(q + 1)});
        std::vector<float> axis(dim, 0.0f);
        axis[static_cast<std::size_t>(q % dim)] = 1.0f;
        embeddings.push_back({query_id, "fixture-model", axis});
        const std::vector<int> grades{2, 1, 0, 0, 1};
        for (std::size_t d = 0; d < grades.size(); ++d) {
            const std::string doc_id = "d" + std::to_string(++doc_counter);
            docs.push_back({doc_id, "وثيقة " + std::to_string(doc_counter)});
            judgments.push_back({query_id, doc_id, grades[d]});
            std::vector<float> v(dim, 0.0f);
            const float angle = grades[d] == 2   ? 0.05f
                                : grades[d] == 1 ? 0.6f
                                                 : 1.4f;
            v[static_cast<std::size_t>(q % dim)] = std::cos(angle);
            v[static_cast<std::size_t>((q + 1) % dim)] =
                std::sin(angle) * (1.0f + 0.01f * static_cast<float>(d));
            embeddings.push_back({doc_id, "fixture-model", v});
        }
    }
    sembench::write_documents(dir.file("docs.jsonl"), docs);
    sembench::write_queries(dir.file("queries.jsonl"), queries);
    sembench::write_judgments(dir.file("qrels.tsv"), judgments);
    sembench::write_embeddings_jsonl(dir.file("embeddings.jsonl"), embeddings);
}

} // namespace

TEST_CASE("eval-search renders the evaluation table and persists reports",
          "[cli]") {
    TempDir dir("cli_search");
    write_search_fixture(dir, 4);

    const std::string args = "eval-search --docs " +
                             dir.file("docs.jsonl").string() + " --queries " +
                             dir.file("queries.jsonl").string() + " --qrels " +
                             dir.file("qrels.tsv").string() + " --embeddings " +
                             dir.file("embeddings.jsonl").string() +
                             " --k 3 --out " + dir.file("report").string();
    const CliResult result = run_cli(dir, args);
    INFO(result.err);
    REQUIRE(result.exit_code == 0);
    CHECK(result.out.find("NDCG@3") != std::string::npos);
    CHECK(result.out.find("MRR@3") != std::string::npos);
    CHECK(result.out.find("mAP@3") != std::string::npos);
    CHECK(result.out.find("Emb. Size") != std::string::npos);
    CHECK(result.out.find("fixture-model") != std::string::npos);

    // Embeddings are grade-correlated, so the encoder ranking is ideal.
    const json report = json::parse(read_text(dir.file("report.json")));
    CHECK(report.at("runs").at(0).at("aggregates").at("ndcg").get<double>() ==
          1.0);
    CHECK(report.at("runs").at(0).at("embedding_dim").get<int>() == 4);

    // Sidecar manifest names every input.
    const json manifest =
        json::parse(read_text(dir.file("report.manifest.json")));
    CHECK(manifest.at("subcommand") == "eval-search");
    CHECK(manifest.at("input_digests").size() == 4);

    // Network-free runs are deterministic: equal report bytes.
    const std::string first = read_text(dir.file("report.json"));
    const CliResult again = run_cli(dir, args);
    REQUIRE(again.exit_code == 0);
    CHECK(read_text(dir.file("report.json")) == first);
}

TEST_CASE("eval-search exit codes partition the failure classes", "[cli]") {
    TempDir dir("cli_errors");
    write_search_fixture(dir, 2);

    SECTION("missing qrels file names the path, exit 2") {
        const CliResult result = run_cli(
            dir, "eval-search --docs " + dir.file("docs.jsonl").string() +
                     " --queries " + dir.file("queries.jsonl").string() +
                     " --qrels " + dir.file("missing.tsv").string() +
                     " --embeddings " + dir.file("embeddings.jsonl").string());
        CHECK(result.exit_code == 2);
        CHECK(result.err.find("missing.tsv") != std::string::npos);
    }

    SECTION("k = 0 is a usage error, exit 2") {
        const CliResult result = run_cli(
            dir, "eval-search --docs " + dir.file("docs.jsonl").string() +
                     " --queries " + dir.file("queries.jsonl").string() +
                     " --qrels " + dir.file("qrels.tsv").string() +
                     " --embeddings " + dir.file("embeddings.jsonl").string() +
                     " --k 0");
        CHECK(result.exit_code == 2);
    }

    SECTION("unknown subcommand, exit 2") {
        CHECK(run_cli(dir, "frobnicate").exit_code == 2);
    }

    SECTION("encoder endpoint down, exit 3") {
        write_text(dir.file("encoder.json"),
                   json{{"model_id", "down-model"},
                        {"endpoint_url", "http://127.0.0.1:9/v1/embed"},
                        {"dimension", 4},
                        {"max_retries", 0},
                        {"timeout_ms", 200},
                        {"backoff_ms", 1}}
                       .dump());
        const CliResult result = run_cli(
            dir, "eval-search --docs " + dir.file("docs.jsonl").string() +
                     " --queries " + dir.file("queries.jsonl").string() +
                     " --qrels " + dir.file("qrels.tsv").string() +
                     " --encoder " + dir.file("encoder.json").string());
        CHECK(result.exit_code == 3);
    }
}

TEST_CASE("baseline emits Random and Worst rows, reproducibly", "[cli]") {
    TempDir dir("cli_baseline");
    write_search_fixture(dir, 3);

    const std::string args = "baseline --qrels " +
                             dir.file("qrels.tsv").string() +
                             " --samples 30 --seed 7 --k 3 --out " +
                             dir.file("baseline").string();
    const CliResult result = run_cli(dir, args);
    INFO(result.err);
    REQUIRE(result.exit_code == 0);
    CHECK(result.out.find("Random Ranking") != std::string::npos);
    CHECK(result.out.find("Worst Ranking") != std::string::npos);

    const std::string first = read_text(dir.file("baseline.json"));
    const CliResult again = run_cli(dir, args);
    REQUIRE(again.exit_code == 0);
    CHECK(read_text(dir.file("baseline.json")) == first);

    const json report = json::parse(first);
    CHECK(report.at("runs").at(0).at("baseline").at("rng").get<std::string>() ==
          "mt19937_64/fisher-yates-rejection");

    CHECK(run_cli(dir, "baseline --qrels " + dir.file("qrels.tsv").string() +
                           " --samples 0")
              .exit_code == 2);
}

TEST_CASE("generate mock mode produces loadable datasets and audit samples",
          "[cli]") {
    TempDir dir("cli_generate");
    std::vector<sembench::Document> docs;
    for (int i = 0; i < 20; ++i) {
        docs.push_back({"d" + std::to_string(i + 1),
                        "ملخص " + std::to_string(i + 1)});
    }
    sembench::write_documents(dir.file("docs.jsonl"), docs);
    write_text(dir.file("group.txt"),
               "{group_texts}\nScale: {label_scale}\nReturn JSON.\n");

    const CliResult result = run_cli(
        dir, "generate --mode search --docs " + dir.file("docs.jsonl").string() +
                 " --generator mock --prompt-template " +
                 dir.file("group.txt").string() + " --seed 5 --out-queries " +
                 dir.file("gq.jsonl").string() + " --out-qrels " +
                 dir.file("gr.tsv").string() + " --audit-fraction 0.25" +
                 " --audit-out " + dir.file("audit.tsv").string());
    INFO(result.err);
    REQUIRE(result.exit_code == 0);

    const auto queries = sembench::load_queries(dir.file("gq.jsonl"));
    const auto judgments = sembench::load_judgments(dir.file("gr.tsv"));
    CHECK(queries.size() == 4);
    CHECK(judgments.size() == 20);
    const auto report = sembench::validate_benchmark(docs, queries, judgments);
    CHECK(report.errors.empty());
    CHECK(report.warnings.empty());

    // ceil(0.25 * 4) = 1 group -> header + 5 rows.
    std::istringstream audit(read_text(dir.file("audit.tsv")));
    std::string line;
    int lines = 0;
    while (std::getline(audit, line)) {
        ++lines;
    }
    CHECK(lines == 6);

    // Same seed, same generator: identical dataset bytes.
    const std::string queries_bytes = read_text(dir.file("gq.jsonl"));
    const CliResult again = run_cli(
        dir, "generate --mode search --docs " + dir.file("docs.jsonl").string() +
                 " --generator mock --prompt-template " +
                 dir.file("group.txt").string() + " --seed 5 --out-queries " +
                 dir.file("gq.jsonl").string() + " --out-qrels " +
                 dir.file("gr.tsv").string());
    REQUIRE(again.exit_code == 0);
    CHECK(read_text(dir.file("gq.jsonl")) == queries_bytes);
}

namespace {

// Chat endpoint that always answers with the same text.
class FixedChatServer {
public:
    explicit FixedChatServer(std::string text) {
        server_.Post("/chat", [text = std::move(text)](const httplib::Request&,
                                                       httplib::Response& res) {
            res.set_content(json{{"text", text}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FixedChatServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/chat";
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace

TEST_CASE("generate exits 4 when invariants cannot be met", "[cli]") {
    TempDir dir("cli_gen4");
    std::vector<sembench::Document> docs;
    for (int i = 0; i < 5; ++i) {
        docs.push_back({"d" + std::to_string(i + 1), "نص"});
    }
    sembench::write_documents(dir.file("docs.jsonl"), docs);
    write_text(dir.file("group.txt"), "{group_texts}\n{label_scale}\n");

    // The endpoint never grades anything very relevant.
    FixedChatServer server("{\"query\": \"q\", \"grades\": [0,1,0,1,0]}");
    write_text(dir.file("generator.json"), json{{"model", "stubborn"},
                                                {"endpoint_url", server.url()},
                                                {"max_retries", 0},
                                                {"timeout_ms", 5000},
                                                {"backoff_ms", 1}}
                                               .dump());
    const CliResult result = run_cli(
        dir, "generate --mode search --docs " + dir.file("docs.jsonl").string() +
                 " --generator " + dir.file("generator.json").string() +
                 " --prompt-template " + dir.file("group.txt").string() +
                 " --max-retries 1 --out-queries " +
                 dir.file("gq.jsonl").string() + " --out-qrels " +
                 dir.file("gr.tsv").string());
    CHECK(result.exit_code == 4);
    CHECK(result.err.find("very relevant") != std::string::npos);
}

TEST_CASE("generate rag mode fills variants", "[cli]") {
    TempDir dir("cli_genrag");
    std::vector<sembench::FaqEntry> faqs{
        {"f1", "billing", "سؤال أول؟", "جواب أول.", {}},
        {"f2", "roaming", "سؤال ثان؟", "جواب ثان.", {}},
    };
    sembench::write_faqs(dir.file("faq.jsonl"), faqs);
    write_text(dir.file("variants.txt"), "{count} paraphrases of {question}\n");

    const CliResult result = run_cli(
        dir, "generate --mode rag --faq " + dir.file("faq.jsonl").string() +
                 " --generator mock --prompt-template " +
                 dir.file("variants.txt").string() + " --variants 3 --out-faq " +
                 dir.file("faq_out.jsonl").string());
    INFO(result.err);
    REQUIRE(result.exit_code == 0);
    const auto out = sembench::load_faqs(dir.file("faq_out.jsonl"));
    REQUIRE(out.size() == 2);
    for (const auto& f : out) {
        CHECK(f.variants.size() == 3);
    }
}

TEST_CASE("embed materializes a cache that eval-search can consume", "[cli]") {
    TempDir dir("cli_embed");
    write_search_fixture(dir, 2);

    const CliResult embed = run_cli(
        dir, "embed --docs " + dir.file("docs.jsonl").string() + " --queries " +
                 dir.file("queries.jsonl").string() + " --embeddings " +
                 dir.file("embeddings.jsonl").string() + " --cache " +
                 dir.file("cache.bin").string());
    INFO(embed.err);
    REQUIRE(embed.exit_code == 0);
    CHECK(std::filesystem::exists(dir.file("cache.bin")));
    CHECK(std::filesystem::exists(dir.file("cache.bin.manifest.json")));

    const CliResult search = run_cli(
        dir, "eval-search --docs " + dir.file("docs.jsonl").string() +
                 " --queries " + dir.file("queries.jsonl").string() +
                 " --qrels " + dir.file("qrels.tsv").string() + " --cache " +
                 dir.file("cache.bin").string() +
                 " --model fixture-model --k 3 --format json");
    INFO(search.err);
    REQUIRE(search.exit_code == 0);
    const json report = json::parse(search.out);
    CHECK(report.at("runs").at(0).at("aggregates").at("ndcg").get<double>() ==
          1.0);
}

namespace {

// Chat endpoint double for live eval-rag: the generator echoes the first
// context answer, the judge string-compares GENERATED and TRUTH lines.
class FakeChatServer {
public:
    FakeChatServer() {
        server_.Post("/chat", [](const httplib::Request& req,
                                 httplib::Response& res) {
            const json body = json::parse(req.body);
            const std::string prompt =
                body.at("messages").at(0).at("content").get<std::string>();
            const std::string model = body.at("model").get<std::string>();
            std::string text;
            if (model == "echo-generator") {
                const auto pos = prompt.find("[ANSWER 1]\n");
                const auto start = pos + 11;
                const auto end = prompt.find('\n', start);
                text = prompt.substr(start, end - start);
            } else {
                auto line_after = [&prompt](const std::string& marker) {
                    const auto p = prompt.find(marker);
                    const auto s = p + marker.size();
                    const auto e = prompt.find('\n', s);
                    return prompt.substr(s, e - s);
                };
                text = line_after("GENERATED: ") == line_after("TRUTH: ")
                           ? "VERDICT: CORRECT"
                           : "VERDICT: INCORRECT";
            }
            res.set_content(json{{"text", text}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeChatServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/chat";
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace

TEST_CASE("eval-rag runs live against chat endpoints and replays the log",
          "[cli]") {
    TempDir dir("cli_rag");

    std::vector<sembench::FaqEntry> faqs;
    std::vector<sembench::EmbeddingRecord> embeddings;
    for (int i = 0; i < 6; ++i) {
        sembench::FaqEntry f;
        f.id = "f" + std::to_string(i + 1);
        f.domain = i < 3 ? "billing" : "roaming";
        f.question = "سؤال " + std::to_string(i + 1) + "؟";
        f.answer = "جواب " + std::to_string(i + 1) + ".";
        f.variants = {f.question};
        std::vector<float> v(6, 0.0f);
        v[static_cast<std::size_t>(i)] = 1.0f;
        embeddings.push_back({f.id, "static-model", v});
        faqs.push_back(std::move(f));
    }
    sembench::write_faqs(dir.file("faq.jsonl"), faqs);
    sembench::write_embeddings_jsonl(dir.file("qemb.jsonl"), embeddings);
    write_text(dir.file("answer.txt"),
               "QUESTION: {query}\n{contexts}Answer from the context.\n");
    write_text(dir.file("judge.txt"),
               "QUERY: {query}\nGENERATED: {generated_answer}\n"
               "TRUTH: {ground_truth_answer}\nReply VERDICT: CORRECT or "
               "VERDICT: INCORRECT.\n");

    FakeChatServer chat;
    write_text(dir.file("generator.json"),
               json{{"model", "echo-generator"},
                    {"endpoint_url", chat.url()},
                    {"max_retries", 1},
                    {"timeout_ms", 5000},
                    {"backoff_ms", 1}}
                   .dump());
    write_text(dir.file("judge.json"), json{{"model", "exact-judge"},
                                            {"endpoint_url", chat.url()},
                                            {"max_retries", 1},
                                            {"timeout_ms", 5000},
                                            {"backoff_ms", 1}}
                                           .dump());

    const std::string base_args =
        "eval-rag --faq " + dir.file("faq.jsonl").string() + " --embeddings " +
        dir.file("qemb.jsonl").string() + " --generator " +
        dir.file("generator.json").string() + " --judge " +
        dir.file("judge.json").string() + " --gen-template " +
        dir.file("answer.txt").string() + " --judge-template " +
        dir.file("judge.txt").string();

    const CliResult live = run_cli(
        dir, base_args + " --retrieval-k 3 --records-out " +
                 dir.file("records.jsonl").string() + " --out " +
                 dir.file("rag").string());
    INFO(live.err);
    REQUIRE(live.exit_code == 0);
    CHECK(live.out.find("Top 3 Accuracy") != std::string::npos);
    CHECK(live.out.find("100.00%") != std::string::npos);
    CHECK(live.out.find("N/A") != std::string::npos); // top-1 not requested

    // Replay reproduces the persisted report byte for byte.
    const CliResult replay = run_cli(
        dir, "eval-rag --replay " + dir.file("records.jsonl").string() +
                 " --out " + dir.file("rag_replay").string());
    INFO(replay.err);
    REQUIRE(replay.exit_code == 0);
    CHECK(read_text(dir.file("rag_replay.json")) ==
          read_text(dir.file("rag.json")));

    SECTION("both retrieval depths fill both table columns") {
        const CliResult both = run_cli(
            dir, base_args + " --retrieval-k 3 --retrieval-k 1 --records-out " +
                     dir.file("records_both").string() + " --format csv");
        INFO(both.err);
        REQUIRE(both.exit_code == 0);
        CHECK(both.out.find("N/A") == std::string::npos);
        CHECK(both.out.find("Top 3 Accuracy,Top 1 Accuracy") !=
              std::string::npos);
    }

    SECTION("unreachable judge endpoint exits 3") {
        write_text(dir.file("judge_down.json"),
                   json{{"model", "exact-judge"},
                        {"endpoint_url", "http://127.0.0.1:9/chat"},
                        {"max_retries", 0},
                        {"timeout_ms", 200},
                        {"backoff_ms", 1}}
                       .dump());
        const CliResult result = run_cli(
            dir, "eval-rag --faq " + dir.file("faq.jsonl").string() +
                     " --embeddings " + dir.file("qemb.jsonl").string() +
                     " --generator " + dir.file("generator.json").string() +
                     " --judge " + dir.file("judge_down.json").string() +
                     " --gen-template " + dir.file("answer.txt").string() +
                     " --judge-template " + dir.file("judge.txt").string() +
                     " --retrieval-k 1 --failure-budget 0.1 --records-out " +
                     dir.file("records_down.jsonl").string());
        CHECK(result.exit_code == 3);
        CHECK(std::filesystem::exists(dir.file("records_down.jsonl")));
    }
}
