#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sembench/corpus.hpp"
#include "support/helpers.hpp"

using namespace sembench;
using testsupport::TempDir;
using testsupport::write_text;

TEST_CASE("load_documents reads JSONL, keeps order, rejects duplicates",
          "[corpus]") {
    TempDir dir("corpus");

    SECTION("valid file") {
        write_text(dir.file("docs.jsonl"),
                   "{\"id\": \"d1\", \"text\": \"ملخص مكالمة الدعم الأولى\"}\n"
                   "{\"id\": \"d2\", \"text\": \"ملخص مكالمة الدعم الثانية\"}\n");
        const auto docs = load_documents(dir.file("docs.jsonl"));
        REQUIRE(docs.size() == 2);
        CHECK(docs[0].id == "d1");
        CHECK(docs[1].id == "d2");
        CHECK(docs[0].text == "ملخص مكالمة الدعم الأولى");
    }

    SECTION("empty file yields empty set") {
        write_text(dir.file("empty.jsonl"), "");
        CHECK(load_documents(dir.file("empty.jsonl")).empty());
    }

    SECTION("duplicate id names the id and the line") {
        write_text(dir.file("dup.jsonl"),
                   "{\"id\": \"d1\", \"text\": \"a\"}\n"
                   "{\"id\": \"d1\", \"text\": \"b\"}\n");
        CHECK_THROWS_WITH(load_documents(dir.file("dup.jsonl")),
                          Catch::Matchers::ContainsSubstring("duplicate") &&
                              Catch::Matchers::ContainsSubstring("\"d1\"") &&
                              Catch::Matchers::ContainsSubstring(":2"));
    }

    SECTION("malformed line reports its number") {
        write_text(dir.file("bad.jsonl"),
                   "{\"id\": \"d1\", \"text\": \"a\"}\n"
                   "{not json}\n");
        CHECK_THROWS_WITH(load_documents(dir.file("bad.jsonl")),
                          Catch::Matchers::ContainsSubstring(":2"));
    }

    SECTION("empty text rejected") {
        write_text(dir.file("notext.jsonl"), "{\"id\": \"d1\", \"text\": \"\"}\n");
        CHECK_THROWS_AS(load_documents(dir.file("notext.jsonl")), ValidationError);
    }
}

TEST_CASE("load_queries mirrors the document loader", "[corpus]") {
    TempDir dir("queries");

    SECTION("single query line") {
        write_text(dir.file("q.jsonl"), "{\"id\": \"q1\", \"text\": \"سؤال\"}\n");
        const auto queries = load_queries(dir.file("q.jsonl"));
        REQUIRE(queries.size() == 1);
        CHECK(queries[0].id == "q1");
    }

    SECTION("missing text field is malformed") {
        write_text(dir.file("q.jsonl"), "{\"id\": \"q1\"}\n");
        CHECK_THROWS_WITH(load_queries(dir.file("q.jsonl")),
                          Catch::Matchers::ContainsSubstring(":1") &&
                              Catch::Matchers::ContainsSubstring("malformed"));
    }
}

TEST_CASE("load_judgments parses TSV grades strictly", "[corpus]") {
    TempDir dir("qrels");

    SECTION("direct parse") {
        write_text(dir.file("r.tsv"), "q1\td3\t2\n");
        const auto judgments = load_judgments(dir.file("r.tsv"));
        REQUIRE(judgments.size() == 1);
        CHECK(judgments[0] == Judgment{"q1", "d3", 2});
    }

    SECTION("out-of-range grade") {
        write_text(dir.file("r.tsv"), "q1\td3\t3\n");
        CHECK_THROWS_WITH(load_judgments(dir.file("r.tsv")),
                          Catch::Matchers::ContainsSubstring("out of range"));
    }

    SECTION("non-integer grade") {
        write_text(dir.file("r.tsv"), "q1\td3\ttwo\n");
        CHECK_THROWS_WITH(load_judgments(dir.file("r.tsv")),
                          Catch::Matchers::ContainsSubstring("non-integer"));
    }

    SECTION("duplicate pair") {
        write_text(dir.file("r.tsv"), "q1\td3\t2\nq1\td3\t1\n");
        CHECK_THROWS_WITH(load_judgments(dir.file("r.tsv")),
                          Catch::Matchers::ContainsSubstring("duplicate"));
    }

    SECTION("paper-shaped corpus: five rows per query") {
        std::string content;
        for (int q = 1; q <= 406; ++q) {
            for (int d = 1; d <= 5; ++d) {
                content += "q" + std::to_string(q) + "\td" +
                           std::to_string((q - 1) * 5 + d) + "\t" +
                           std::to_string(d == 1 ? 2 : (d % 3 == 0 ? 1 : 0)) +
                           "\n";
            }
        }
        write_text(dir.file("r.tsv"), content);
        CHECK(load_judgments(dir.file("r.tsv")).size() == 2030);
    }
}

TEST_CASE("grades outside {0,1,2} are rejected for random integers",
          "[corpus][property]") {
    TempDir dir("grades");
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        const int grade = static_cast<int>(rng() % 2001) - 1000;
        const std::string content =
            "q1\td1\t" + std::to_string(grade) + "\n";
        write_text(dir.file("r.tsv"), content);
        if (grade >= 0 && grade <= 2) {
            CHECK(load_judgments(dir.file("r.tsv")).size() == 1);
        } else {
            CHECK_THROWS_AS(load_judgments(dir.file("r.tsv")), ValidationError);
        }
    }
}

TEST_CASE("datasets round-trip through write and load", "[corpus][property]") {
    TempDir dir("roundtrip");
    std::mt19937_64 rng(808);
    for (int trial = 0; trial < 20; ++trial) {
        BenchmarkDataset ds;
        const int n_queries = 1 + static_cast<int>(rng() % 6);
        int doc_counter = 0;
        for (int q = 0; q < n_queries; ++q) {
            const std::string query_id = "q" + std::to_string(q + 1);
            ds.queries.push_back({query_id,
                                  "نص الاستعلام رقم " + std::to_string(q + 1)});
            const int n_docs = 1 + static_cast<int>(rng() % 5);
            for (int d = 0; d < n_docs; ++d) {
                const std::string doc_id = "d" + std::to_string(++doc_counter);
                ds.documents.push_back(
                    {doc_id, "وثيقة\t مع فواصل \"واقتباسات\" رقم " +
                                 std::to_string(doc_counter)});
                ds.judgments.push_back({query_id, doc_id,
                                        static_cast<int>(rng() % 3)});
            }
        }
        write_documents(dir.file("d.jsonl"), ds.documents);
        write_queries(dir.file("q.jsonl"), ds.queries);
        write_judgments(dir.file("r.tsv"), ds.judgments);

        BenchmarkDataset back;
        back.documents = load_documents(dir.file("d.jsonl"));
        back.queries = load_queries(dir.file("q.jsonl"));
        back.judgments = load_judgments(dir.file("r.tsv"));
        REQUIRE(back == ds);
    }
}

TEST_CASE("faq entries round-trip including variants", "[corpus]") {
    TempDir dir("faq");
    std::vector<FaqEntry> faqs{
        {"f1", "billing", "كيف أدفع فاتورتي؟", "يمكنك الدفع عبر التطبيق.", {}},
        {"f2", "billing", "ما موعد الفاتورة؟", "في نهاية كل شهر.",
         {"متى تصدر الفاتورة؟", "في أي يوم تصدر الفاتورة؟", "موعد إصدار الفاتورة؟"}},
    };
    write_faqs(dir.file("faq.jsonl"), faqs);
    const auto back = load_faqs(dir.file("faq.jsonl"));
    REQUIRE(back == faqs);

    write_text(dir.file("bad.jsonl"),
               "{\"id\":\"f1\",\"domain\":\"\",\"question\":\"q\",\"answer\":\"a\"}\n");
    CHECK_THROWS_AS(load_faqs(dir.file("bad.jsonl")), ValidationError);
}

TEST_CASE("validate_benchmark classifies findings", "[corpus]") {
    BenchmarkDataset ds;
    for (int d = 1; d <= 10; ++d) {
        ds.documents.push_back({"d" + std::to_string(d), "t"});
    }
    ds.queries.push_back({"q1", "t"});
    ds.queries.push_back({"q2", "t"});
    for (int d = 1; d <= 5; ++d) {
        ds.judgments.push_back({"q1", "d" + std::to_string(d), d == 3 ? 2 : 0});
    }
    for (int d = 6; d <= 10; ++d) {
        ds.judgments.push_back({"q2", "d" + std::to_string(d), d == 6 ? 2 : 1});
    }

    SECTION("paper-conformant dataset is clean") {
        const auto report = validate_benchmark(ds);
        CHECK(report.errors.empty());
        CHECK(report.warnings.empty());
        CHECK(report.clean());
    }

    SECTION("no very-relevant document warns") {
        for (auto& j : ds.judgments) {
            if (j.query_id == "q2" && j.relevance == 2) {
                j.relevance = 1;
            }
        }
        const auto report = validate_benchmark(ds);
        CHECK(report.errors.empty());
        REQUIRE(report.warnings.size() == 1);
        CHECK(report.warnings[0].message ==
              "no very-relevant document for \"q2\"");
    }

    SECTION("judgment count other than five warns") {
        ds.judgments.pop_back();
        const auto report = validate_benchmark(ds);
        CHECK(report.errors.empty());
        REQUIRE(report.warnings.size() == 1);
        CHECK_THAT(report.warnings[0].message,
                   Catch::Matchers::ContainsSubstring("4 judged documents"));
    }

    SECTION("dangling references are errors naming the pair") {
        ds.judgments.push_back({"q1", "d99", 1});
        const auto report = validate_benchmark(ds);
        REQUIRE_FALSE(report.errors.empty());
        CHECK_THAT(report.errors[0].message,
                   Catch::Matchers::ContainsSubstring("(q1, d99)"));
    }

    SECTION("query with no judgments is an error") {
        ds.queries.push_back({"q3", "t"});
        const auto report = validate_benchmark(ds);
        REQUIRE(report.errors.size() == 1);
        CHECK_THAT(report.errors[0].message,
                   Catch::Matchers::ContainsSubstring("q3"));
    }
}
