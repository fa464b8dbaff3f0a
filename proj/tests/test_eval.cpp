#include <doctest.h>

#include "advqa/eval.hpp"
#include "advqa/mock_backend.hpp"
#include "test_support.hpp"

using namespace advqa;

namespace {

void write_task(const std::filesystem::path& dir, const std::string& task_id,
                const std::string& tsv, const std::string& meta) {
    test::write_file(dir / (task_id + ".tsv"), tsv);
    test::write_file(dir / (task_id + ".json"), meta);
}

std::string ten_row_tsv(const char* eol = "\n") {
    std::string tsv = "text\tanswer";
    tsv += eol;
    for (int i = 0; i < 10; ++i) {
        tsv += "Clause " + std::to_string(i) + " applies?\t" +
               (i % 2 == 0 ? "Yes" : "No") + eol;
    }
    return tsv;
}

}  // namespace

TEST_CASE("load_tasks partitions demo rows from instances") {
    test::TempDir tmp;
    write_task(tmp.path(), "cardl_audit", ten_row_tsv(),
               R"({"instruction": "Answer Yes or No.", "few_shot_indices": [0, 1]})");

    const auto tasks = load_tasks(tmp.path());
    REQUIRE(tasks.size() == 1);
    CHECK(tasks[0].task_id == "cardl_audit");
    CHECK(tasks[0].instruction == "Answer Yes or No.");
    CHECK(tasks[0].examples.size() == 2);
    CHECK(tasks[0].instances.size() == 8);
    CHECK(tasks[0].examples[0].first == "Clause 0 applies?");
    CHECK(tasks[0].instances[0].first == "Clause 2 applies?");
    CHECK(tasks[0].answer_normalization == Normalization::lowercase_strip);
}

TEST_CASE("load_tasks schema errors name the file and line") {
    test::TempDir tmp;

    SUBCASE("missing answer column") {
        write_task(tmp.path(), "bad", "text\tlabel\nfoo\tbar\n",
                   R"({"instruction": "i"})");
        CHECK_THROWS_WITH_AS(load_tasks(tmp.path()),
                             doctest::Contains("missing 'answer' column"),
                             SchemaError);
    }

    SUBCASE("ragged row") {
        write_task(tmp.path(), "bad", "text\tanswer\nonly-one-cell\n",
                   R"({"instruction": "i"})");
        try {
            load_tasks(tmp.path());
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("bad.tsv:2") != std::string::npos);
        }
    }

    SUBCASE("missing metadata file") {
        test::write_file(tmp.path() / "orphan.tsv", "text\tanswer\na\tb\n");
        CHECK_THROWS_AS(load_tasks(tmp.path()), SchemaError);
    }

    SUBCASE("demo index out of range") {
        write_task(tmp.path(), "bad", "text\tanswer\na\tb\n",
                   R"({"instruction": "i", "few_shot_indices": [5]})");
        CHECK_THROWS_AS(load_tasks(tmp.path()), SchemaError);
    }

    SUBCASE("empty gold answer") {
        write_task(tmp.path(), "bad", "text\tanswer\nsome text\t\n",
                   R"({"instruction": "i"})");
        CHECK_THROWS_AS(load_tasks(tmp.path()), SchemaError);
    }
}

TEST_CASE("CRLF and LF task files parse identically") {
    test::TempDir tmp_lf, tmp_crlf;
    const std::string meta = R"({"instruction": "i", "few_shot_indices": [0]})";
    write_task(tmp_lf.path(), "t", ten_row_tsv("\n"), meta);
    write_task(tmp_crlf.path(), "t", ten_row_tsv("\r\n"), meta);

    const auto lf = load_tasks(tmp_lf.path());
    const auto crlf = load_tasks(tmp_crlf.path());
    REQUIRE(lf.size() == 1);
    REQUIRE(crlf.size() == 1);
    CHECK(lf[0].instances == crlf[0].instances);
    CHECK(lf[0].examples == crlf[0].examples);
}

TEST_CASE("evaluate scores 7 of 10 scripted instances as 0.700 exactly") {
    test::TempDir tmp;
    write_task(tmp.path(), "t", ten_row_tsv(), R"({"instruction": "Answer Yes or No."})");
    const auto tasks = load_tasks(tmp.path());
    REQUIRE(tasks[0].instances.size() == 10);

    // gold alternates Yes/No by row; answer rows 0..6 correctly, miss 7..9
    std::string rules = "[";
    for (int i = 0; i < 10; ++i) {
        const std::string gold = i % 2 == 0 ? "Yes" : "No";
        const std::string reply = i < 7 ? gold : "Unsure";
        rules += std::string(i > 0 ? "," : "") + "{\"match\": \"Clause " +
                 std::to_string(i) + " applies?\\nAnswer:\", \"response\": \"" +
                 reply + "\"}";
    }
    rules += "]";
    MockBackend mock(load_mock_rules_json(rules));

    const EvalReport report = evaluate(tasks, test::mock_binding("eval-model"), mock);

    CHECK(report.per_task.at("t").n_correct == 7);
    CHECK(report.per_task.at("t").n_total == 10);
    CHECK(report.per_task.at("t").accuracy == 0.7);
    CHECK(report.overall_accuracy == 0.7);
    CHECK(report.model_id == "eval-model");

    // determinism: same tasks, same backend, identical report
    const EvalReport again = evaluate(tasks, test::mock_binding("eval-model"), mock);
    CHECK(again.overall_accuracy == report.overall_accuracy);
    CHECK(again.per_task.at("t").n_correct == 7);
}

TEST_CASE("evaluate normalizes predictions per task policy") {
    test::TempDir tmp;
    write_task(tmp.path(), "t", "text\tanswer\nq one\tYes\nq two\tNo\n",
               R"({"instruction": "i", "normalization": "lowercase_strip"})");
    const auto tasks = load_tasks(tmp.path());

    MockBackend mock(load_mock_rules_json(R"([
        {"match": "q one", "response": "  YES  "},
        {"match": "q two", "response": ""}
    ])"));
    const EvalReport report = evaluate(tasks, test::mock_binding("m"), mock);
    // "  YES  " normalizes to the gold "yes"; the empty prediction cannot match
    CHECK(report.per_task.at("t").n_correct == 1);
    CHECK(report.overall_accuracy == 0.5);
}

TEST_CASE("normalization rules") {
    CHECK(normalize_answer("  YeS\t", Normalization::lowercase_strip) == "yes");
    CHECK(normalize_answer("YeS", Normalization::exact) == "YeS");
    // idempotence
    for (const char* s : {"  Mixed Case  ", "already", "UPPER", "  "}) {
        const std::string once = normalize_answer(s, Normalization::lowercase_strip);
        CHECK(normalize_answer(once, Normalization::lowercase_strip) == once);
    }
}

TEST_CASE("evaluate builds the few-shot prompt from instruction and demos") {
    test::TempDir tmp;
    write_task(tmp.path(), "t",
               "text\tanswer\ndemo input\tdemo gold\nreal input\treal gold\n",
               R"({"instruction": "The instruction.", "few_shot_indices": [0]})");
    const auto tasks = load_tasks(tmp.path());

    MockBackend mock(load_mock_rules_json(R"([{"match": "", "response": "x"}])"));
    evaluate(tasks, test::mock_binding("m"), mock);

    REQUIRE(mock.call_count() == 1);
    const MockCall call = mock.trace()[0];
    CHECK(call.system == "The instruction.");
    CHECK(call.user == "demo input\nAnswer: demo gold\n\nreal input\nAnswer:");
}

TEST_CASE("compare_runs orders by average and computes the relative gain") {
    // fixture values from the reporting contract: 69.5 baseline vs 82.7,
    // relative gain (82.7-69.5)/69.5 = 18.99%
    EvalReport base;
    base.model_id = "base";
    base.per_task["Cardl"] = {673, 1000, 0.673};
    base.per_task["Buffa"] = {691, 1000, 0.691};
    base.per_task["Pfhos"] = {721, 1000, 0.721};
    base.overall_accuracy = 0.695;
    EvalReport ours;
    ours.model_id = "adversarial";
    ours.per_task["Cardl"] = {827, 1000, 0.827};
    ours.per_task["Buffa"] = {796, 1000, 0.796};
    ours.per_task["Pfhos"] = {857, 1000, 0.857};
    ours.overall_accuracy = 0.827;

    const TokenUsage base_budget{0, 0, false};
    TokenUsage ours_budget;
    ours_budget.prompt_tokens = 96000;

    const ComparisonTable table = compare_runs({base, ours}, {base_budget, ours_budget});

    // ordered best-first in both renderings
    const auto adversarial_pos = table.csv.find("adversarial");
    const auto base_pos = table.csv.find("\nbase,");
    REQUIRE(adversarial_pos != std::string::npos);
    REQUIRE(base_pos != std::string::npos);
    CHECK(adversarial_pos < base_pos);

    CHECK(table.csv.find("label,tokens,Buffa,Cardl,Pfhos,avg,rel_gain_pct") == 0);
    CHECK(table.csv.find("adversarial,96000,79.6,82.7,85.7,82.7,18.99") !=
          std::string::npos);
    CHECK(table.csv.find("base,0,69.1,67.3,72.1,69.5,0.00") != std::string::npos);
    CHECK(table.text.find("96k") != std::string::npos);

    // single report degenerates to a single row
    const ComparisonTable single = compare_runs({base}, {base_budget});
    CHECK(std::count(single.csv.begin(), single.csv.end(), '\n') == 2);
}

TEST_CASE("overall accuracy is the micro-average over instances") {
    test::TempDir tmp;
    // task a: 4 instances, task b: 1 instance; all gold answers differ from
    // the scripted reply except task a's first two
    write_task(tmp.path(), "a",
               "text\tanswer\nq0\tyes\nq1\tyes\nq2\tno\nq3\tno\n",
               R"({"instruction": "i"})");
    write_task(tmp.path(), "b", "text\tanswer\nq4\tno\n",
               R"({"instruction": "i"})");
    MockBackend mock(load_mock_rules_json(R"([{"match": "", "response": "yes"}])"));

    const EvalReport report =
        evaluate(load_tasks(tmp.path()), test::mock_binding("m"), mock);
    CHECK(report.per_task.at("a").n_correct == 2);
    CHECK(report.per_task.at("b").n_correct == 0);
    // micro: 2 correct / 5 instances, not the macro mean of (0.5, 0.0)
    CHECK(report.overall_accuracy == 0.4);

    std::int64_t total_correct = 0, total = 0;
    for (const auto& [id, score] : report.per_task) {
        total_correct += score.n_correct;
        total += score.n_total;
    }
    CHECK(report.overall_accuracy ==
          static_cast<double>(total_correct) / static_cast<double>(total));
}
