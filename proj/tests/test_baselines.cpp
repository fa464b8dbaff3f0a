#include <doctest.h>

#include "advqa/baselines.hpp"
#include "advqa/mock_backend.hpp"
#include "test_support.hpp"

using namespace advqa;

TEST_CASE("chunk offsets tile the document with the stated overlap") {
    ChunkPlan plan;
    plan.chunk_size_chars = 4000;
    plan.overlap_chars = 500;

    // offset arithmetic oracle: starts at 0, 3500, 7000 for a 10k text
    const std::string text(10000, 'x');
    const auto chunks = plan.chunks(text);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0] == std::pair<std::size_t, std::size_t>{0, 4000});
    CHECK(chunks[1] == std::pair<std::size_t, std::size_t>{3500, 7500});
    CHECK(chunks[2] == std::pair<std::size_t, std::size_t>{7000, 10000});

    // short documents are a single chunk
    const auto single = plan.chunks(std::string(1200, 'y'));
    REQUIRE(single.size() == 1);
    CHECK(single[0] == std::pair<std::size_t, std::size_t>{0, 1200});

    // coverage property across sizes: chunks cover [0, len) without gaps
    for (std::size_t len : {1u, 3999u, 4000u, 4001u, 7500u, 12345u}) {
        const auto cover = plan.chunks(std::string(len, 'z'));
        CHECK(cover.front().first == 0);
        CHECK(cover.back().second == len);
        for (std::size_t k = 1; k < cover.size(); ++k) {
            CHECK(cover[k].first < cover[k - 1].second);  // stated overlap
            CHECK(cover[k].first == cover[k - 1].first + 3500);
        }
    }

    ChunkPlan bad;
    bad.chunk_size_chars = 100;
    bad.overlap_chars = 100;
    CHECK_THROWS_AS(bad.chunks("abc"), std::invalid_argument);
}

TEST_CASE("paraphrase baseline emits chunk count times k records") {
    MockBackend mock(load_mock_rules_json(R"({"rules": [
        {"model": "mock-strong", "match": "variation 1", "response": "first rewording"},
        {"model": "mock-strong", "match": "variation 2", "response": "second rewording"},
        {"model": "mock-strong", "match": "variation 3", "response": "third rewording"}
    ]})"));
    const RunConfig config = test::mock_run_config(1, 1);
    const AgentSet agents = make_agent_set(config, mock);

    DocumentContext context;
    context.id = "contract";
    context.text = std::string(6000, 'c');  // two chunks at 4000/500
    context.token_estimate = estimate_tokens(context.text);

    ChunkPlan plan;
    const SyntheticDataset dataset =
        generate_paraphrases(context, agents, 3, plan, 0);

    REQUIRE(dataset.records.size() == 6);  // 2 chunks x k=3
    CHECK(dataset.records[0].answer == "first rewording");
    CHECK(dataset.records[1].answer == "second rewording");
    CHECK(dataset.records[0].question.text.find("characters 0-4000") !=
          std::string::npos);
    CHECK(dataset.records[3].question.text.find("characters 3500-6000") !=
          std::string::npos);
    for (const auto& record : dataset.records) {
        CHECK(record.question.iteration == 0);
        CHECK(record.context_id == "contract");
    }
    CHECK(mock.call_count() == 6);

    // the defining contrast: no other role is ever consulted
    CHECK(mock.call_count_for_model("mock-weak") == 0);
    CHECK(mock.call_count_for_model("mock-feedback") == 0);
    CHECK(mock.call_count_for_model("mock-guide") == 0);
    CHECK(mock.call_count_for_model("mock-revise") == 0);
}

TEST_CASE("paraphrase baseline skips a failing chunk with a warning") {
    // only passages containing the second chunk's marker bytes match, so the
    // first chunk fails and is skipped whole
    MockBackend mock(load_mock_rules_json(R"({"rules": [
        {"model": "mock-strong", "match": "BBBB", "response": "ok"}
    ]})"));
    const RunConfig config = test::mock_run_config(1, 1);
    const AgentSet agents = make_agent_set(config, mock);

    DocumentContext context;
    context.id = "ctx";
    context.text = std::string(4000, 'A') + std::string(2000, 'B');

    ChunkPlan plan;
    const SyntheticDataset dataset =
        generate_paraphrases(context, agents, 2, plan, 0);
    CHECK(dataset.records.size() == 2);  // only chunk 1 delivered
    for (const auto& record : dataset.records) {
        CHECK(record.question.text.find("characters 3500-6000") != std::string::npos);
    }
}

TEST_CASE("numbered-list parser accepts dotted, parenthesized, and dash bullets") {
    const auto items = parse_question_list("1. A?\n2. B?\n3) C?");
    REQUIRE(items.size() == 3);
    CHECK(items[0] == "A?");
    CHECK(items[1] == "B?");
    CHECK(items[2] == "C?");

    const auto mixed = parse_question_list(
        "Here are the questions:\n- first?\n* second?\n12) third?\n\nnot a bullet");
    REQUIRE(mixed.size() == 3);
    CHECK(mixed[0] == "first?");
    CHECK(mixed[1] == "second?");
    CHECK(mixed[2] == "third?");

    CHECK(parse_question_list("no bullets at all").empty());
    CHECK(parse_question_list("").empty());
}

TEST_CASE("uninformed QA baseline answers each parsed question with the strong agent") {
    MockBackend mock(load_mock_rules_json(R"({"rules": [
        {"model": "mock-strong", "match": "Write 5 challenging questions",
         "response": "1. What notice applies?\n2. Who may audit?\n3. What survives termination?\n4. Which law governs?\n5. What is confidential?"},
        {"model": "mock-strong", "match": "", "response": "a grounded expert answer"}
    ]})"));
    const RunConfig config = test::mock_run_config(1, 1);
    const AgentSet agents = make_agent_set(config, mock);
    const DocumentContext context = test::fixture_contract();

    const SyntheticDataset dataset = generate_uninformed_qa(context, agents, 5, 0);

    REQUIRE(dataset.records.size() == 5);
    CHECK(dataset.records[0].question.text == "What notice applies?");
    CHECK(dataset.records[4].question.text == "What is confidential?");
    for (const auto& record : dataset.records) {
        CHECK(record.question.iteration == 0);  // no refinement ever happened
        CHECK(record.answer == "a grounded expert answer");
        CHECK(record.final_score == 0.0);       // no adversarial signal exists
    }
    // 1 listing call + 5 answers, strong only
    CHECK(mock.call_count() == 6);
    CHECK(mock.call_count_for_model("mock-strong") == 6);
    CHECK(mock.call_count_for_model("mock-weak") == 0);
    CHECK(mock.call_count_for_model("mock-feedback") == 0);
    CHECK(mock.call_count_for_model("mock-guide") == 0);
    CHECK(mock.call_count_for_model("mock-revise") == 0);
}

TEST_CASE("uninformed QA under-generation returns what parsed") {
    MockBackend mock(load_mock_rules_json(R"({"rules": [
        {"model": "mock-strong", "match": "Write 10 challenging questions",
         "response": "1. Only one came out?"},
        {"model": "mock-strong", "match": "", "response": "answer"}
    ]})"));
    const RunConfig config = test::mock_run_config(1, 1);
    const AgentSet agents = make_agent_set(config, mock);

    const SyntheticDataset dataset =
        generate_uninformed_qa(test::fixture_contract(), agents, 10, 0);
    CHECK(dataset.records.size() == 1);
}
