#include <doctest.h>

#include <atomic>
#include <map>

#include "advqa/cache.hpp"
#include "advqa/dataset.hpp"
#include "advqa/mock_backend.hpp"
#include "advqa/optimizer.hpp"
#include "test_support.hpp"

using namespace advqa;
using advqa::test::decode_call_site;

namespace {

// Throws TransportError once the call budget is spent; used to inject
// interruptions mid-run.
class FailAfter : public Backend {
public:
    FailAfter(Backend& inner, int budget) : inner_(inner), budget_(budget) {}

    CompletionResult complete(const BackendBinding& binding,
                              const std::vector<ChatMessage>& messages) override {
        if (budget_.fetch_sub(1) <= 0) {
            throw TransportError("injected failure");
        }
        return inner_.complete(binding, messages);
    }

private:
    Backend& inner_;
    std::atomic<int> budget_;
};

struct RoleCounts {
    std::int64_t strong = 0, weak = 0, feedback = 0, guide = 0, revise = 0;
};

RoleCounts count_roles(const std::vector<MockCall>& calls) {
    RoleCounts counts;
    for (const auto& call : calls) {
        if (call.model_name == "mock-strong") ++counts.strong;
        if (call.model_name == "mock-weak") ++counts.weak;
        if (call.model_name == "mock-feedback") ++counts.feedback;
        if (call.model_name == "mock-guide") ++counts.guide;
        if (call.model_name == "mock-revise") ++counts.revise;
    }
    return counts;
}

// Measured call ordering per (question, iteration): both answers before
// feedback, then guide, then revise.
void check_call_ordering(const std::vector<MockCall>& calls, std::int64_t base_seed) {
    struct Seqs {
        std::int64_t strong = -1, weak = -1, feedback = -1, guide = -1, revise = -1;
    };
    std::map<std::pair<int, int>, Seqs> sites;
    for (const auto& call : calls) {
        const auto site = decode_call_site(call, base_seed);
        REQUIRE(site.question_index >= 0);
        auto& seqs = sites[{site.question_index, site.iteration}];
        if (call.model_name == "mock-strong") seqs.strong = call.seq;
        if (call.model_name == "mock-weak") seqs.weak = call.seq;
        if (call.model_name == "mock-feedback") seqs.feedback = call.seq;
        if (call.model_name == "mock-guide") seqs.guide = call.seq;
        if (call.model_name == "mock-revise") seqs.revise = call.seq;
    }
    for (const auto& [site, seqs] : sites) {
        if (seqs.feedback < 0) continue;  // final dataset answers have no feedback
        CAPTURE(site.first);
        CAPTURE(site.second);
        CHECK(seqs.strong < seqs.feedback);
        CHECK(seqs.weak < seqs.feedback);
        CHECK(seqs.feedback < seqs.guide);
        CHECK(seqs.guide < seqs.revise);
    }
}

}  // namespace

TEST_CASE("optimize_question executes exactly T iterations in order") {
    MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));
    const RunConfig config = test::mock_run_config(1, 3);
    const AgentSet agents = make_agent_set(config, mock);
    const DocumentContext context = test::fixture_contract();

    const OptimizeOutcome outcome =
        optimize_question(context, placeholder_question(0), agents, config);

    REQUIRE(outcome.steps.size() == 3);
    CHECK_FALSE(outcome.aborted);
    CHECK(outcome.final_question.iteration == 3);

    const RoleCounts counts = count_roles(mock.trace());
    CHECK(counts.strong == 3);
    CHECK(counts.weak == 3);
    CHECK(counts.feedback == 3);
    CHECK(counts.guide == 3);
    CHECK(counts.revise == 3);
    check_call_ordering(mock.trace(), config.seed);

    // the chain is a path: question_after of step t is question_before of t+1
    for (std::size_t t = 1; t < outcome.steps.size(); ++t) {
        CHECK(outcome.steps[t].question_before.text ==
              outcome.steps[t - 1].question_after.text);
        CHECK(outcome.steps[t].question_before.iteration ==
              outcome.steps[t - 1].question_after.iteration);
    }
    for (const auto& step : outcome.steps) {
        CHECK(step.question_after.iteration == step.question_before.iteration + 1);
        CHECK(step.question_after.question_index == step.question_index);
        CHECK(step.timestamps.strong < step.timestamps.feedback);
        CHECK(step.timestamps.weak < step.timestamps.feedback);
        CHECK(step.timestamps.feedback < step.timestamps.guide);
        CHECK(step.timestamps.guide < step.timestamps.revise);
    }
}

TEST_CASE("optimize_question with T=1 yields the single first revision") {
    MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));
    const RunConfig config = test::mock_run_config(1, 1);
    const AgentSet agents = make_agent_set(config, mock);

    const OptimizeOutcome outcome = optimize_question(
        test::fixture_contract(), placeholder_question(0), agents, config);
    REQUIRE(outcome.steps.size() == 1);
    CHECK(outcome.final_question.iteration == 1);
    CHECK(outcome.final_question.text ==
          "Which notice periods govern assignment, termination, and audit, and how "
          "do they interact for a mid-term change of control?");
}

TEST_CASE("appendix replay follows the worked three-iteration example") {
    MockBackend mock(load_mock_rules_file(test::data_dir() / "appendix_replay.json"));
    const RunConfig config = test::mock_run_config(1, 3);
    const AgentSet agents = make_agent_set(config, mock);
    const DocumentContext context = test::fixture_contract();

    const OptimizeOutcome outcome =
        optimize_question(context, placeholder_question(0), agents, config);

    REQUIRE(outcome.steps.size() == 3);
    CHECK(outcome.steps[0].feedback.score == 0.5);
    CHECK(outcome.steps[1].feedback.score == 0.6);
    CHECK(outcome.steps[2].feedback.score == 0.6);
    for (const auto& step : outcome.steps) {
        CHECK(step.feedback.parse_status == ParseStatus::parsed);
    }

    CHECK(outcome.steps[0].question_before.text == "Q: ???");
    CHECK(outcome.steps[0].question_after.text.find("confidentiality provisions") !=
          std::string::npos);
    CHECK(outcome.steps[1].question_after.text.find("Considering the entire Agreement") == 0);
    CHECK(outcome.final_question.text.find("influence operational flexibility") !=
          std::string::npos);

    CHECK(outcome.steps[0].gradient.text.find("Replace the vague placeholder") == 0);
    CHECK(outcome.steps[0].answer_strong.text.find(
              "did not provide a specific question") != std::string::npos);
}

TEST_CASE("run persists N*T steps and a loadable manifest") {
    test::TempDir tmp;
    MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));
    CachedBackend cached(mock, tmp.path() / "cache");
    const RunConfig config = test::mock_run_config(4, 3);
    const AgentSet agents = make_agent_set(config, cached);
    const DocumentContext context = test::fixture_contract();

    const RunState state = run(config, context, agents, tmp.path() / "run");

    CHECK(state.status == RunStatus::complete);
    REQUIRE(state.trajectories.size() == 4);
    for (const auto& trajectory : state.trajectories) {
        CHECK(trajectory.size() == 3);
    }
    CHECK(state.completed_count() == 4);

    const RoleCounts counts = count_roles(mock.trace());
    CHECK(counts.strong == 12);
    CHECK(counts.weak == 12);
    CHECK(counts.feedback == 12);
    CHECK(counts.guide == 12);
    CHECK(counts.revise == 12);

    // 12 lines on disk, loadable into an equivalent state
    const std::string log = test::read_file(tmp.path() / "run" / "trajectory.jsonl");
    CHECK(std::count(log.begin(), log.end(), '\n') == 12);

    const RunState loaded = load_run_state(tmp.path() / "run");
    CHECK(loaded.status == RunStatus::complete);
    CHECK(loaded.trajectories.size() == 4);
    for (int i = 0; i < 4; ++i) {
        REQUIRE(loaded.trajectories[i].size() == 3);
        for (int t = 0; t < 3; ++t) {
            CHECK(loaded.trajectories[i][t].question_after.text ==
                  state.trajectories[i][t].question_after.text);
            CHECK(loaded.trajectories[i][t].feedback.score ==
                  state.trajectories[i][t].feedback.score);
        }
    }
}

TEST_CASE("determinism: identical seeds give byte-identical artifacts") {
    test::TempDir tmp;
    const DocumentContext context = test::fixture_contract();

    auto one_run = [&](const std::string& name) {
        MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));
        CachedBackend cached(mock, tmp.path() / name / "cache");
        const RunConfig config = test::mock_run_config(4, 3, 42);
        const AgentSet agents = make_agent_set(config, cached);
        run(config, context, agents, tmp.path() / name);
        return std::pair{test::read_file(tmp.path() / name / "trajectory.jsonl"),
                         test::read_file(tmp.path() / name / "manifest.json")};
    };

    const auto [log_a, manifest_a] = one_run("a");
    const auto [log_b, manifest_b] = one_run("b");
    CHECK(log_a == log_b);
    CHECK(manifest_a == manifest_b);
    CHECK_FALSE(log_a.empty());
}

TEST_CASE("parallel equivalence: concurrency 4 matches concurrency 1") {
    test::TempDir tmp;
    const DocumentContext context = test::fixture_contract();

    auto one_run = [&](const std::string& name, int concurrency) {
        MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));
        CachedBackend cached(mock, tmp.path() / name / "cache");
        RunConfig config = test::mock_run_config(6, 3, 42);
        config.concurrency_limit = concurrency;
        const AgentSet agents = make_agent_set(config, cached);
        const RunState state = run(config, context, agents, tmp.path() / name);
        CHECK(state.status == RunStatus::complete);
        return test::read_file(tmp.path() / name / "trajectory.jsonl");
    };

    // the finalized log is (question, iteration)-sorted, so the whole file
    // must agree byte for byte
    CHECK(one_run("seq", 1) == one_run("par", 4));
}

TEST_CASE("repeated run against a shared cache performs zero fresh calls") {
    test::TempDir tmp;
    MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));
    CachedBackend cached(mock, tmp.path() / "shared-cache");
    const RunConfig config = test::mock_run_config(2, 2, 7);
    const AgentSet agents = make_agent_set(config, cached);
    const DocumentContext context = test::fixture_contract();

    run(config, context, agents, tmp.path() / "first");
    const std::int64_t fresh_after_first = mock.call_count();
    CHECK(fresh_after_first == 2 * 2 * 5);

    run(config, context, agents, tmp.path() / "second");
    CHECK(mock.call_count() == fresh_after_first);  // trace counter unchanged

    CHECK(test::read_file(tmp.path() / "first" / "trajectory.jsonl") ==
          test::read_file(tmp.path() / "second" / "trajectory.jsonl"));
}

TEST_CASE("resume continues an interrupted run without repeating persisted steps") {
    test::TempDir tmp;
    const DocumentContext context = test::fixture_contract();
    const RunConfig config = test::mock_run_config(1, 3, 11);

    MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));

    {
        // 10 calls = exactly iterations t=0 and t=1; t=2 dies on its first call
        FailAfter flaky(mock, 10);
        CachedBackend cached(flaky, tmp.path() / "run" / "cache");
        const AgentSet agents = make_agent_set(config, cached);
        const RunState state = run(config, context, agents, tmp.path() / "run");
        CHECK(state.status == RunStatus::failed);
        REQUIRE(state.trajectories[0].size() == 2);
        CHECK(state.aborted[0] == 1);
    }

    const auto before_resume = mock.trace().size();

    {
        CachedBackend cached(mock, tmp.path() / "run" / "cache");
        const RunState state = resume(tmp.path() / "run", cached);
        CHECK(state.status == RunStatus::complete);
        REQUIRE(state.trajectories[0].size() == 3);
        // the resumed trajectory keeps the persisted prefix
        CHECK(state.trajectories[0][0].iteration == 0);
        CHECK(state.trajectories[0][2].iteration == 2);
    }

    // only iteration-2 call sites appear after the resume
    const auto trace = mock.trace();
    for (std::size_t k = before_resume; k < trace.size(); ++k) {
        const auto site = decode_call_site(trace[k], config.seed);
        CHECK(site.iteration == 2);
    }
}

TEST_CASE("resume of a complete run is a no-op") {
    test::TempDir tmp;
    MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));
    CachedBackend cached(mock, tmp.path() / "run" / "cache");
    const RunConfig config = test::mock_run_config(2, 2);
    const AgentSet agents = make_agent_set(config, cached);
    run(config, test::fixture_contract(), agents, tmp.path() / "run");

    const auto calls_before = mock.call_count();
    const std::string log_before = test::read_file(tmp.path() / "run" / "trajectory.jsonl");

    const RunState resumed = resume(tmp.path() / "run", cached);
    CHECK(resumed.status == RunStatus::complete);
    CHECK(mock.call_count() == calls_before);
    CHECK(test::read_file(tmp.path() / "run" / "trajectory.jsonl") == log_before);
}

TEST_CASE("load_run_state rejects tampered or truncated state") {
    test::TempDir tmp;
    MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));
    CachedBackend cached(mock, tmp.path() / "run" / "cache");
    const RunConfig config = test::mock_run_config(1, 2);
    const AgentSet agents = make_agent_set(config, cached);
    run(config, test::fixture_contract(), agents, tmp.path() / "run");

    SUBCASE("truncated trajectory line") {
        std::string log = test::read_file(tmp.path() / "run" / "trajectory.jsonl");
        log.resize(log.size() - 10);
        test::write_file(tmp.path() / "run" / "trajectory.jsonl", log);
        CHECK_THROWS_AS(load_run_state(tmp.path() / "run"), CorruptState);
    }

    SUBCASE("config edits break the digest") {
        std::string manifest = test::read_file(tmp.path() / "run" / "manifest.json");
        const auto pos = manifest.find("\"seed\": 42");
        REQUIRE(pos != std::string::npos);
        manifest.replace(pos, 10, "\"seed\": 43");
        test::write_file(tmp.path() / "run" / "manifest.json", manifest);
        CHECK_THROWS_AS(load_run_state(tmp.path() / "run"), CorruptState);
    }

    SUBCASE("context text edits break the content hash") {
        std::string manifest = test::read_file(tmp.path() / "run" / "manifest.json");
        const auto pos = manifest.find("SOFTWARE LICENSE");
        REQUIRE(pos != std::string::npos);
        manifest.replace(pos, 8, "HARDWARE");
        test::write_file(tmp.path() / "run" / "manifest.json", manifest);
        CHECK_THROWS_AS(load_run_state(tmp.path() / "run"), CorruptState);
    }

    SUBCASE("missing manifest") {
        CHECK_THROWS_AS(load_run_state(tmp.path() / "nowhere"), CorruptState);
    }
}

namespace {

const char* kLevelScript = R"({"rules": [
    {"model": "mock-strong", "response": "Expert answer."},
    {"model": "mock-weak", "response": "Weak answer."},
    {"model": "mock-feedback", "response": "Score: 0.5. Missing details."},
    {"model": "mock-guide", "response": "Add depth."},
    {"model": "mock-revise", "match": "Level 2", "response": "Level 3 question about notice, audit, and assignment?"},
    {"model": "mock-revise", "match": "Level 1", "response": "Level 2 question about notice and audit?"},
    {"model": "mock-revise", "match": "Q: ???", "response": "Level 1 question about notice?"}
]})";

}  // namespace

TEST_CASE("sweep_iterations slices prefixes of one full run") {
    test::TempDir tmp;
    MockBackend mock(load_mock_rules_json(kLevelScript));
    CachedBackend cached(mock, tmp.path() / "run" / "cache");
    RunConfig config = test::mock_run_config(2, 1, 5);
    const AgentSet agents = make_agent_set(config, cached);
    const DocumentContext context = test::fixture_contract();

    const auto states =
        sweep_iterations(config, context, agents, {1, 2, 3}, tmp.path() / "run");

    REQUIRE(states.size() == 3);
    const RunState& full = states.at(3);
    REQUIRE(full.trajectories[0].size() == 3);
    CHECK(full.final_question(0).text ==
          "Level 3 question about notice, audit, and assignment?");

    for (int t : {1, 2}) {
        const RunState& sliced = states.at(t);
        CHECK(sliced.config.n_iterations == t);
        for (int i = 0; i < 2; ++i) {
            REQUIRE(sliced.trajectories[i].size() == static_cast<std::size_t>(t));
            // every sliced step is the same object as the full run's prefix
            for (int s = 0; s < t; ++s) {
                CHECK(sliced.trajectories[i][s].question_after.text ==
                      full.trajectories[i][s].question_after.text);
            }
        }
    }
    CHECK(states.at(1).final_question(0).text == "Level 1 question about notice?");
    CHECK(states.at(2).final_question(0).text ==
          "Level 2 question about notice and audit?");

    // only one run happened: 2 questions x 3 iterations x 5 roles
    CHECK(mock.call_count() == 2 * 3 * 5);

    // degenerate sweep equals a plain run
    test::TempDir tmp2;
    MockBackend mock2(load_mock_rules_json(kLevelScript));
    CachedBackend cached2(mock2, tmp2.path() / "run" / "cache");
    const AgentSet agents2 = make_agent_set(config, cached2);
    const auto single = sweep_iterations(config, context, agents2, {3}, tmp2.path() / "run");
    REQUIRE(single.size() == 1);
    CHECK(single.at(3).trajectories[0].size() == 3);
}

TEST_CASE("plateau stop ends a flat trajectory early when enabled") {
    test::TempDir tmp;
    MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));
    CachedBackend cached(mock, tmp.path() / "cache");
    RunConfig config = test::mock_run_config(1, 8);
    config.plateau_stop = true;  // constant 0.5 scores plateau after 3 steps
    const AgentSet agents = make_agent_set(config, cached);

    const OptimizeOutcome outcome = optimize_question(
        test::fixture_contract(), placeholder_question(0), agents, config);
    CHECK(outcome.plateau_stopped);
    CHECK(outcome.steps.size() == 3);

    // off by default: the same script runs all 8 iterations
    config.plateau_stop = false;
    MockBackend mock2(load_mock_rules_file(test::data_dir() / "trace_script.json"));
    const AgentSet agents2 = make_agent_set(config, mock2);
    const OptimizeOutcome full = optimize_question(
        test::fixture_contract(), placeholder_question(0), agents2, config);
    CHECK(full.steps.size() == 8);
}

TEST_CASE("feedback parse failure skips revision and carries the question forward") {
    MockBackend mock(load_mock_rules_json(R"({"rules": [
        {"model": "mock-strong", "response": "Expert answer."},
        {"model": "mock-weak", "response": "Weak answer."},
        {"model": "mock-feedback", "response": "no usable number"}
    ]})"));
    const RunConfig config = test::mock_run_config(1, 2);
    const AgentSet agents = make_agent_set(config, mock);

    const OptimizeOutcome outcome = optimize_question(
        test::fixture_contract(), placeholder_question(0), agents, config);

    REQUIRE(outcome.steps.size() == 2);  // trajectory length is preserved
    for (const auto& step : outcome.steps) {
        CHECK(step.feedback.parse_status == ParseStatus::failed);
        CHECK(step.question_after.text == step.question_before.text);
        CHECK(step.gradient.text.empty());
    }
    // guide and revise were never consulted
    CHECK(count_roles(mock.trace()).guide == 0);
    CHECK(count_roles(mock.trace()).revise == 0);
    // two feedback calls per iteration: the original and the format re-ask
    CHECK(count_roles(mock.trace()).feedback == 4);
}

TEST_CASE("a backend failure on one question leaves the others untouched") {
    test::TempDir tmp;
    MockBackend mock(load_mock_rules_json(R"({"rules": [
        {"model": "mock-strong", "response": "Expert answer."},
        {"model": "mock-weak", "response": "Weak answer."},
        {"model": "mock-feedback", "response": "Score: 0.5. Missing."},
        {"model": "mock-guide", "response": "Deepen the notice angle."},
        {"model": "mock-revise", "response": "Ask about notice interplay?"}
    ]})"));
    CachedBackend cached(mock, tmp.path() / "cache");
    RunConfig config = test::mock_run_config(3, 1, 0);

    // sequential workers: q0 takes calls 1-5, q1 takes 6-10, q2 dies mid-step
    FailAfter flaky(cached, 11);
    const AgentSet agents_flaky = make_agent_set(config, flaky);

    const RunState state =
        run(config, test::fixture_contract(), agents_flaky, tmp.path() / "run");

    CHECK(state.trajectories[0].size() == 1);
    CHECK(state.trajectories[1].size() == 1);
    CHECK(state.trajectories[2].size() == 0);
    CHECK(state.aborted[2] == 1);
    CHECK(state.aborted[0] == 0);
    CHECK(state.completed_count() == 2);
    CHECK(state.status == RunStatus::failed);  // not all questions finished
}

TEST_CASE("global stop request checkpoints between steps") {
    test::TempDir tmp;
    MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));
    CachedBackend cached(mock, tmp.path() / "run" / "cache");
    const RunConfig config = test::mock_run_config(1, 3);
    const AgentSet agents = make_agent_set(config, cached);

    request_global_stop();
    const RunState stopped = run(config, test::fixture_contract(), agents, tmp.path() / "run");
    clear_global_stop();
    CHECK(stopped.completed_count() == 0);
    CHECK(mock.call_count() == 0);

    // the same run dir resumes to completion once the stop is cleared
    const RunState resumed = resume(tmp.path() / "run", cached);
    CHECK(resumed.status == RunStatus::complete);
    CHECK(resumed.trajectories[0].size() == 3);
}

TEST_CASE("minimal run: one question, one iteration") {
    test::TempDir tmp;
    MockBackend mock(load_mock_rules_file(test::data_dir() / "trace_script.json"));
    CachedBackend cached(mock, tmp.path() / "run" / "cache");
    const RunConfig config = test::mock_run_config(1, 1);
    const AgentSet agents = make_agent_set(config, cached);

    const RunState state =
        run(config, test::fixture_contract(), agents, tmp.path() / "run");
    CHECK(state.status == RunStatus::complete);
    REQUIRE(state.trajectories.size() == 1);
    CHECK(state.trajectories[0].size() == 1);
    CHECK(mock.call_count() == 5);
}
