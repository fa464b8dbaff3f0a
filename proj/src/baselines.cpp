#include "advqa/baselines.hpp"

#include <cctype>
#include <mutex>
#include <optional>

#include "advqa/parallel.hpp"

namespace advqa {

namespace {

std::string trim_copy(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> ChunkPlan::chunks(
    std::string_view text) const {
    if (chunk_size_chars < 1) {
        throw std::invalid_argument("chunk_size_chars must be >= 1");
    }
    if (overlap_chars < 0 || overlap_chars >= chunk_size_chars) {
        throw std::invalid_argument("overlap_chars must lie in [0, chunk_size_chars)");
    }
    const std::size_t len = text.size();
    const std::size_t size = static_cast<std::size_t>(chunk_size_chars);
    const std::size_t step = static_cast<std::size_t>(chunk_size_chars - overlap_chars);

    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t start = 0;
    while (start + size < len) {
        out.emplace_back(start, start + size);
        start += step;
    }
    out.emplace_back(start, len);
    return out;
}

SyntheticDataset generate_paraphrases(const DocumentContext& context,
                                      const AgentSet& agents, int k,
                                      const ChunkPlan& plan, std::int64_t seed,
                                      int concurrency, EventLog* log) {
    if (k < 1) throw std::invalid_argument("paraphrase count k must be >= 1");

    const auto chunk_offsets = plan.chunks(context.text);
    const int n_chunks = static_cast<int>(chunk_offsets.size());

    SyntheticDataset dataset;
    dataset.context_id = context.id;
    dataset.run_id = "baseline-paraphrase";

    std::vector<std::vector<QARecord>> per_chunk(chunk_offsets.size());
    std::vector<TokenUsage> per_chunk_usage(chunk_offsets.size());
    std::mutex log_mutex;

    parallel_for(n_chunks, concurrency, [&](int ci) {
        const auto [begin, end] = chunk_offsets[static_cast<std::size_t>(ci)];
        const std::string passage(context.text.substr(begin, end - begin));
        std::vector<QARecord> records;
        TokenUsage usage;
        try {
            for (int j = 1; j <= k; ++j) {
                const std::string user =
                    "Rewrite the following contract passage in your own words, "
                    "keeping every substantive detail. This is variation " +
                    std::to_string(j) + " of " + std::to_string(k) +
                    "; make it clearly distinct from the other variations.\n\n"
                    "Passage:\n" +
                    passage;
                const CompletionResult reply =
                    complete_role_user(agents, RoleName::strong, user,
                                       derive_request_seed(seed, ci, j), &usage);

                QARecord record;
                record.question.question_index = ci * k + (j - 1);
                record.question.iteration = 0;
                record.question.text =
                    "Restate, in your own words, the passage of contract " +
                    context.id + " spanning characters " + std::to_string(begin) +
                    "-" + std::to_string(end) + " (variation " + std::to_string(j) +
                    " of " + std::to_string(k) + ").";
                record.answer = reply.text;
                record.context_id = context.id;
                record.final_score = 0.0;
                records.push_back(std::move(record));
            }
            per_chunk[static_cast<std::size_t>(ci)] = std::move(records);
            per_chunk_usage[static_cast<std::size_t>(ci)] = usage;
        } catch (const BackendError& e) {
            std::lock_guard<std::mutex> lock(log_mutex);
            if (log != nullptr) {
                log->warn("paraphrase_chunk_skipped",
                          "chunk " + std::to_string(ci) + ": " + e.what());
            }
        }
    });

    for (std::size_t ci = 0; ci < per_chunk.size(); ++ci) {
        for (auto& record : per_chunk[ci]) {
            dataset.records.push_back(std::move(record));
        }
        dataset.token_total += per_chunk_usage[ci];
    }
    return dataset;
}

std::vector<std::string> parse_question_list(std::string_view reply) {
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= reply.size()) {
        std::size_t eol = reply.find('\n', pos);
        if (eol == std::string_view::npos) eol = reply.size();
        std::string line = trim_copy(reply.substr(pos, eol - pos));
        pos = eol + 1;
        if (line.empty()) continue;

        std::size_t body = std::string::npos;
        if (line[0] == '-' || line[0] == '*') {
            body = 1;
        } else if (std::isdigit(static_cast<unsigned char>(line[0]))) {
            std::size_t d = 0;
            while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) {
                ++d;
            }
            if (d < line.size() && (line[d] == '.' || line[d] == ')')) body = d + 1;
        }
        if (body == std::string::npos) continue;
        std::string item = trim_copy(std::string_view(line).substr(body));
        if (!item.empty()) items.push_back(std::move(item));
    }
    return items;
}

SyntheticDataset generate_uninformed_qa(const DocumentContext& context,
                                        const AgentSet& agents, int n,
                                        std::int64_t seed, int concurrency,
                                        EventLog* log) {
    if (n < 1) throw std::invalid_argument("question count n must be >= 1");

    SyntheticDataset dataset;
    dataset.context_id = context.id;
    dataset.run_id = "baseline-uninformed-qa";

    const std::string shell =
        "Write " + std::to_string(n) +
        " challenging questions about the following contract. The questions "
        "should demand careful interpretation of the contract's specific "
        "provisions, not bare recall. Reply with a numbered list, one question "
        "per line.\n\nContract:\n";
    const std::string contract = fit_contract_for_role(
        agents, RoleName::strong, context.text,
        static_cast<std::int64_t>(shell.size() +
                                  agents.strong.system_prompt.size()));

    const CompletionResult listing =
        complete_role_user(agents, RoleName::strong, shell + contract,
                           derive_request_seed(seed, 0, 0), &dataset.token_total);

    std::vector<std::string> questions = parse_question_list(listing.text);
    if (static_cast<int>(questions.size()) < n && log != nullptr) {
        log->warn("uninformed_qa_undergenerated",
                  "asked for " + std::to_string(n) + " questions, parsed " +
                      std::to_string(questions.size()));
    }
    if (static_cast<int>(questions.size()) > n) {
        questions.resize(static_cast<std::size_t>(n));
    }

    std::vector<std::optional<QARecord>> slots(questions.size());
    std::vector<TokenUsage> usages(questions.size());
    std::mutex log_mutex;

    parallel_for(static_cast<int>(questions.size()), concurrency, [&](int qi) {
        Question question;
        question.question_index = qi;
        question.iteration = 0;
        question.text = questions[static_cast<std::size_t>(qi)];
        try {
            const Answer expert =
                answer_question(agents, AnswerRole::strong, context, question,
                                derive_request_seed(seed, qi, 1));
            QARecord record;
            record.question = std::move(question);
            record.answer = expert.text;
            record.context_id = context.id;
            record.final_score = 0.0;
            slots[static_cast<std::size_t>(qi)] = std::move(record);
            usages[static_cast<std::size_t>(qi)] = expert.usage;
        } catch (const BackendError& e) {
            std::lock_guard<std::mutex> lock(log_mutex);
            if (log != nullptr) {
                log->warn("uninformed_qa_record_failed",
                          "question " + std::to_string(qi) + ": " + e.what());
            }
        }
    });

    for (std::size_t qi = 0; qi < slots.size(); ++qi) {
        if (slots[qi].has_value()) {
            dataset.records.push_back(std::move(*slots[qi]));
            dataset.token_total += usages[qi];
        }
    }
    return dataset;
}

}  // namespace advqa
