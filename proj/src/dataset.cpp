#include "advqa/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "advqa/parallel.hpp"

namespace advqa {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<std::string> normalized_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(
                static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::set<std::string> shingles(const std::vector<std::string>& words) {
    std::set<std::string> out;
    if (words.size() < 3) return out;
    for (std::size_t i = 0; i + 3 <= words.size(); ++i) {
        out.insert(words[i] + '\x1f' + words[i + 1] + '\x1f' + words[i + 2]);
    }
    return out;
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

double record_score(const std::vector<TrajectoryStep>& steps) {
    // Last observed loss; the final question itself is never scored.
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
        if (it->feedback.parse_status != ParseStatus::failed) {
            return it->feedback.score;
        }
    }
    return 0.0;
}

}  // namespace

double shingle_similarity(std::string_view a, std::string_view b) {
    const auto words_a = normalized_words(a);
    const auto words_b = normalized_words(b);
    const auto set_a = shingles(words_a);
    const auto set_b = shingles(words_b);
    if (set_a.empty() || set_b.empty()) {
        return join_words(words_a) == join_words(words_b) ? 1.0 : 0.0;
    }
    std::size_t intersection = 0;
    for (const auto& s : set_a) {
        if (set_b.count(s) > 0) ++intersection;
    }
    const std::size_t unions = set_a.size() + set_b.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

SyntheticDataset build_dataset(const RunState& state, const AgentSet& agents,
                               const BuildOptions& options, EventLog* log) {
    if (state.status != RunStatus::complete && !options.allow_partial) {
        throw std::invalid_argument(
            "build_dataset requires a complete run (or allow_partial)");
    }

    SyntheticDataset dataset;
    dataset.context_id = state.context.id;
    dataset.run_id = state.run_id();

    std::vector<int> ready;
    for (int i = 0; i < state.config.n_questions; ++i) {
        if (state.trajectory_complete(i)) ready.push_back(i);
    }

    std::vector<std::optional<QARecord>> finals(ready.size());
    std::vector<TokenUsage> usages(ready.size());
    std::mutex log_mutex;

    parallel_for(static_cast<int>(ready.size()), options.concurrency, [&](int k) {
        const int i = ready[static_cast<std::size_t>(k)];
        const auto& steps = state.trajectories[static_cast<std::size_t>(i)];
        const Question final_q = state.final_question(i);
        try {
            const Answer expert = answer_question(
                agents, AnswerRole::strong, state.context, final_q,
                derive_request_seed(state.config.seed, i, final_q.iteration));
            QARecord record;
            record.question = final_q;
            record.answer = expert.text;
            record.context_id = state.context.id;
            record.final_score = record_score(steps);
            finals[static_cast<std::size_t>(k)] = std::move(record);
            usages[static_cast<std::size_t>(k)] = expert.usage;
        } catch (const BackendError& e) {
            std::lock_guard<std::mutex> lock(log_mutex);
            if (log != nullptr) {
                log->warn("dataset_record_failed",
                          "question " + std::to_string(i) + ": " + e.what());
            }
        }
    });

    std::vector<QARecord> candidates;
    for (std::size_t k = 0; k < finals.size(); ++k) {
        if (finals[k].has_value()) {
            candidates.push_back(std::move(*finals[k]));
            dataset.token_total += usages[k];
        }
    }

    if (options.include_intermediate) {
        for (int i : ready) {
            const auto& steps = state.trajectories[static_cast<std::size_t>(i)];
            for (const auto& step : steps) {
                QARecord record;
                record.question = step.question_before;
                record.answer = step.answer_strong.text;
                record.context_id = state.context.id;
                record.final_score = step.feedback.parse_status != ParseStatus::failed
                                         ? step.feedback.score
                                         : 0.0;
                candidates.push_back(std::move(record));
                dataset.token_total += step.answer_strong.usage;
            }
        }
    }

    std::sort(candidates.begin(), candidates.end(),
              [](const QARecord& a, const QARecord& b) {
                  if (a.question.question_index != b.question.question_index) {
                      return a.question.question_index < b.question.question_index;
                  }
                  return a.question.iteration < b.question.iteration;
              });

    for (auto& candidate : candidates) {
        if (options.min_score.has_value() &&
            candidate.final_score < *options.min_score) {
            continue;
        }
        bool duplicate = false;
        for (const auto& kept : dataset.records) {
            if (shingle_similarity(kept.question.text, candidate.question.text) >=
                options.dedup_threshold) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) {
            if (log != nullptr) {
                log->info("dedup_dropped",
                          "question " + std::to_string(candidate.question.question_index) +
                              " iteration " +
                              std::to_string(candidate.question.iteration) +
                              " near-duplicates an earlier record");
            }
            continue;
        }
        dataset.records.push_back(std::move(candidate));
    }

    return dataset;
}

ExportFormat export_format_from_string(std::string_view name) {
    if (name == "jsonl_qa") return ExportFormat::jsonl_qa;
    if (name == "jsonl_chat") return ExportFormat::jsonl_chat;
    throw std::invalid_argument("unknown export format '" + std::string(name) +
                                "' (expected jsonl_qa or jsonl_chat)");
}

std::string_view to_string(ExportFormat format) {
    return format == ExportFormat::jsonl_qa ? "jsonl_qa" : "jsonl_chat";
}

void export_dataset(const SyntheticDataset& dataset, ExportFormat format,
                    const fs::path& path) {
    if (dataset.records.empty()) {
        throw ExportError("refusing to export an empty dataset");
    }

    std::vector<const QARecord*> ordered;
    ordered.reserve(dataset.records.size());
    for (const auto& r : dataset.records) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const QARecord* a, const QARecord* b) {
                         if (a->question.question_index != b->question.question_index) {
                             return a->question.question_index <
                                    b->question.question_index;
                         }
                         return a->question.iteration < b->question.iteration;
                     });

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ExportError("cannot open " + path.string() + " for writing");

    for (const QARecord* record : ordered) {
        ordered_json line;
        if (format == ExportFormat::jsonl_qa) {
            line["question"] = record->question.text;
            line["answer"] = record->answer;
            line["context_id"] = record->context_id;
            line["final_score"] = record->final_score;
        } else {
            line["messages"] =
                ordered_json::array({{{"role", "user"}, {"content", record->question.text}},
                                     {{"role", "assistant"}, {"content", record->answer}}});
        }
        out << line.dump() << '\n';
        if (!out) throw ExportError("write failure on " + path.string());
    }
}

SyntheticDataset import_dataset(ExportFormat format, const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ExportError("cannot open " + path.string());

    SyntheticDataset dataset;
    std::string line;
    int index = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded()) {
            throw ExportError(path.string() + ": invalid JSON on line " +
                              std::to_string(index + 1));
        }
        QARecord record;
        record.question.question_index = index;
        record.question.iteration = 0;
        if (format == ExportFormat::jsonl_qa) {
            record.question.text = doc.at("question").get<std::string>();
            record.answer = doc.at("answer").get<std::string>();
            record.context_id = doc.at("context_id").get<std::string>();
            record.final_score = doc.at("final_score").get<double>();
        } else {
            const auto& messages = doc.at("messages");
            if (!messages.is_array() || messages.size() != 2 ||
                messages[0].at("role") != "user" ||
                messages[1].at("role") != "assistant") {
                throw ExportError(path.string() + ": line " + std::to_string(index + 1) +
                                  " is not a user/assistant pair");
            }
            record.question.text = messages[0].at("content").get<std::string>();
            record.answer = messages[1].at("content").get<std::string>();
        }
        dataset.records.push_back(std::move(record));
        ++index;
    }
    if (!dataset.records.empty()) {
        dataset.context_id = dataset.records.front().context_id;
    }
    return dataset;
}

}  // namespace advqa
