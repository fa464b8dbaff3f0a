#include "advqa/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "advqa/parallel.hpp"

namespace advqa {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
        const std::size_t tab = line.find('\t', pos);
        if (tab == std::string::npos) {
            cells.push_back(line.substr(pos));
            break;
        }
        cells.push_back(line.substr(pos, tab - pos));
        pos = tab + 1;
    }
    return cells;
}

std::string fmt(const char* format, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, value);
    return buf;
}

std::string humanize_tokens(std::int64_t tokens) {
    if (tokens >= 1000000) return fmt("%.1fM", static_cast<double>(tokens) / 1e6);
    if (tokens >= 1000) {
        return std::to_string((tokens + 500) / 1000) + "k";
    }
    return std::to_string(tokens);
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

struct TaskFile {
    std::vector<std::pair<std::string, std::string>> rows;
};

TaskFile read_tsv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(path.string() + ": cannot open");

    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) {
        throw SchemaError(path.string() + ":1: empty file, expected a header row");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_tabs(line);
    int text_col = -1;
    int answer_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "text") text_col = static_cast<int>(i);
        if (header[i] == "answer") answer_col = static_cast<int>(i);
    }
    if (text_col < 0) {
        throw SchemaError(path.string() + ":1: missing 'text' column");
    }
    if (answer_col < 0) {
        throw SchemaError(path.string() + ":1: missing 'answer' column");
    }

    TaskFile task;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_tabs(line);
        if (cells.size() != header.size()) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                              ": expected " + std::to_string(header.size()) +
                              " columns, found " + std::to_string(cells.size()));
        }
        const std::string& answer = cells[static_cast<std::size_t>(answer_col)];
        if (answer.empty()) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                              ": empty gold answer");
        }
        task.rows.emplace_back(cells[static_cast<std::size_t>(text_col)], answer);
    }
    return task;
}

}  // namespace

std::string normalize_answer(std::string_view text, Normalization normalization) {
    if (normalization == Normalization::exact) return std::string(text);
    std::size_t b = 0, e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    std::string out;
    out.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) {
        out.push_back(
            static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    }
    return out;
}

std::vector<EvalTask> load_tasks(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw SchemaError(dir.string() + ": not a directory");
    }

    std::vector<fs::path> tsv_files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".tsv") tsv_files.push_back(entry.path());
    }
    std::sort(tsv_files.begin(), tsv_files.end());

    std::vector<EvalTask> tasks;
    for (const auto& tsv_path : tsv_files) {
        fs::path meta_path = tsv_path;
        meta_path.replace_extension(".json");
        if (!fs::exists(meta_path)) {
            throw SchemaError(tsv_path.string() + ": missing metadata file " +
                              meta_path.filename().string());
        }

        std::ifstream meta_in(meta_path, std::ios::binary);
        std::ostringstream meta_buf;
        meta_buf << meta_in.rdbuf();
        auto meta = nlohmann::json::parse(meta_buf.str(), nullptr, false);
        if (meta.is_discarded() || !meta.is_object()) {
            throw SchemaError(meta_path.string() + ": not valid JSON");
        }
        if (!meta.contains("instruction") || !meta["instruction"].is_string()) {
            throw SchemaError(meta_path.string() + ": missing string 'instruction'");
        }

        EvalTask task;
        task.task_id = tsv_path.stem().string();
        task.instruction = meta["instruction"].get<std::string>();

        const std::string norm = meta.value("normalization", "lowercase_strip");
        if (norm == "lowercase_strip") {
            task.answer_normalization = Normalization::lowercase_strip;
        } else if (norm == "exact") {
            task.answer_normalization = Normalization::exact;
        } else {
            throw SchemaError(meta_path.string() + ": unknown normalization '" +
                              norm + "'");
        }

        std::set<std::size_t> demo_indices;
        if (meta.contains("few_shot_indices")) {
            if (!meta["few_shot_indices"].is_array()) {
                throw SchemaError(meta_path.string() +
                                  ": few_shot_indices must be an array");
            }
            for (const auto& v : meta["few_shot_indices"]) {
                if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
                    throw SchemaError(meta_path.string() +
                                      ": few_shot_indices must be nonnegative integers");
                }
                demo_indices.insert(static_cast<std::size_t>(v.get<std::int64_t>()));
            }
        }

        const TaskFile file = read_tsv(tsv_path);
        for (std::size_t idx : demo_indices) {
            if (idx >= file.rows.size()) {
                throw SchemaError(meta_path.string() + ": few-shot index " +
                                  std::to_string(idx) + " out of range (" +
                                  std::to_string(file.rows.size()) + " rows)");
            }
        }
        for (std::size_t i = 0; i < file.rows.size(); ++i) {
            if (demo_indices.count(i) > 0) {
                task.examples.push_back(file.rows[i]);
            } else {
                task.instances.push_back(file.rows[i]);
            }
        }
        if (task.instances.empty()) {
            throw SchemaError(tsv_path.string() + ": no instances left after demos");
        }
        tasks.push_back(std::move(task));
    }
    return tasks;
}

EvalReport evaluate(const std::vector<EvalTask>& tasks, const BackendBinding& binding,
                    Backend& backend, const EvalOptions& options, EventLog* log) {
    if (tasks.empty()) throw std::invalid_argument("evaluate requires tasks");

    BackendBinding eval_binding = binding;
    eval_binding.temperature = 0.0;

    struct Job {
        std::size_t task;
        std::size_t instance;
    };
    std::vector<Job> jobs;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        for (std::size_t i = 0; i < tasks[t].instances.size(); ++i) {
            jobs.push_back({t, i});
        }
    }

    std::vector<std::uint8_t> correct(jobs.size(), 0);
    std::vector<TokenUsage> usages(jobs.size());
    std::mutex error_mutex;
    std::string first_error;

    parallel_for(static_cast<int>(jobs.size()), options.concurrency, [&](int k) {
        const Job& job = jobs[static_cast<std::size_t>(k)];
        const EvalTask& task = tasks[job.task];
        const auto& [input, gold] = task.instances[job.instance];

        std::string user;
        for (const auto& [demo_input, demo_gold] : task.examples) {
            user += demo_input + "\nAnswer: " + demo_gold + "\n\n";
        }
        user += input + "\nAnswer:";

        try {
            const CompletionResult reply = backend.complete(
                eval_binding, {{MessageRole::system, task.instruction},
                               {MessageRole::user, user}});
            usages[static_cast<std::size_t>(k)] = reply.usage;
            const bool hit =
                normalize_answer(reply.text, task.answer_normalization) ==
                normalize_answer(gold, task.answer_normalization);
            correct[static_cast<std::size_t>(k)] = hit ? 1 : 0;
        } catch (const BackendError& e) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (first_error.empty()) first_error = e.what();
            if (log != nullptr) {
                log->warn("eval_instance_failed",
                          task.task_id + "#" + std::to_string(job.instance) + ": " +
                              e.what());
            }
        }
    });

    if (options.strict && !first_error.empty()) {
        throw std::runtime_error("evaluation failed (strict mode): " + first_error);
    }

    EvalReport report;
    report.model_id = eval_binding.model_name;
    std::int64_t total_correct = 0;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        TaskScore& score = report.per_task[tasks[jobs[k].task].task_id];
        score.n_total += 1;
        score.n_correct += correct[k];
        total_correct += correct[k];
        report.token_usage += usages[k];
    }
    for (auto& [id, score] : report.per_task) {
        score.accuracy = score.n_total > 0
                             ? static_cast<double>(score.n_correct) /
                                   static_cast<double>(score.n_total)
                             : 0.0;
    }
    report.overall_accuracy = jobs.empty()
                                  ? 0.0
                                  : static_cast<double>(total_correct) /
                                        static_cast<double>(jobs.size());
    return report;
}

ComparisonTable compare_runs(const std::vector<EvalReport>& reports,
                             const std::vector<TokenUsage>& budgets) {
    if (reports.empty()) throw std::invalid_argument("compare_runs requires reports");
    if (budgets.size() != reports.size()) {
        throw std::invalid_argument("compare_runs: one budget per report required");
    }

    std::set<std::string> subset_set;
    for (const auto& report : reports) {
        for (const auto& [id, score] : report.per_task) subset_set.insert(id);
    }
    const std::vector<std::string> subsets(subset_set.begin(), subset_set.end());

    struct Row {
        std::string label;
        std::int64_t tokens;
        std::vector<double> accuracies;  // -1 marks a missing subset
        double avg;
    };
    std::vector<Row> rows;
    for (std::size_t r = 0; r < reports.size(); ++r) {
        Row row;
        row.label = reports[r].model_id;
        row.tokens = budgets[r].total();
        for (const auto& subset : subsets) {
            const auto it = reports[r].per_task.find(subset);
            row.accuracies.push_back(it == reports[r].per_task.end()
                                         ? -1.0
                                         : it->second.accuracy * 100.0);
        }
        row.avg = reports[r].overall_accuracy * 100.0;
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.avg > b.avg; });

    const double baseline = rows.back().avg;  // lowest average is the reference

    ComparisonTable table;
    std::string csv = "label,tokens";
    for (const auto& subset : subsets) csv += "," + csv_escape(subset);
    csv += ",avg,rel_gain_pct\n";

    std::ostringstream text;
    text << "method";
    text << "\ttokens";
    for (const auto& subset : subsets) text << '\t' << subset;
    text << "\tavg\trel_gain\n";

    for (const auto& row : rows) {
        const double rel =
            baseline > 0.0 ? (row.avg - baseline) / baseline * 100.0 : 0.0;

        csv += csv_escape(row.label) + "," + std::to_string(row.tokens);
        for (double acc : row.accuracies) {
            csv += acc < 0.0 ? "," : "," + fmt("%.1f", acc);
        }
        csv += "," + fmt("%.1f", row.avg) + "," + fmt("%.2f", rel) + "\n";

        text << row.label << '\t' << humanize_tokens(row.tokens);
        for (double acc : row.accuracies) {
            text << '\t' << (acc < 0.0 ? std::string("-") : fmt("%.1f", acc));
        }
        text << '\t' << fmt("%.1f", row.avg) << '\t' << fmt("%.2f%%", rel) << '\n';
    }

    table.csv = std::move(csv);
    table.text = text.str();
    return table;
}

}  // namespace advqa
