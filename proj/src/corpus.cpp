#include "ptm/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>

#include "ptm/csv.hpp"
#include "ptm/timeparse.hpp"

namespace ptm {

namespace {

namespace fs = std::filesystem;

int parse_int_field(const std::string& value, std::size_t row, const std::string& column,
                    int min_value) {
    int out = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || p != value.data() + value.size())
        throw SchemaError(row, column, "not an integer: '" + value + "'");
    if (out < min_value)
        throw SchemaError(row, column, "value " + value + " below minimum " + std::to_string(min_value));
    return out;
}

void check_header(const std::vector<std::string>& got, const std::vector<std::string>& want,
                  const std::string& file) {
    if (got != want) {
        std::string expect;
        for (const auto& w : want) {
            if (!expect.empty()) expect += ",";
            expect += w;
        }
        throw SchemaError(1, file, "expected header: " + expect);
    }
}

std::vector<std::string> split_semicolons(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t sep = s.find(';', start);
        if (sep == std::string::npos) {
            if (start < s.size()) out.push_back(s.substr(start));
            break;
        }
        if (sep > start) out.push_back(s.substr(start, sep - start));
        start = sep + 1;
    }
    return out;
}

std::map<std::string, TaskSpec> load_tasks(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile(path);
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw SchemaError(1, "tasks.csv", "empty file");
    check_header(fields, {"task_id", "ordinal", "concepts", "prompt_text"}, "tasks.csv");

    std::map<std::string, TaskSpec> tasks;
    while (reader.next(fields)) {
        std::size_t row = reader.line();
        if (fields.size() != 4)
            throw SchemaError(row, "tasks.csv", "expected 4 fields, got " + std::to_string(fields.size()));
        TaskSpec t;
        t.task_id = fields[0];
        if (t.task_id.empty()) throw SchemaError(row, "task_id", "empty");
        if (!fields[1].empty()) t.ordinal = parse_int_field(fields[1], row, "ordinal", 0);
        t.raw_concepts = split_semicolons(fields[2]);
        t.prompt_text = fields[3];
        if (t.prompt_text.empty()) throw SchemaError(row, "prompt_text", "empty");
        if (tasks.count(t.task_id))
            throw SchemaError(row, "task_id", "duplicate task id: " + t.task_id);
        tasks.emplace(t.task_id, std::move(t));
    }
    return tasks;
}

std::vector<SubmissionEvent> load_events(const std::string& path,
                                         const std::map<std::string, TaskSpec>& tasks) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile(path);
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw SchemaError(1, "events.csv", "empty file");
    check_header(fields,
                 {"student_id", "task_id", "attempt_index", "timestamp", "tests_passed",
                  "tests_total", "source_code"},
                 "events.csv");

    std::vector<SubmissionEvent> events;
    while (reader.next(fields)) {
        std::size_t row = reader.line();
        if (fields.size() != 7)
            throw SchemaError(row, "events.csv", "expected 7 fields, got " + std::to_string(fields.size()));
        SubmissionEvent e;
        e.student_id = fields[0];
        if (e.student_id.empty()) throw SchemaError(row, "student_id", "empty");
        e.task_id = fields[1];
        if (!tasks.count(e.task_id))
            throw SchemaError(row, "task_id", "unknown task id: " + e.task_id);
        e.attempt_index = parse_int_field(fields[2], row, "attempt_index", 1);
        auto ts = parse_iso8601_utc(fields[3]);
        if (!ts) throw SchemaError(row, "timestamp", "not ISO-8601 UTC: '" + fields[3] + "'");
        e.timestamp = *ts;
        e.tests_passed = parse_int_field(fields[4], row, "tests_passed", 0);
        e.tests_total = parse_int_field(fields[5], row, "tests_total", 1);
        if (e.tests_passed > e.tests_total)
            throw SchemaError(row, "tests_passed",
                              "tests_passed " + fields[4] + " exceeds tests_total " + fields[5]);
        e.source_code = fields[6];
        events.push_back(std::move(e));
    }
    return events;
}

void sort_canonical(std::vector<SubmissionEvent>& events) {
    std::sort(events.begin(), events.end(), [](const SubmissionEvent& a, const SubmissionEvent& b) {
        if (a.student_id != b.student_id) return a.student_id < b.student_id;
        if (a.task_id != b.task_id) return a.task_id < b.task_id;
        return a.attempt_index < b.attempt_index;
    });
}

// Attempt indices per pair must be contiguous 1..T with strictly
// increasing timestamps; expects canonical event order.
void check_pair_invariants(const std::vector<SubmissionEvent>& events) {
    std::size_t i = 0;
    while (i < events.size()) {
        std::size_t j = i;
        while (j < events.size() && events[j].student_id == events[i].student_id &&
               events[j].task_id == events[i].task_id)
            ++j;
        for (std::size_t k = i; k < j; ++k) {
            int expect = static_cast<int>(k - i) + 1;
            if (events[k].attempt_index != expect) {
                if (k > i && events[k].attempt_index == events[k - 1].attempt_index)
                    throw DuplicateAttempt(events[k].student_id, events[k].task_id,
                                           events[k].attempt_index);
                throw SchemaError(0, "attempt_index",
                                  "attempts for student " + events[k].student_id + ", task " +
                                      events[k].task_id + " are not contiguous from 1 (found " +
                                      std::to_string(events[k].attempt_index) + ", expected " +
                                      std::to_string(expect) + ")");
            }
            if (k > i && events[k].timestamp <= events[k - 1].timestamp)
                throw SchemaError(0, "timestamp",
                                  "timestamps for student " + events[k].student_id + ", task " +
                                      events[k].task_id + " are not strictly increasing");
        }
        i = j;
    }
}

}  // namespace

Corpus load_corpus(const std::string& dir) {
    Corpus c;
    c.tasks = load_tasks((fs::path(dir) / "tasks.csv").string());
    c.events = load_events((fs::path(dir) / "events.csv").string(), c.tasks);
    sort_canonical(c.events);
    check_pair_invariants(c.events);
    for (const auto& e : c.events) c.students.insert(e.student_id);
    return c;
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "tasks.csv", std::ios::binary);
        write_csv_row(out, {"task_id", "ordinal", "concepts", "prompt_text"});
        for (const auto& [id, t] : corpus.tasks) {
            std::string concepts;
            for (const auto& r : t.raw_concepts) {
                if (!concepts.empty()) concepts += ";";
                concepts += r;
            }
            write_csv_row(out, {id, t.ordinal ? std::to_string(*t.ordinal) : std::string(),
                                concepts, t.prompt_text});
        }
    }
    {
        std::ofstream out(fs::path(dir) / "events.csv", std::ios::binary);
        write_csv_row(out, {"student_id", "task_id", "attempt_index", "timestamp", "tests_passed",
                            "tests_total", "source_code"});
        std::vector<SubmissionEvent> sorted = corpus.events;
        sort_canonical(sorted);
        for (const auto& e : sorted) {
            write_csv_row(out, {e.student_id, e.task_id, std::to_string(e.attempt_index),
                                format_iso8601_utc(e.timestamp), std::to_string(e.tests_passed),
                                std::to_string(e.tests_total), e.source_code});
        }
    }
}

std::map<PairKey, std::vector<SubmissionEvent>> group_events(const Corpus& corpus) {
    std::map<PairKey, std::vector<SubmissionEvent>> out;
    for (const auto& e : corpus.events) out[{e.student_id, e.task_id}].push_back(e);
    for (auto& [key, events] : out) {
        std::sort(events.begin(), events.end(),
                  [](const SubmissionEvent& a, const SubmissionEvent& b) {
                      return a.attempt_index < b.attempt_index;
                  });
    }
    return out;
}

StudentHistory build_history(const Corpus& corpus, const std::string& student_id) {
    if (!corpus.students.count(student_id)) throw UnknownStudent(student_id);
    StudentHistory h;
    h.student_id = student_id;
    std::map<std::string, std::vector<SubmissionEvent>> by_task;
    for (const auto& e : corpus.events) {
        if (e.student_id == student_id) by_task[e.task_id].push_back(e);
    }
    for (auto& [task_id, events] : by_task) {
        std::sort(events.begin(), events.end(),
                  [](const SubmissionEvent& a, const SubmissionEvent& b) {
                      return a.attempt_index < b.attempt_index;
                  });
        StudentHistory::Entry entry;
        entry.task = corpus.tasks.at(task_id);
        entry.events = std::move(events);
        h.entries.push_back(std::move(entry));
    }
    std::sort(h.entries.begin(), h.entries.end(),
              [](const StudentHistory::Entry& a, const StudentHistory::Entry& b) {
                  std::int64_t ta = a.events.front().timestamp;
                  std::int64_t tb = b.events.front().timestamp;
                  if (ta != tb) return ta < tb;
                  return a.task.task_id < b.task.task_id;
              });
    return h;
}

}  // namespace ptm
