#include "ptm/labeling.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "ptm/csv.hpp"

namespace ptm {

namespace {

std::optional<Language> language_from_name(const std::string& name) {
    if (name == "python") return Language::python;
    if (name == "java") return Language::java;
    return std::nullopt;
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Removes comments and string-literal bodies so pattern tokens cannot match
// inside them.
std::string strip_non_code(const std::string& src, Language language) {
    std::string out;
    out.reserve(src.size());
    std::size_t i = 0;
    while (i < src.size()) {
        char c = src[i];
        if (language == Language::python) {
            if (c == '#') {
                while (i < src.size() && src[i] != '\n') ++i;
                continue;
            }
            if (c == '\'' || c == '"') {
                char q = c;
                bool triple = i + 2 < src.size() && src[i + 1] == q && src[i + 2] == q;
                i += triple ? 3 : 1;
                while (i < src.size()) {
                    if (src[i] == '\\') { i += 2; continue; }
                    if (triple) {
                        if (src[i] == q && i + 2 < src.size() && src[i + 1] == q && src[i + 2] == q) {
                            i += 3;
                            break;
                        }
                        ++i;
                    } else {
                        char cur = src[i];
                        ++i;
                        if (cur == q || cur == '\n') break;
                    }
                }
                out.push_back(' ');
                continue;
            }
        } else {
            if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
                while (i < src.size() && src[i] != '\n') ++i;
                continue;
            }
            if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
                i += 2;
                while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) ++i;
                i = std::min(src.size(), i + 2);
                continue;
            }
            if (c == '"' || c == '\'') {
                char q = c;
                ++i;
                while (i < src.size() && src[i] != q && src[i] != '\n') {
                    if (src[i] == '\\') ++i;
                    ++i;
                }
                if (i < src.size()) ++i;
                out.push_back(' ');
                continue;
            }
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

}  // namespace

std::vector<std::string> tokenize_source(const std::string& source_code, Language language) {
    std::string code = strip_non_code(source_code, language);
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < code.size()) {
        char c = code[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (is_ident_char(c)) {
            std::size_t j = i;
            while (j < code.size() && is_ident_char(code[j])) ++j;
            tokens.push_back(code.substr(i, j - i));
            i = j;
        } else {
            tokens.push_back(std::string(1, c));
            ++i;
        }
    }
    return tokens;
}

ConceptMap load_concept_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile(path);
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields) || fields != std::vector<std::string>{"raw_tag", "canonical_tag"})
        throw SchemaError(1, "concept_map", "expected header: raw_tag,canonical_tag");
    ConceptMap map;
    while (reader.next(fields)) {
        if (fields.size() != 2) throw SchemaError(reader.line(), "concept_map", "expected 2 fields");
        auto c = concept_from_name(fields[1]);
        if (!c) throw SchemaError(reader.line(), "canonical_tag", "unknown tag: " + fields[1]);
        map.raw_to_canonical[fields[0]] = *c;
    }
    return map;
}

PatternTable load_pattern_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile(path);
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields) ||
        fields != std::vector<std::string>{"language", "canonical_tag", "pattern"})
        throw SchemaError(1, "concept_patterns", "expected header: language,canonical_tag,pattern");
    PatternTable table;
    while (reader.next(fields)) {
        if (fields.size() != 3)
            throw SchemaError(reader.line(), "concept_patterns", "expected 3 fields");
        auto lang = language_from_name(fields[0]);
        if (!lang) throw SchemaError(reader.line(), "language", "unknown language: " + fields[0]);
        auto c = concept_from_name(fields[1]);
        if (!c) throw SchemaError(reader.line(), "canonical_tag", "unknown tag: " + fields[1]);
        std::vector<std::string> seq;
        std::size_t start = 0;
        const std::string& pat = fields[2];
        while (start < pat.size()) {
            std::size_t sep = pat.find(' ', start);
            if (sep == std::string::npos) sep = pat.size();
            if (sep > start) seq.push_back(pat.substr(start, sep - start));
            start = sep + 1;
        }
        if (seq.empty()) throw SchemaError(reader.line(), "pattern", "empty pattern");
        table.patterns[{*lang, *c}].push_back(std::move(seq));
    }
    return table;
}

ConceptMap default_concept_map() {
    return load_concept_map(std::string(PTM_SOURCE_DATA_DIR) + "/concept_map.csv");
}

PatternTable default_pattern_table() {
    return load_pattern_table(std::string(PTM_SOURCE_DATA_DIR) + "/concept_patterns.csv");
}

TaskOutcome compute_task_outcome(const std::vector<SubmissionEvent>& events) {
    if (events.empty()) throw EmptyInput();
    for (const auto& e : events) {
        if (e.student_id != events.front().student_id || e.task_id != events.front().task_id)
            throw MixedPair();
    }
    const SubmissionEvent* last = &events.front();
    for (const auto& e : events) {
        if (e.attempt_index > last->attempt_index) last = &e;
    }
    TaskOutcome out;
    out.student_id = last->student_id;
    out.task_id = last->task_id;
    out.attempt_count = static_cast<int>(events.size());
    out.final_score = static_cast<double>(last->tests_passed) / static_cast<double>(last->tests_total);
    out.passed_all = last->tests_passed == last->tests_total;
    return out;
}

int attempt_threshold(const std::string& task_id, const Corpus& corpus) {
    std::map<std::string, std::vector<SubmissionEvent>> by_student;
    for (const auto& e : corpus.events) {
        if (e.task_id == task_id) by_student[e.student_id].push_back(e);
    }
    std::vector<int> successful_counts;
    for (auto& [student, events] : by_student) {
        TaskOutcome o = compute_task_outcome(events);
        if (o.passed_all) successful_counts.push_back(o.attempt_count);
    }
    if (successful_counts.empty()) throw NoSuccessfulPeers(task_id);
    std::sort(successful_counts.begin(), successful_counts.end());
    std::size_t n = successful_counts.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(0.75 * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    return successful_counts[rank - 1];
}

StrugglingLabel label_struggling(const TaskOutcome& outcome, std::optional<int> threshold) {
    if (!outcome.passed_all) return {true, StruggleRule::failed_tests};
    if (threshold && outcome.attempt_count > *threshold)
        return {true, StruggleRule::excess_attempts};
    return {false, StruggleRule::none};
}

ConceptSet map_concepts(const std::vector<std::string>& raw_concepts, const ConceptMap& table,
                        std::vector<std::string>* warnings) {
    ConceptSet out = 0;
    for (const auto& raw : raw_concepts) {
        auto it = table.raw_to_canonical.find(raw);
        if (it == table.raw_to_canonical.end()) {
            if (warnings) warnings->push_back("unmapped concept tag dropped: " + raw);
            continue;
        }
        out = with_concept(out, it->second);
    }
    return out;
}

bool detect_concept_presence(const std::string& source_code, Concept concept_id, Language language,
                             const PatternTable& table) {
    auto it = table.patterns.find({language, concept_id});
    if (it == table.patterns.end()) return false;
    std::vector<std::string> tokens = tokenize_source(source_code, language);
    for (const auto& seq : it->second) {
        if (seq.size() > tokens.size()) continue;
        for (std::size_t i = 0; i + seq.size() <= tokens.size(); ++i) {
            bool match = true;
            for (std::size_t j = 0; j < seq.size(); ++j) {
                if (tokens[i + j] != seq[j]) {
                    match = false;
                    break;
                }
            }
            if (match) return true;
        }
    }
    return false;
}

LabelingResult label_corpus(Corpus& corpus, const ConceptMap& map) {
    LabelingResult result;
    for (auto& [id, task] : corpus.tasks)
        task.canonical_concepts = map_concepts(task.raw_concepts, map, &result.warnings);

    for (const auto& [id, task] : corpus.tasks) {
        try {
            result.thresholds[id] = attempt_threshold(id, corpus);
        } catch (const NoSuccessfulPeers&) {
            result.thresholds[id] = std::nullopt;
        }
    }

    for (auto& [key, events] : group_events(corpus)) {
        TaskOutcome outcome = compute_task_outcome(events);
        StrugglingLabel label = label_struggling(outcome, result.thresholds.at(outcome.task_id));
        result.pairs.emplace(key, LabeledPair{outcome, label});
    }
    return result;
}

std::vector<ConceptGapRow> concept_gap_analysis(const Corpus& corpus, const LabelingResult& labels,
                                                const PatternTable& table, Language language) {
    auto grouped = group_events(corpus);
    struct Tally {
        int lacking_struggling = 0, total_struggling = 0;
        int lacking_non = 0, total_non = 0;
    };
    std::vector<Tally> tallies(kNumConcepts);

    for (const auto& [key, pair] : labels.pairs) {
        const TaskSpec& task = corpus.tasks.at(pair.outcome.task_id);
        const auto& events = grouped.at(key);
        const std::string& final_code = events.back().source_code;
        for (Concept c : concepts_in(task.canonical_concepts)) {
            bool lacking = !detect_concept_presence(final_code, c, language, table);
            Tally& t = tallies[static_cast<std::size_t>(c)];
            if (pair.label.value) {
                ++t.total_struggling;
                if (lacking) ++t.lacking_struggling;
            } else {
                ++t.total_non;
                if (lacking) ++t.lacking_non;
            }
        }
    }

    std::vector<ConceptGapRow> rows;
    for (int i = 0; i < kNumConcepts; ++i) {
        const Tally& t = tallies[static_cast<std::size_t>(i)];
        ConceptGapRow row;
        row.concept_id = static_cast<Concept>(i);
        row.n_struggling = t.total_struggling;
        row.n_non_struggling = t.total_non;
        row.pct_lacking_struggling =
            t.total_struggling ? 100.0 * t.lacking_struggling / t.total_struggling : 0.0;
        row.pct_lacking_non_struggling = t.total_non ? 100.0 * t.lacking_non / t.total_non : 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace ptm
