#include "ptm/concepts.hpp"

#include <array>
#include <bit>

namespace ptm {

namespace {

constexpr std::array<std::string_view, kNumConcepts> kNames = {
    "conditional_clauses", "loops",          "math_operations", "logic_operations",
    "string_manipulations", "lists",         "file_operations", "functions",
    "dictionaries",          "tuples",
};

}  // namespace

int concept_count(ConceptSet s) {
    return std::popcount(s);
}

std::string_view concept_name(Concept c) {
    return kNames[static_cast<std::size_t>(c)];
}

std::optional<Concept> concept_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) return static_cast<Concept>(i);
    }
    return std::nullopt;
}

std::vector<Concept> concepts_in(ConceptSet s) {
    std::vector<Concept> out;
    for (int i = 0; i < kNumConcepts; ++i) {
        auto c = static_cast<Concept>(i);
        if (has_concept(s, c)) out.push_back(c);
    }
    return out;
}

std::string concept_set_to_string(ConceptSet s) {
    std::string out;
    for (Concept c : concepts_in(s)) {
        if (!out.empty()) out.push_back(';');
        out += concept_name(c);
    }
    return out;
}

}  // namespace ptm
