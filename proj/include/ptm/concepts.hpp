#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ptm {

// The ten programming concepts tracked by the proficiency taxonomy, in the
// canonical order used everywhere a skill vector or requirement vector is
// indexed. Latent skills L1..L3 follow these ten in 13-dim vectors.
enum class Concept : std::uint8_t {
    ConditionalClauses = 0,
    Loops = 1,
    MathOperations = 2,
    LogicOperations = 3,
    StringManipulations = 4,
    Lists = 5,
    FileOperations = 6,
    Functions = 7,
    Dictionaries = 8,
    Tuples = 9,
};

inline constexpr int kNumConcepts = 10;
inline constexpr int kNumLatentSkills = 3;
inline constexpr int kNumSkills = kNumConcepts + kNumLatentSkills;  // 13

// Bitmask over the ten concepts; bit i corresponds to Concept(i).
using ConceptSet = std::uint16_t;

inline constexpr ConceptSet concept_bit(Concept c) {
    return static_cast<ConceptSet>(1u << static_cast<unsigned>(c));
}

inline constexpr bool has_concept(ConceptSet s, Concept c) {
    return (s & concept_bit(c)) != 0;
}

inline constexpr ConceptSet with_concept(ConceptSet s, Concept c) {
    return static_cast<ConceptSet>(s | concept_bit(c));
}

int concept_count(ConceptSet s);

std::string_view concept_name(Concept c);
std::optional<Concept> concept_from_name(std::string_view name);

std::vector<Concept> concepts_in(ConceptSet s);

// Renders a set as the canonical semicolon-joined string, e.g. "loops;lists".
std::string concept_set_to_string(ConceptSet s);

}  // namespace ptm
