#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace oal::text {

// Porter (1980) suffix-stripping stemmer. Input must be lower-case ASCII.
std::string porter_stem(std::string_view word);

// Lower-cases, maps every non-alphanumeric byte to a separator and splits.
std::vector<std::string> tokenize(std::string_view text);

// The common English stopword list (NLTK's).
const std::unordered_set<std::string>& default_stopwords();

// Normalizes a free-text annotation into predicates: tokenize, stem,
// de-duplicate keeping first occurrence. No stopword removal, annotations
// are already object/attribute names.
std::vector<std::string> normalize_annotation(std::string_view annotation);

// Description -> ordered predicate list: tokenize, drop stopwords, stem,
// de-duplicate keeping first occurrence. Throws ParseError when nothing
// survives (the episode cannot start).
std::vector<std::string> extract_predicates(
    std::string_view description,
    const std::unordered_set<std::string>& stopwords = default_stopwords());

}  // namespace oal::text
