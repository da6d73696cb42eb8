#pragma once

#include <string>

namespace ecgregen {

/// Porter stemmer (Porter 1980), steps 1a-5b as published, longest-suffix
/// match per step. Expects a lowercase word; input containing any character
/// outside [a-z] is returned unchanged.
std::string porter_stem(const std::string& word);

}  // namespace ecgregen
