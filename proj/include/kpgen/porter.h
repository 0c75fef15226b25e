#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kpgen {

// Classic Porter (1980) suffix stripper, matching the reference ANSI C
// release. Input is expected to be a lowercase word; tokens that contain
// anything other than ASCII letters are returned unchanged.
std::string porter_stem(std::string_view word);

// Stems every token of a phrase and joins with single spaces. This is the
// canonical identity used for phrase matching and deduplication.
std::string stem_phrase(const std::vector<std::string>& tokens);

std::vector<std::string> stem_tokens(const std::vector<std::string>& tokens);

}  // namespace kpgen
