#pragma once

#include <string>
#include <string_view>

namespace rca {

// Porter (1980) suffix-stripping stemmer. Expects a lowercase word;
// words containing anything but a-z, and words of two letters or fewer,
// are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace rca
