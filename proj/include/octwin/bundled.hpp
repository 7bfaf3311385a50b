#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace octwin {

/// Text of a document shipped in data/ (name without ".json"). Throws
/// std::out_of_range for unknown names.
std::string_view bundled_document(std::string_view name);
std::vector<std::string> bundled_names();

}  // namespace octwin
