#pragma once

#include <string>
#include <string_view>

namespace cowrite {

// Document offsets follow the editor convention of UTF-16 code units, so text
// is converted at the boundary. Invalid UTF-8 bytes map to U+FFFD.
std::u16string to_utf16(std::string_view utf8);
std::string to_utf8(std::u16string_view utf16);

}  // namespace cowrite
