#pragma once

#include <string>
#include <string_view>

namespace clmrc::text {

/// UTF-8 to code points. Throws EncodingError on malformed input.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view code_points);
std::string encode_utf8(char32_t code_point);

bool is_space(char32_t c);

/// Length in code points, the unit of every character offset in this project.
std::size_t code_point_length(std::string_view bytes);

}  // namespace clmrc::text
