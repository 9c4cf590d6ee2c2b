#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace claimbrush::utf8 {

// Decodes the code point starting at text[pos] and advances pos past it.
// Invalid bytes decode as U+FFFD and consume a single byte.
char32_t next(std::string_view text, std::size_t& pos);

std::string encode(char32_t cp);

std::vector<char32_t> decode(std::string_view text);

// Number of code points.
std::size_t length(std::string_view text);

bool is_space(char32_t cp);

// Japanese/CJK script: kana, ideographs, CJK punctuation and full-width forms.
bool is_cjk(char32_t cp);

// Trims ASCII whitespace and U+3000 from both ends.
std::string_view trim(std::string_view text);

}  // namespace claimbrush::utf8
