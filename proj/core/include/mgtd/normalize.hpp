#pragma once

#include <string>
#include <string_view>

namespace mgtd::normalize {

// Unicode NFC normalization of a UTF-8 string. Invalid byte sequences are
// replaced with U+FFFD, matching ICU's behaviour.
std::string nfc(std::string_view utf8);

// Collapse runs of Unicode whitespace (White_Space property) to a single
// ASCII space and trim both ends. Case is preserved.
std::string collapse_whitespace(std::string_view utf8);

// Whether the string is empty after whitespace trimming.
bool blank(std::string_view utf8);

// Deduplication key: NFC, then whitespace collapse + trim. Case-sensitive.
std::string dedup_key(std::string_view text);

}  // namespace mgtd::normalize
