#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace knowrank::util {

std::string to_lower(const std::string& s);
std::string trim(const std::string& s);

std::vector<std::string> split(const std::string& s, char delim);
std::string join(const std::vector<std::string>& parts, const std::string& sep);

/// Splits a line by a multi-character delimiter (ML-1M uses "::").
std::vector<std::string> split_on(const std::string& s, const std::string& delim);

/// One CSV record, honoring double-quoted fields with "" escapes.
std::vector<std::string> split_csv(const std::string& line);

/// Lowercased alphanumeric tokens; everything else is a separator.
std::vector<std::string> tokenize(const std::string& s);

/// tokenize() minus a fixed English stopword list (no stemming).
std::vector<std::string> tokenize_no_stopwords(const std::string& s);

bool is_stopword(const std::string& token);

/// Interprets any byte >= 0x80 as Latin-1 and re-encodes it as UTF-8.
/// Valid ASCII passes through unchanged.
std::string latin1_to_utf8(const std::string& s);

bool looks_like_utf8(const std::string& s);

/// Seconds since epoch for a UTC civil date/time (proleptic Gregorian).
int64_t civil_to_epoch(int year, int month, int day, int hour, int minute, int second);

/// Parses "%d/%m/%Y %H:%M" into seconds since epoch. Empty on failure.
std::optional<int64_t> parse_dmy_hm(const std::string& s);

/// Trailing "(dddd)" year parenthetical, if any ("Toy Story (1995)" -> 1995).
std::optional<int> trailing_year(const std::string& title);

/// Matching form of a title: lowercase, whitespace collapsed, trailing year
/// parenthetical removed. Used only for comparisons, never for display.
std::string normalize_title(const std::string& title);

}  // namespace knowrank::util
