#include "knowrank/util/text.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace knowrank::util {

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char delim) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split_on(const std::string& s, const std::string& delim) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + delim.size();
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool is_stopword(const std::string& token) {
    // Classic Lucene English stopword list.
    static const std::unordered_set<std::string> kStopwords = {
        "a",    "an",   "and",  "are",   "as",    "at",   "be",   "but",  "by",
        "for",  "if",   "in",   "into",  "is",    "it",   "no",   "not",  "of",
        "on",   "or",   "such", "that",  "the",   "their", "then", "there", "these",
        "they", "this", "to",   "was",   "will",  "with"};
    return kStopwords.count(token) > 0;
}

std::vector<std::string> tokenize_no_stopwords(const std::string& s) {
    std::vector<std::string> out;
    for (auto& tok : tokenize(s)) {
        if (!is_stopword(tok)) out.push_back(std::move(tok));
    }
    return out;
}

std::string latin1_to_utf8(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if (c < 0x80) {
            out += static_cast<char>(c);
        } else {
            out += static_cast<char>(0xC0 | (c >> 6));
            out += static_cast<char>(0x80 | (c & 0x3F));
        }
    }
    return out;
}

bool looks_like_utf8(const std::string& s) {
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = s[i];
        size_t need = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            need = 1;
        } else if ((c & 0xF0) == 0xE0) {
            need = 2;
        } else if ((c & 0xF8) == 0xF0) {
            need = 3;
        } else {
            return false;
        }
        if (i + need >= s.size()) return false;
        for (size_t k = 1; k <= need; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
        }
        i += need + 1;
    }
    return true;
}

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (Hinnant's algorithm).
int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

}  // namespace

int64_t civil_to_epoch(int year, int month, int day, int hour, int minute, int second) {
    return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
}

std::optional<int64_t> parse_dmy_hm(const std::string& s) {
    int day = 0, month = 0, year = 0, hour = 0, minute = 0;
    char trail = 0;
    int n = std::sscanf(s.c_str(), "%d/%d/%d %d:%d%c", &day, &month, &year, &hour, &minute, &trail);
    if (n != 5) return std::nullopt;
    if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;
    if (hour < 0 || hour > 23 || minute < 0 || minute > 59) return std::nullopt;
    return civil_to_epoch(year, month, day, hour, minute, 0);
}

std::optional<int> trailing_year(const std::string& title) {
    std::string t = trim(title);
    if (t.size() < 6 || t.back() != ')') return std::nullopt;
    size_t open = t.rfind('(');
    if (open == std::string::npos) return std::nullopt;
    std::string inner = t.substr(open + 1, t.size() - open - 2);
    if (inner.size() != 4) return std::nullopt;
    for (char c : inner) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    }
    return std::stoi(inner);
}

std::string normalize_title(const std::string& title) {
    std::string t = trim(title);
    if (trailing_year(t)) {
        size_t open = t.rfind('(');
        t = trim(t.substr(0, open));
    }
    std::string collapsed;
    bool in_space = false;
    for (unsigned char c : t) {
        if (std::isspace(c)) {
            in_space = true;
        } else {
            if (in_space && !collapsed.empty()) collapsed += ' ';
            in_space = false;
            collapsed += static_cast<char>(std::tolower(c));
        }
    }
    return collapsed;
}

}  // namespace knowrank::util
