#pragma once

#include <array>
#include <compare>
#include <string>
#include <string_view>

#include "ccsm/error.hpp"

namespace ccsm {

// A 5-character hierarchical clinical code. Characters are alphanumeric
// with '.' used as trailing padding; the non-dot prefix length is the
// code's level (1..5). A code is the parent of another when it is one
// level shallower and its non-dot prefix matches.
class EventCode {
public:
    static constexpr int kLength = 5;

    explicit EventCode(std::string_view text) {
        if (text.size() != kLength) {
            throw ValidationError("malformed event code \"" + std::string(text) +
                                  "\": expected exactly 5 characters, got " +
                                  std::to_string(text.size()));
        }
        bool seen_dot = false;
        for (char c : text) {
            if (c == '.') {
                seen_dot = true;
            } else if (!is_code_char(c)) {
                throw ValidationError("malformed event code \"" + std::string(text) +
                                      "\": character '" + std::string(1, c) +
                                      "' is not alphanumeric or '.'");
            } else if (seen_dot) {
                throw ValidationError("malformed event code \"" + std::string(text) +
                                      "\": interior dot (dots must be trailing)");
            }
        }
        if (text[0] == '.') {
            throw ValidationError("malformed event code \"" + std::string(text) +
                                  "\": must contain at least one non-dot character");
        }
        std::copy(text.begin(), text.end(), text_.begin());
    }

    // Count of non-dot characters, in 1..5.
    int level() const {
        int n = 0;
        while (n < kLength && text_[static_cast<size_t>(n)] != '.') ++n;
        return n;
    }

    std::string_view text() const { return {text_.data(), kLength}; }
    std::string str() const { return std::string(text()); }

    // The code with everything after the first n characters replaced by dots.
    EventCode truncated_to_level(int n) const {
        if (n < 1 || n > level()) {
            throw ArgumentError("cannot truncate code \"" + str() + "\" (level " +
                                std::to_string(level()) + ") to level " + std::to_string(n));
        }
        EventCode out = *this;
        for (int i = n; i < kLength; ++i) out.text_[static_cast<size_t>(i)] = '.';
        return out;
    }

    bool operator==(const EventCode& other) const = default;
    auto operator<=>(const EventCode& other) const = default;

private:
    static bool is_code_char(char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    }

    std::array<char, kLength> text_{};
};

inline int code_level(const EventCode& code) { return code.level(); }

inline bool is_parent(const EventCode& parent, const EventCode& child) {
    const int lp = parent.level();
    if (child.level() != lp + 1) return false;
    return parent.text().substr(0, static_cast<size_t>(lp)) ==
           child.text().substr(0, static_cast<size_t>(lp));
}

inline bool is_ancestor(const EventCode& anc, const EventCode& desc) {
    const int la = anc.level();
    if (la >= desc.level()) return false;
    return anc.text().substr(0, static_cast<size_t>(la)) ==
           desc.text().substr(0, static_cast<size_t>(la));
}

// Prefix match used for study exposure/outcome definitions: a code counts
// as belonging to the family identified by `prefix` when it equals the
// prefix or descends from it.
inline bool matches_prefix(const EventCode& prefix, const EventCode& code) {
    return prefix == code || is_ancestor(prefix, code);
}

}  // namespace ccsm
