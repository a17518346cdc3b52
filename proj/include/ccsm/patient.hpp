#pragma once

#include <algorithm>
#include <chrono>
#include <compare>
#include <cstdio>
#include <string>
#include <tuple>
#include <vector>

#include "ccsm/error.hpp"
#include "ccsm/event_code.hpp"

namespace ccsm {

// Calendar date with day resolution.
using Date = std::chrono::sys_days;

inline Date make_date(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, month, day);
        throw ValidationError(std::string("invalid calendar date ") + buf);
    }
    return Date{ymd};
}

// ISO 8601 YYYY-MM-DD.
inline Date parse_date(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 0;
    char trailing = 0;
    if (std::sscanf(std::string(text).c_str(), "%d-%u-%u%c", &y, &m, &d, &trailing) != 3) {
        throw ValidationError("malformed date \"" + std::string(text) + "\": expected YYYY-MM-DD");
    }
    return make_date(y, m, d);
}

inline std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

// Completed years between two dates.
inline int completed_years(Date from, Date to) {
    const std::chrono::year_month_day f{from}, t{to};
    int years = int(t.year()) - int(f.year());
    if (std::tuple{unsigned(t.month()), unsigned(t.day())} <
        std::tuple{unsigned(f.month()), unsigned(f.day())}) {
        --years;
    }
    return years;
}

// Medical events and drug prescriptions share the code shape but live in
// distinct namespaces; an Item is the namespaced unit that transactions
// and itemsets are built from.
enum class ItemKind : unsigned char { medical = 0, drug = 1 };

struct Item {
    EventCode code;
    ItemKind kind = ItemKind::medical;

    // Drug items render with an "Rx:" marker so the two namespaces stay
    // distinguishable in report files.
    std::string str() const {
        return kind == ItemKind::drug ? "Rx:" + code.str() : code.str();
    }

    static Item parse(std::string_view text) {
        if (text.substr(0, 3) == "Rx:") return {EventCode{text.substr(3)}, ItemKind::drug};
        return {EventCode{text}, ItemKind::medical};
    }

    bool operator==(const Item&) const = default;
    auto operator<=>(const Item& other) const {
        if (auto c = code <=> other.code; c != 0) return c;
        return kind <=> other.kind;
    }
};

inline Item medical_item(std::string_view code) { return {EventCode{code}, ItemKind::medical}; }
inline Item drug_item(std::string_view code) { return {EventCode{code}, ItemKind::drug}; }

struct RecordedEvent {
    EventCode code;
    Date date;

    bool operator==(const RecordedEvent&) const = default;
};

struct PatientRecord {
    std::string patient_id;
    int gender = 1;  // 1 or 2
    Date birth_date{};
    Date registration_date{};
    std::vector<RecordedEvent> events;         // medical namespace, date-sorted
    std::vector<RecordedEvent> prescriptions;  // drug namespace, date-sorted

    bool operator==(const PatientRecord&) const = default;

    void sort_history() {
        auto by_date = [](const RecordedEvent& a, const RecordedEvent& b) {
            return std::tie(a.date, a.code) < std::tie(b.date, b.code);
        };
        std::sort(events.begin(), events.end(), by_date);
        std::sort(prescriptions.begin(), prescriptions.end(), by_date);
    }

    // The set of all items ever recorded for this patient, sorted unique.
    std::vector<Item> item_set() const {
        std::vector<Item> items;
        items.reserve(events.size() + prescriptions.size());
        for (const auto& e : events) items.push_back({e.code, ItemKind::medical});
        for (const auto& p : prescriptions) items.push_back({p.code, ItemKind::drug});
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
        return items;
    }
};

struct Cohort {
    std::vector<PatientRecord> patients;

    bool operator==(const Cohort&) const = default;
};

}  // namespace ccsm
