#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccsm/error.hpp"
#include "ccsm/miner.hpp"
#include "ccsm/patient.hpp"
#include "ccsm/rng.hpp"

namespace ccsm {

struct StudyDefinition {
    EventCode exposure_code_prefix{"Rx001"};  // drug family (matched against prescriptions)
    EventCode outcome_code_prefix{"Out01"};   // outcome event (matched against medical events)
    int outcome_window_days = 30;
    int controls_per_case = 5;
    std::uint64_t random_seed = 0;

    void validate() const {
        if (outcome_window_days <= 0) throw ArgumentError("outcome_window_days must be > 0");
        if (controls_per_case < 1) throw ArgumentError("controls_per_case must be >= 1");
    }
};

inline bool is_exposure(const StudyDefinition& study, const PatientRecord& patient) {
    return std::any_of(patient.prescriptions.begin(), patient.prescriptions.end(),
                       [&](const RecordedEvent& p) {
                           return matches_prefix(study.exposure_code_prefix, p.code);
                       });
}

inline std::optional<Date> first_outcome_date(const StudyDefinition& study,
                                              const PatientRecord& patient) {
    for (const auto& e : patient.events) {  // events are date-sorted
        if (matches_prefix(study.outcome_code_prefix, e.code)) return e.date;
    }
    return std::nullopt;
}

// True when some exposure prescription is followed by an outcome event
// within the window (day 0 and day outcome_window_days both count).
inline bool outcome_within_window(const StudyDefinition& study, const PatientRecord& patient) {
    for (const auto& p : patient.prescriptions) {
        if (!matches_prefix(study.exposure_code_prefix, p.code)) continue;
        for (const auto& e : patient.events) {
            if (!matches_prefix(study.outcome_code_prefix, e.code)) continue;
            const auto gap = (e.date - p.date).count();
            if (gap >= 0 && gap <= study.outcome_window_days) return true;
        }
    }
    return false;
}

struct PartitionResult {
    TransactionDB d1;  // exposed, no outcome within the window
    TransactionDB d2;  // exposed, outcome within the window
};

// Step 1: one transaction per exposed patient, holding every item ever
// recorded for them; unexposed patients appear in neither database.
inline PartitionResult partition(const Cohort& cohort, const StudyDefinition& study) {
    study.validate();
    PartitionResult out;
    size_t exposed = 0;
    for (const auto& patient : cohort.patients) {
        if (!is_exposure(study, patient)) continue;
        ++exposed;
        auto& db = outcome_within_window(study, patient) ? out.d2 : out.d1;
        db.transactions.push_back(patient.item_set());
    }
    if (exposed == 0) {
        throw EmptyStudyError("no patient has an exposure prescription matching prefix \"" +
                              study.exposure_code_prefix.str() + "\"");
    }
    return out;
}

inline int age_at_event(const PatientRecord& patient, Date date) {
    if (date < patient.birth_date) {
        throw ArgumentError("event date " + format_date(date) + " precedes birth date of \"" +
                            patient.patient_id + "\"");
    }
    return completed_years(patient.birth_date, date);
}

struct Selection {
    const PatientRecord* patient = nullptr;
    Date index_date{};
    bool is_case = false;
};

namespace detail {

// 5-year age bands: 0-4, 5-9, ...
inline int age_band_low(int age) { return (age / 5) * 5; }

// First calendar day on which the patient is `age` years old. A Feb-29
// birthday rolls forward to Mar 1 in non-leap years, matching how
// completed_years counts.
inline Date birthday(const PatientRecord& patient, int age) {
    const std::chrono::year_month_day b{patient.birth_date};
    const std::chrono::year_month_day shifted{b.year() + std::chrono::years{age}, b.month(),
                                              b.day()};
    if (shifted.ok()) return Date{shifted};
    return Date{std::chrono::year_month_day{shifted.year(), std::chrono::month{3},
                                            std::chrono::day{1}}};
}

// The span of recorded activity: first to last recorded event or
// prescription. Patients with an empty history have no active span and are
// not eligible as controls.
inline std::optional<std::pair<Date, Date>> active_span(const PatientRecord& patient) {
    std::optional<Date> lo, hi;
    auto scan = [&](const std::vector<RecordedEvent>& list) {
        for (const auto& e : list) {
            if (!lo || e.date < *lo) lo = e.date;
            if (!hi || e.date > *hi) hi = e.date;
        }
    };
    scan(patient.events);
    scan(patient.prescriptions);
    if (!lo) return std::nullopt;
    return std::pair{*lo, *hi};
}

// Days within the active span on which the patient's age falls in
// [band_low, band_low+4].
inline std::optional<std::pair<Date, Date>> band_window(const PatientRecord& patient,
                                                        int band_low) {
    const auto span = active_span(patient);
    if (!span) return std::nullopt;
    const Date lo = std::max(span->first, birthday(patient, band_low));
    const Date hi = std::min(span->second, birthday(patient, band_low + 5) - std::chrono::days{1});
    if (lo > hi) return std::nullopt;
    return std::pair{lo, hi};
}

}  // namespace detail

// Step 3's case-control selection. Cases are every patient with the outcome
// anywhere in history, indexed at their first outcome date. Controls are
// outcome-free patients matched on (gender, 5-year age band), drawn without
// replacement, with the index date sampled uniformly over the days of their
// active span on which their age falls inside the case's band.
inline std::vector<Selection> select_cases_and_controls(const Cohort& cohort,
                                                        const StudyDefinition& study) {
    study.validate();
    struct Stratum {
        std::vector<size_t> case_indices;
        std::vector<Date> case_dates;
    };
    std::map<std::pair<int, int>, Stratum> strata;  // (gender, band_low)
    std::vector<char> is_case(cohort.patients.size(), 0);

    for (size_t i = 0; i < cohort.patients.size(); ++i) {
        const auto& patient = cohort.patients[i];
        const auto outcome = first_outcome_date(study, patient);
        if (!outcome) continue;
        is_case[i] = 1;
        const int band = detail::age_band_low(age_at_event(patient, *outcome));
        auto& stratum = strata[{patient.gender, band}];
        stratum.case_indices.push_back(i);
        stratum.case_dates.push_back(*outcome);
    }

    std::vector<Selection> selection;
    if (strata.empty()) return selection;

    Rng rng = child_rng(study.random_seed, 0x6D61746368ULL);  // matching stream
    std::vector<char> taken(cohort.patients.size(), 0);

    for (const auto& [key, stratum] : strata) {
        const auto [gender, band] = key;
        // Controls eligible for this stratum, in deterministic cohort order.
        std::vector<size_t> pool;
        for (size_t i = 0; i < cohort.patients.size(); ++i) {
            if (is_case[i] || taken[i]) continue;
            const auto& patient = cohort.patients[i];
            if (patient.gender != gender) continue;
            if (detail::band_window(patient, band)) pool.push_back(i);
        }
        const size_t needed =
            stratum.case_indices.size() * static_cast<size_t>(study.controls_per_case);
        if (pool.size() < needed) {
            throw MatchingError(
                "control stratum exhausted (gender=" + std::to_string(gender) + ", ages " +
                std::to_string(band) + "-" + std::to_string(band + 4) + "): need " +
                std::to_string(needed) + " controls, only " + std::to_string(pool.size()) +
                " available");
        }
        for (size_t c = 0; c < stratum.case_indices.size(); ++c) {
            selection.push_back(
                {&cohort.patients[stratum.case_indices[c]], stratum.case_dates[c], true});
            for (int k = 0; k < study.controls_per_case; ++k) {
                const size_t pick = static_cast<size_t>(rng.below(pool.size()));
                const size_t patient_index = pool[pick];
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
                taken[patient_index] = 1;
                const auto& control = cohort.patients[patient_index];
                const auto window = detail::band_window(control, band);
                const auto span_days = (window->second - window->first).count();
                const Date index_date =
                    window->first + std::chrono::days{rng.between(0, span_days)};
                selection.push_back({&control, index_date, false});
            }
        }
    }
    return selection;
}

// One row of the per-itemset regression table.
struct RegressionRow {
    std::string patient_id;
    int age = 0;
    int gender = 1;
    bool x_present = false;
    bool exposure_present = false;
    bool outcome = false;
};

namespace detail {

inline bool has_item_before(const PatientRecord& patient, const Item& item, Date cutoff) {
    const auto& list = item.kind == ItemKind::drug ? patient.prescriptions : patient.events;
    return std::any_of(list.begin(), list.end(), [&](const RecordedEvent& e) {
        return e.code == item.code && e.date < cutoff;
    });
}

inline bool has_exposure_before(const StudyDefinition& study, const PatientRecord& patient,
                                Date cutoff) {
    return std::any_of(patient.prescriptions.begin(), patient.prescriptions.end(),
                       [&](const RecordedEvent& p) {
                           return matches_prefix(study.exposure_code_prefix, p.code) &&
                                  p.date < cutoff;
                       });
}

}  // namespace detail

// One row per selected patient. x_present holds when every item of X is
// recorded strictly before the index date; exposure likewise.
inline std::vector<RegressionRow> assemble_rows(const std::vector<Selection>& selection,
                                                const Itemset& x,
                                                const StudyDefinition& study) {
    std::vector<RegressionRow> rows;
    rows.reserve(selection.size());
    for (const auto& sel : selection) {
        const auto& patient = *sel.patient;
        RegressionRow row;
        row.patient_id = patient.patient_id;
        row.age = age_at_event(patient, sel.index_date);
        row.gender = patient.gender;
        row.x_present = std::all_of(x.begin(), x.end(), [&](const Item& item) {
            return detail::has_item_before(patient, item, sel.index_date);
        });
        row.exposure_present = detail::has_exposure_before(study, patient, sel.index_date);
        row.outcome = sel.is_case;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace ccsm
