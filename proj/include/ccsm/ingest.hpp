#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccsm/csv.hpp"
#include "ccsm/error.hpp"
#include "ccsm/patient.hpp"

namespace ccsm {

// File schemas (UTF-8, header row required):
//   patients:      patient_id,gender,birth_date,registration_date
//   events:        patient_id,code,date
//   prescriptions: patient_id,code,date
struct RawTables {
    std::filesystem::path patients_path;
    std::filesystem::path events_path;
    std::filesystem::path prescriptions_path;
    char delimiter = ',';
};

// "First year" of observation, in days. Leap years are ignored on purpose;
// the constant is configurable where it matters.
inline constexpr int kFirstYearDays = 365;

namespace detail {

inline Date parse_date_at(const DelimitedReader& reader, const std::string& text) {
    try {
        return parse_date(text);
    } catch (const ValidationError& e) {
        throw IngestError(reader.path() + " row " + std::to_string(reader.row()) + ": " +
                          e.what());
    }
}

inline EventCode parse_code_at(const DelimitedReader& reader, const std::string& text) {
    try {
        return EventCode{text};
    } catch (const ValidationError& e) {
        throw ValidationError(reader.path() + " row " + std::to_string(reader.row()) + ": " +
                              e.what());
    }
}

inline void load_history(const std::filesystem::path& path, char delimiter,
                         const std::unordered_map<std::string, size_t>& index, Cohort& cohort,
                         bool prescriptions) {
    DelimitedReader reader(path, delimiter);
    reader.expect_header({"patient_id", "code", "date"});
    std::vector<std::string> fields;
    while (reader.next_row(fields)) {
        if (fields.size() != 3) {
            throw IngestError(reader.path() + " row " + std::to_string(reader.row()) +
                              ": expected 3 fields, got " + std::to_string(fields.size()));
        }
        const auto it = index.find(fields[0]);
        if (it == index.end()) {
            throw IngestError(reader.path() + " row " + std::to_string(reader.row()) +
                              ": unknown patient_id \"" + fields[0] + "\"");
        }
        PatientRecord& patient = cohort.patients[it->second];
        const EventCode code = parse_code_at(reader, fields[1]);
        const Date date = parse_date_at(reader, fields[2]);
        if (date < patient.birth_date) {
            throw IngestError(reader.path() + " row " + std::to_string(reader.row()) +
                              ": date " + fields[2] + " precedes birth date of patient \"" +
                              fields[0] + "\"");
        }
        (prescriptions ? patient.prescriptions : patient.events).push_back({code, date});
    }
}

}  // namespace detail

inline Cohort load_cohort(const RawTables& tables) {
    Cohort cohort;
    std::unordered_map<std::string, size_t> index;
    {
        DelimitedReader reader(tables.patients_path, tables.delimiter);
        reader.expect_header({"patient_id", "gender", "birth_date", "registration_date"});
        std::vector<std::string> fields;
        while (reader.next_row(fields)) {
            if (fields.size() != 4) {
                throw IngestError(reader.path() + " row " + std::to_string(reader.row()) +
                                  ": expected 4 fields, got " + std::to_string(fields.size()));
            }
            PatientRecord patient;
            patient.patient_id = fields[0];
            if (fields[1] == "1") {
                patient.gender = 1;
            } else if (fields[1] == "2") {
                patient.gender = 2;
            } else {
                throw IngestError(reader.path() + " row " + std::to_string(reader.row()) +
                                  ": gender must be 1 or 2, got \"" + fields[1] + "\"");
            }
            patient.birth_date = detail::parse_date_at(reader, fields[2]);
            patient.registration_date = detail::parse_date_at(reader, fields[3]);
            if (patient.registration_date < patient.birth_date) {
                throw IngestError(reader.path() + " row " + std::to_string(reader.row()) +
                                  ": registration date precedes birth date");
            }
            if (!index.emplace(patient.patient_id, cohort.patients.size()).second) {
                throw IngestError(reader.path() + " row " + std::to_string(reader.row()) +
                                  ": duplicate patient_id \"" + patient.patient_id + "\"");
            }
            cohort.patients.push_back(std::move(patient));
        }
    }
    detail::load_history(tables.events_path, tables.delimiter, index, cohort, false);
    detail::load_history(tables.prescriptions_path, tables.delimiter, index, cohort, true);
    for (auto& patient : cohort.patients) patient.sort_history();
    return cohort;
}

// Drops every event and prescription dated strictly before
// registration_date + exclusion_days. Demographics are untouched and the
// operation is idempotent.
inline Cohort apply_first_year_exclusion(const Cohort& cohort,
                                         int exclusion_days = kFirstYearDays) {
    Cohort out = cohort;
    for (auto& patient : out.patients) {
        const Date cutoff = patient.registration_date + std::chrono::days{exclusion_days};
        auto keep = [&](std::vector<RecordedEvent>& list) {
            std::erase_if(list, [&](const RecordedEvent& e) { return e.date < cutoff; });
        };
        keep(patient.events);
        keep(patient.prescriptions);
    }
    return out;
}

// Optional generalization: every code deeper than `level` is truncated to
// it; shallower codes stay verbatim. The default pipeline applies no
// roll-up.
inline Cohort roll_up_to_level(const Cohort& cohort, int level) {
    if (level < 1 || level > EventCode::kLength) {
        throw ArgumentError("roll-up level must lie in 1..5");
    }
    Cohort out = cohort;
    for (auto& patient : out.patients) {
        for (auto* list : {&patient.events, &patient.prescriptions}) {
            for (auto& e : *list) {
                if (e.code.level() > level) e.code = e.code.truncated_to_level(level);
            }
        }
        patient.sort_history();
    }
    return out;
}

// Inverse of load_cohort: writes the three table files into `directory`
// using the documented schemas. Returns the paths written.
inline RawTables write_cohort(const Cohort& cohort, const std::filesystem::path& directory,
                              char delimiter = ',') {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    RawTables tables{directory / "patients.csv", directory / "events.csv",
                     directory / "prescriptions.csv", delimiter};
    const char d = delimiter;
    {
        auto out = open_for_write(tables.patients_path);
        out << "patient_id" << d << "gender" << d << "birth_date" << d << "registration_date\n";
        for (const auto& p : cohort.patients) {
            out << p.patient_id << d << p.gender << d << format_date(p.birth_date) << d
                << format_date(p.registration_date) << '\n';
        }
        if (!out) throw IoError("failed writing " + tables.patients_path.string());
    }
    auto write_history = [&](const std::filesystem::path& path, bool prescriptions) {
        auto out = open_for_write(path);
        out << "patient_id" << d << "code" << d << "date\n";
        for (const auto& p : cohort.patients) {
            for (const auto& e : (prescriptions ? p.prescriptions : p.events)) {
                out << p.patient_id << d << e.code.text() << d << format_date(e.date) << '\n';
            }
        }
        if (!out) throw IoError("failed writing " + path.string());
    };
    write_history(tables.events_path, false);
    write_history(tables.prescriptions_path, true);
    return tables;
}

}  // namespace ccsm
