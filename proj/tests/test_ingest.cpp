#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "ccsm/ingest.hpp"
#include "ccsm/rng.hpp"

using namespace ccsm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ccsm_ingest_" + std::to_string(Catch::rngSeed()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

RawTables basic_tables(const TempDir& dir, const std::string& events,
                       const std::string& prescriptions = "patient_id,code,date\n") {
    write_file(dir.path / "patients.csv",
               "patient_id,gender,birth_date,registration_date\n"
               "P1,1,1960-05-01,2000-01-01\n"
               "P2,2,1970-03-15,2001-06-01\n"
               "P3,1,1980-12-31,1999-11-20\n");
    write_file(dir.path / "events.csv", "patient_id,code,date\n" + events);
    write_file(dir.path / "prescriptions.csv", prescriptions);
    return {dir.path / "patients.csv", dir.path / "events.csv", dir.path / "prescriptions.csv"};
}

}  // namespace

TEST_CASE("patients with no events load with empty histories") {
    TempDir dir;
    const Cohort cohort = load_cohort(basic_tables(dir, ""));
    REQUIRE(cohort.patients.size() == 3);
    for (const auto& p : cohort.patients) {
        CHECK(p.events.empty());
        CHECK(p.prescriptions.empty());
    }
    CHECK(cohort.patients[0].patient_id == "P1");
    CHECK(cohort.patients[1].gender == 2);
    CHECK(cohort.patients[2].birth_date == make_date(1980, 12, 31));
}

TEST_CASE("event row referencing an absent patient is an ingestion error") {
    TempDir dir;
    const auto tables = basic_tables(dir, "P999,A10..,2005-01-01\n");
    CHECK_THROWS_MATCHES(load_cohort(tables), IngestError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("P999") &&
                             Catch::Matchers::ContainsSubstring("row 2")));
}

TEST_CASE("malformed dates and codes name the offending row") {
    TempDir dir;
    CHECK_THROWS_MATCHES(load_cohort(basic_tables(dir, "P1,A10..,2005-13-40\n")), IngestError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("row 2")));
    TempDir dir2;
    CHECK_THROWS_MATCHES(load_cohort(basic_tables(dir2, "P1,TOOLONGCODE,2005-01-01\n")),
                         ValidationError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("TOOLONGCODE")));
}

TEST_CASE("duplicate patient ids are rejected") {
    TempDir dir;
    write_file(dir.path / "patients.csv",
               "patient_id,gender,birth_date,registration_date\n"
               "P1,1,1960-05-01,2000-01-01\n"
               "P1,2,1961-05-01,2000-01-01\n");
    write_file(dir.path / "events.csv", "patient_id,code,date\n");
    write_file(dir.path / "prescriptions.csv", "patient_id,code,date\n");
    CHECK_THROWS_AS(load_cohort(RawTables{dir.path / "patients.csv", dir.path / "events.csv",
                                          dir.path / "prescriptions.csv"}),
                    IngestError);
}

TEST_CASE("header mismatch and missing files are reported") {
    TempDir dir;
    write_file(dir.path / "patients.csv", "id,gender,birth,reg\n");
    write_file(dir.path / "events.csv", "patient_id,code,date\n");
    write_file(dir.path / "prescriptions.csv", "patient_id,code,date\n");
    CHECK_THROWS_AS(load_cohort(RawTables{dir.path / "patients.csv", dir.path / "events.csv",
                                          dir.path / "prescriptions.csv"}),
                    IngestError);
    CHECK_THROWS_AS(load_cohort(RawTables{dir.path / "nope.csv", dir.path / "events.csv",
                                          dir.path / "prescriptions.csv"}),
                    IoError);
}

TEST_CASE("histories are stored date-sorted and support a custom delimiter") {
    TempDir dir;
    write_file(dir.path / "patients.tsv",
               "patient_id;gender;birth_date;registration_date\n"
               "P1;1;1960-05-01;2000-01-01\n");
    write_file(dir.path / "events.tsv",
               "patient_id;code;date\n"
               "P1;B20..;2006-01-01\n"
               "P1;A10..;2005-01-01\n");
    write_file(dir.path / "prescriptions.tsv", "patient_id;code;date\n");
    const Cohort cohort = load_cohort(
        RawTables{dir.path / "patients.tsv", dir.path / "events.tsv",
                  dir.path / "prescriptions.tsv", ';'});
    REQUIRE(cohort.patients.size() == 1);
    REQUIRE(cohort.patients[0].events.size() == 2);
    CHECK(cohort.patients[0].events[0].code == EventCode{"A10.."});
    CHECK(cohort.patients[0].events[1].code == EventCode{"B20.."});
}

TEST_CASE("first-year exclusion boundary: strictly-before day 365 removed") {
    Cohort cohort;
    PatientRecord p;
    p.patient_id = "P1";
    p.birth_date = make_date(1950, 1, 1);
    p.registration_date = make_date(2000, 1, 1);
    p.events = {
        {EventCode{"A10.."}, p.registration_date + std::chrono::days{100}},  // removed
        {EventCode{"B20.."}, p.registration_date + std::chrono::days{364}},  // removed
        {EventCode{"C30.."}, p.registration_date + std::chrono::days{365}},  // retained
        {EventCode{"D40.."}, p.registration_date + std::chrono::days{400}},  // retained
    };
    p.prescriptions = {{EventCode{"R10.."}, p.registration_date + std::chrono::days{10}}};
    cohort.patients.push_back(p);

    const Cohort filtered = apply_first_year_exclusion(cohort);
    REQUIRE(filtered.patients.size() == 1);
    const auto& q = filtered.patients[0];
    REQUIRE(q.events.size() == 2);
    CHECK(q.events[0].code == EventCode{"C30.."});
    CHECK(q.events[1].code == EventCode{"D40.."});
    CHECK(q.prescriptions.empty());
    CHECK(q.birth_date == p.birth_date);
    CHECK(q.registration_date == p.registration_date);
}

TEST_CASE("first-year exclusion is idempotent and only ever removes") {
    ccsm::Rng rng(99);
    Cohort cohort;
    for (int i = 0; i < 50; ++i) {
        PatientRecord p;
        p.patient_id = "P" + std::to_string(i);
        p.birth_date = make_date(1950, 1, 1);
        p.registration_date = make_date(2000, 1, 1) + std::chrono::days{rng.between(0, 1000)};
        const int n_events = static_cast<int>(rng.between(0, 8));
        for (int e = 0; e < n_events; ++e) {
            p.events.push_back({EventCode{"A10.."},
                                p.registration_date + std::chrono::days{rng.between(0, 900)}});
        }
        p.sort_history();
        cohort.patients.push_back(std::move(p));
    }
    const Cohort once = apply_first_year_exclusion(cohort);
    const Cohort twice = apply_first_year_exclusion(once);
    CHECK(once == twice);

    size_t before = 0, after = 0;
    for (const auto& p : cohort.patients) before += p.events.size();
    for (size_t i = 0; i < once.patients.size(); ++i) {
        after += once.patients[i].events.size();
        // every kept event exists, unmodified, in the input history
        for (const auto& e : once.patients[i].events) {
            const auto& orig = cohort.patients[i].events;
            CHECK(std::find(orig.begin(), orig.end(), e) != orig.end());
        }
    }
    CHECK(after <= before);
}

TEST_CASE("fixture with 18 of 50 events inside the window keeps 32") {
    // Deterministic fixture: 18 events on days 0..350, 32 on days 365..980.
    Cohort cohort;
    PatientRecord p;
    p.patient_id = "P1";
    p.birth_date = make_date(1950, 1, 1);
    p.registration_date = make_date(2000, 1, 1);
    for (int i = 0; i < 18; ++i) {
        p.events.push_back({EventCode{"E10.."}, p.registration_date + std::chrono::days{i * 19}});
    }
    for (int i = 0; i < 32; ++i) {
        p.events.push_back(
            {EventCode{"F10.."}, p.registration_date + std::chrono::days{365 + i * 19}});
    }
    REQUIRE(p.events.size() == 50);
    // independent count of the events the window should remove
    int inside = 0;
    for (const auto& e : p.events) {
        if ((e.date - p.registration_date).count() < 365) ++inside;
    }
    REQUIRE(inside == 18);
    p.sort_history();
    cohort.patients.push_back(p);

    const Cohort filtered = apply_first_year_exclusion(cohort);
    CHECK(filtered.patients[0].events.size() == 32);
}

TEST_CASE("roll-up truncates deep codes and leaves shallow ones verbatim") {
    Cohort cohort;
    PatientRecord p;
    p.patient_id = "P1";
    p.birth_date = make_date(1950, 1, 1);
    p.registration_date = make_date(2000, 1, 1);
    p.events = {{EventCode{"A11.."}, make_date(2002, 1, 1)},
                {EventCode{"B12cd"}, make_date(2002, 2, 1)},
                {EventCode{"C...."}, make_date(2002, 3, 1)}};
    p.prescriptions = {{EventCode{"Rx9z."}, make_date(2002, 4, 1)}};
    cohort.patients.push_back(p);

    const Cohort rolled = roll_up_to_level(cohort, 2);
    const auto& q = rolled.patients[0];
    CHECK(q.events[0].code == EventCode{"A1..."});
    CHECK(q.events[1].code == EventCode{"B1..."});
    CHECK(q.events[2].code == EventCode{"C...."});  // already shallower
    CHECK(q.prescriptions[0].code == EventCode{"Rx..."});
    CHECK_THROWS_AS(roll_up_to_level(cohort, 0), ArgumentError);
    CHECK_THROWS_AS(roll_up_to_level(cohort, 6), ArgumentError);
}

TEST_CASE("write then load round-trips a cohort exactly") {
    TempDir dir;
    Cohort cohort;
    ccsm::Rng rng(4242);
    for (int i = 0; i < 20; ++i) {
        PatientRecord p;
        p.patient_id = "P" + std::to_string(i + 1);
        p.gender = rng.bernoulli(0.5) ? 2 : 1;
        p.birth_date = make_date(1950, 1, 1) + std::chrono::days{rng.between(0, 9000)};
        p.registration_date = p.birth_date + std::chrono::days{rng.between(7000, 15000)};
        const int n = static_cast<int>(rng.between(0, 6));
        for (int e = 0; e < n; ++e) {
            p.events.push_back({EventCode{"A10.."},
                                p.registration_date + std::chrono::days{rng.between(0, 3000)}});
        }
        if (rng.bernoulli(0.6)) {
            p.prescriptions.push_back(
                {EventCode{"Rx9.."},
                 p.registration_date + std::chrono::days{rng.between(0, 3000)}});
        }
        p.sort_history();
        cohort.patients.push_back(std::move(p));
    }
    const RawTables tables = write_cohort(cohort, dir.path / "out");
    const Cohort loaded = load_cohort(tables);
    CHECK(loaded == cohort);

    // event-file row count equals total event count
    size_t events = 0;
    for (const auto& p : cohort.patients) events += p.events.size();
    std::ifstream in(tables.events_path);
    size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == events + 1);
}
