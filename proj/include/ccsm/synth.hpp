#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ccsm/error.hpp"
#include "ccsm/ingest.hpp"
#include "ccsm/logit.hpp"
#include "ccsm/patient.hpp"
#include "ccsm/rng.hpp"

namespace ccsm {

// A code planted with known effect sizes on the outcome logit. The
// interaction effect applies only to exposed carriers.
struct PlantedFactor {
    EventCode code;
    double prevalence = 0.0;
    double main_effect_logit = 0.0;
    double interaction_logit = 0.0;
};

// A code assigned deterministically by age with zero direct effect — the
// classic age confounder.
struct ConfounderFactor {
    EventCode code;
    int age_threshold = 65;
};

struct GeneratorConfig {
    int n_patients = 1000;
    std::uint64_t random_seed = 1;
    int background_codes = 40;  // noise codes, per-patient inclusion probability each
    double exposure_prevalence = 0.2;
    double baseline_outcome_logit = -6.0;
    double age_coefficient = 0.04;   // per year of age at the (potential) outcome date
    double gender_coefficient = 0.25;  // applies when gender == 2
    std::vector<PlantedFactor> planted_factors;
    std::vector<ConfounderFactor> confounder_factors;

    // Timeline knobs. Each patient is observed for one excluded first year
    // plus observation_days of active follow-up.
    int observation_days = 3650;
    int outcome_window_days = 30;
    int min_age = 25;  // age at registration, uniform
    int max_age = 79;
    double background_prevalence_lo = 0.02;
    double background_prevalence_hi = 0.25;
    EventCode exposure_code{"Rx001"};
    EventCode outcome_code{"Out01"};

    void validate() const {
        if (n_patients < 1) throw ArgumentError("n_patients must be >= 1");
        if (background_codes < 0) throw ArgumentError("background_codes must be >= 0");
        auto probability = [](double p, const char* what) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ArgumentError(std::string(what) + " must lie in [0,1]");
            }
        };
        probability(exposure_prevalence, "exposure_prevalence");
        probability(background_prevalence_lo, "background_prevalence_lo");
        probability(background_prevalence_hi, "background_prevalence_hi");
        for (const auto& f : planted_factors) probability(f.prevalence, "planted prevalence");
        if (min_age < 0 || max_age < min_age) throw ArgumentError("bad age range");
        if (observation_days < outcome_window_days + 732) {
            throw ArgumentError("observation_days too short for the carried-code layout");
        }
    }
};

// The per-seed inclusion probabilities of the background noise codes;
// exposed so tests can check marginal prevalences against configuration.
inline std::vector<double> background_code_probabilities(const GeneratorConfig& cfg) {
    Rng rng = child_rng(cfg.random_seed, 0xBC0DE5ULL);
    std::vector<double> probs(static_cast<size_t>(cfg.background_codes));
    for (auto& p : probs) {
        p = cfg.background_prevalence_lo +
            rng.uniform01() * (cfg.background_prevalence_hi - cfg.background_prevalence_lo);
    }
    return probs;
}

inline EventCode background_code(int index) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "Bk%03d", index % 1000);
    return EventCode{buf};
}

// Seeded generator with a known generative model. Timeline per patient:
// registration, one excluded pre-period year, then the active window. All
// carried codes (background, planted, confounder) are dated in the first
// quarter-year of the active window so they precede any exposure; the
// exposure lands later; a generated outcome follows its exposure within the
// study window (or anywhere late in the window for unexposed patients).
// P(outcome) = sigmoid(baseline + age*b_age + [gender==2]*b_gender
//                      + sum carried main effects
//                      + exposed * sum carried interaction effects).
inline Cohort generate(const GeneratorConfig& cfg) {
    cfg.validate();
    const auto background_probs = background_code_probabilities(cfg);
    const Date epoch = make_date(2000, 1, 1);

    Cohort cohort;
    cohort.patients.reserve(static_cast<size_t>(cfg.n_patients));
    for (int i = 0; i < cfg.n_patients; ++i) {
        Rng rng = child_rng(cfg.random_seed, 0x70617469656E74ULL + static_cast<std::uint64_t>(i));
        PatientRecord patient;
        char id[16];
        std::snprintf(id, sizeof(id), "P%06d", i + 1);
        patient.patient_id = id;
        patient.gender = rng.bernoulli(0.5) ? 2 : 1;

        const int age_at_reg = static_cast<int>(rng.between(cfg.min_age, cfg.max_age));
        patient.registration_date = epoch + std::chrono::days{rng.between(0, 1824)};
        const std::chrono::year_month_day reg{patient.registration_date};
        std::chrono::year_month_day birth{reg.year() - std::chrono::years{age_at_reg},
                                          reg.month(), reg.day()};
        if (!birth.ok()) birth = birth.year() / birth.month() / std::chrono::day{28};
        patient.birth_date = Date{birth};

        const Date active_start = patient.registration_date + std::chrono::days{kFirstYearDays};

        // Factor codes are dated early in the active window so they precede
        // any exposure; background noise spreads over the whole window,
        // which keeps each patient's recorded activity span realistic.
        std::vector<EventCode> carried;
        double main_logit = 0.0;
        double interaction_logit = 0.0;
        for (int b = 0; b < cfg.background_codes; ++b) {
            if (rng.bernoulli(background_probs[static_cast<size_t>(b)])) {
                const EventCode code = background_code(b);
                carried.push_back(code);
                patient.events.push_back(
                    {code, active_start + std::chrono::days{rng.between(0, cfg.observation_days)}});
                if (rng.bernoulli(0.5)) {  // repeat visits widen the activity span
                    patient.events.push_back(
                        {code,
                         active_start + std::chrono::days{rng.between(0, cfg.observation_days)}});
                }
            }
        }
        std::vector<EventCode> early_codes;
        for (const auto& factor : cfg.planted_factors) {
            if (rng.bernoulli(factor.prevalence)) {
                early_codes.push_back(factor.code);
                main_logit += factor.main_effect_logit;
                interaction_logit += factor.interaction_logit;
            }
        }
        for (const auto& confounder : cfg.confounder_factors) {
            if (age_at_reg > confounder.age_threshold) early_codes.push_back(confounder.code);
        }
        for (const auto& code : early_codes) {
            carried.push_back(code);
            patient.events.push_back({code, active_start + std::chrono::days{rng.between(0, 90)}});
        }

        // Exposure, then the prospective outcome date.
        const bool exposed = rng.bernoulli(cfg.exposure_prevalence);
        const std::int64_t late_start = 366;  // leaves the carried codes strictly earlier
        Date outcome_date{};
        if (exposed) {
            const Date exposure_date =
                active_start +
                std::chrono::days{rng.between(
                    late_start, cfg.observation_days - cfg.outcome_window_days)};
            patient.prescriptions.push_back({cfg.exposure_code, exposure_date});
            outcome_date =
                exposure_date + std::chrono::days{rng.between(0, cfg.outcome_window_days)};
        } else {
            outcome_date =
                active_start + std::chrono::days{rng.between(late_start, cfg.observation_days)};
        }

        const double age_term =
            cfg.age_coefficient * completed_years(patient.birth_date, outcome_date);
        const double logit = cfg.baseline_outcome_logit + age_term +
                             (patient.gender == 2 ? cfg.gender_coefficient : 0.0) + main_logit +
                             (exposed ? interaction_logit : 0.0);
        if (rng.bernoulli(sigmoid(logit))) {
            patient.events.push_back({cfg.outcome_code, outcome_date});
        }

        // Pre-period fodder: re-record one carried code inside the excluded
        // first year so the exclusion step has rows to remove.
        if (!carried.empty() && rng.bernoulli(0.5)) {
            const auto& code = carried[rng.below(carried.size())];
            patient.events.push_back(
                {code, patient.registration_date + std::chrono::days{rng.between(0, 364)}});
        }

        patient.sort_history();
        cohort.patients.push_back(std::move(patient));
    }
    return cohort;
}

// Writes the three ingest-format files; load_cohort round-trips the cohort
// exactly.
inline RawTables write_fixture(const Cohort& cohort, const std::filesystem::path& directory,
                               char delimiter = ',') {
    return write_cohort(cohort, directory, delimiter);
}

}  // namespace ccsm
