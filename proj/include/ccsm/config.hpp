#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ccsm/cohort_builder.hpp"
#include "ccsm/error.hpp"
#include "ccsm/ingest.hpp"
#include "ccsm/miner.hpp"
#include "ccsm/synth.hpp"

namespace ccsm {

// Everything one pipeline invocation needs, read from a single sectioned
// key-value file. Command-line flags override file values.
struct RunConfig {
    RawTables data;
    StudyDefinition study;
    MinerConfig miner;
    GeneratorConfig generator;
    std::filesystem::path report_path;
    std::filesystem::path candidates_path;
    int workers = 0;        // 0 = hardware concurrency
    int rollup_level = 0;   // 0 = verbatim codes; 1..5 = generalize to that level
};

namespace detail {

struct ConfigLine {
    std::string section;
    std::string key;
    std::string value;
    size_t line_no = 0;
};

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<ConfigLine> parse_ini(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::vector<ConfigLine> lines;
    std::string section;
    std::string raw;
    size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_cr(raw));
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed section header \"" + line + "\"");
            }
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": expected key = value, got \"" + line + "\"");
        }
        if (section.empty()) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": key outside any [section]");
        }
        lines.push_back({section, trim(std::string_view(line).substr(0, eq)),
                         trim(std::string_view(line).substr(eq + 1)), line_no});
    }
    return lines;
}

template <typename F>
auto parse_value(const std::filesystem::path& path, const ConfigLine& line, F&& convert) {
    try {
        return convert(line.value);
    } catch (const Error& e) {
        throw ConfigError(path.string() + ":" + std::to_string(line.line_no) + ": " + e.what());
    } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(line.line_no) +
                          ": cannot parse value \"" + line.value + "\" for key \"" + line.key +
                          "\"");
    }
}

inline long long to_int(const std::string& v) {
    size_t pos = 0;
    const long long out = std::stoll(v, &pos);
    if (pos != v.size()) throw ValidationError("trailing characters after integer \"" + v + "\"");
    return out;
}

inline double to_double(const std::string& v) {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw ValidationError("trailing characters after number \"" + v + "\"");
    return out;
}

inline std::uint64_t to_seed(const std::string& v) {
    size_t pos = 0;
    const auto out = std::stoull(v, &pos);
    if (pos != v.size()) throw ValidationError("trailing characters after seed \"" + v + "\"");
    return out;
}

// "CODE:prevalence:main_logit:interaction_logit"
inline PlantedFactor to_planted(const std::string& v) {
    const auto parts = split_fields(v, ':');
    if (parts.size() != 4) {
        throw ValidationError("planted_factor expects CODE:prevalence:main:interaction, got \"" +
                              v + "\"");
    }
    return {EventCode{parts[0]}, to_double(parts[1]), to_double(parts[2]), to_double(parts[3])};
}

// "CODE:age_threshold"
inline ConfounderFactor to_confounder(const std::string& v) {
    const auto parts = split_fields(v, ':');
    if (parts.size() != 2) {
        throw ValidationError("confounder_factor expects CODE:age_threshold, got \"" + v + "\"");
    }
    return {EventCode{parts[0]}, static_cast<int>(to_int(parts[1]))};
}

}  // namespace detail

inline RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig cfg;
    bool study_exposure_set = false, study_outcome_set = false;
    bool gen_exposure_set = false, gen_outcome_set = false, gen_window_set = false;

    for (const auto& line : detail::parse_ini(path)) {
        auto as_int = [&] { return detail::parse_value(path, line, detail::to_int); };
        auto as_double = [&] { return detail::parse_value(path, line, detail::to_double); };
        auto as_seed = [&] { return detail::parse_value(path, line, detail::to_seed); };
        auto as_code = [&] {
            return detail::parse_value(path, line, [](const std::string& v) { return EventCode{v}; });
        };
        const std::string where = line.section + "." + line.key;

        if (line.section == "data") {
            if (line.key == "patients") cfg.data.patients_path = line.value;
            else if (line.key == "events") cfg.data.events_path = line.value;
            else if (line.key == "prescriptions") cfg.data.prescriptions_path = line.value;
            else if (line.key == "delimiter") {
                if (line.value.size() != 1) {
                    throw ConfigError(path.string() + ":" + std::to_string(line.line_no) +
                                      ": delimiter must be a single character");
                }
                cfg.data.delimiter = line.value[0];
            } else if (line.key == "rollup_level") {
                cfg.rollup_level = static_cast<int>(as_int());
            } else goto unknown;
        } else if (line.section == "study") {
            if (line.key == "exposure_code") { cfg.study.exposure_code_prefix = as_code(); study_exposure_set = true; }
            else if (line.key == "outcome_code") { cfg.study.outcome_code_prefix = as_code(); study_outcome_set = true; }
            else if (line.key == "outcome_window_days") cfg.study.outcome_window_days = static_cast<int>(as_int());
            else if (line.key == "controls_per_case") cfg.study.controls_per_case = static_cast<int>(as_int());
            else if (line.key == "seed") cfg.study.random_seed = as_seed();
            else goto unknown;
        } else if (line.section == "miner") {
            if (line.key == "min_support") {
                cfg.miner.min_support = detail::parse_value(
                    path, line, [](const std::string& v) { return Fraction::parse_decimal(v); });
            } else if (line.key == "max_itemset_size") {
                cfg.miner.max_itemset_size = static_cast<int>(as_int());
            } else goto unknown;
        } else if (line.section == "generator") {
            if (line.key == "n_patients") cfg.generator.n_patients = static_cast<int>(as_int());
            else if (line.key == "seed") cfg.generator.random_seed = as_seed();
            else if (line.key == "background_codes") cfg.generator.background_codes = static_cast<int>(as_int());
            else if (line.key == "exposure_prevalence") cfg.generator.exposure_prevalence = as_double();
            else if (line.key == "baseline_outcome_logit") cfg.generator.baseline_outcome_logit = as_double();
            else if (line.key == "age_coefficient") cfg.generator.age_coefficient = as_double();
            else if (line.key == "gender_coefficient") cfg.generator.gender_coefficient = as_double();
            else if (line.key == "observation_days") cfg.generator.observation_days = static_cast<int>(as_int());
            else if (line.key == "outcome_window_days") { cfg.generator.outcome_window_days = static_cast<int>(as_int()); gen_window_set = true; }
            else if (line.key == "min_age") cfg.generator.min_age = static_cast<int>(as_int());
            else if (line.key == "max_age") cfg.generator.max_age = static_cast<int>(as_int());
            else if (line.key == "background_prevalence_lo") cfg.generator.background_prevalence_lo = as_double();
            else if (line.key == "background_prevalence_hi") cfg.generator.background_prevalence_hi = as_double();
            else if (line.key == "exposure_code") { cfg.generator.exposure_code = as_code(); gen_exposure_set = true; }
            else if (line.key == "outcome_code") { cfg.generator.outcome_code = as_code(); gen_outcome_set = true; }
            else if (line.key == "planted_factor") {
                cfg.generator.planted_factors.push_back(
                    detail::parse_value(path, line, detail::to_planted));
            } else if (line.key == "confounder_factor") {
                cfg.generator.confounder_factors.push_back(
                    detail::parse_value(path, line, detail::to_confounder));
            } else goto unknown;
        } else if (line.section == "output") {
            if (line.key == "report") cfg.report_path = line.value;
            else if (line.key == "candidates") cfg.candidates_path = line.value;
            else if (line.key == "workers") cfg.workers = static_cast<int>(as_int());
            else goto unknown;
        } else {
            throw ConfigError(path.string() + ":" + std::to_string(line.line_no) +
                              ": unknown section [" + line.section + "]");
        }
        continue;
    unknown:
        throw ConfigError(path.string() + ":" + std::to_string(line.line_no) +
                          ": unknown key \"" + where + "\"");
    }

    if (!study_exposure_set || !study_outcome_set) {
        throw ConfigError(path.string() +
                          ": [study] must set exposure_code and outcome_code");
    }
    // The generator mirrors the study's codes and window unless overridden.
    if (!gen_exposure_set) cfg.generator.exposure_code = cfg.study.exposure_code_prefix;
    if (!gen_outcome_set) cfg.generator.outcome_code = cfg.study.outcome_code_prefix;
    if (!gen_window_set) cfg.generator.outcome_window_days = cfg.study.outcome_window_days;

    try {
        cfg.study.validate();
        if (cfg.miner.min_support.num <= 0 ||
            cfg.miner.min_support.num > cfg.miner.min_support.den) {
            throw ArgumentError("miner.min_support must lie in (0,1]");
        }
        if (cfg.miner.max_itemset_size < 1) {
            throw ArgumentError("miner.max_itemset_size must be >= 1");
        }
        if (cfg.workers < 0) throw ArgumentError("output.workers must be >= 0");
        if (cfg.rollup_level < 0 || cfg.rollup_level > EventCode::kLength) {
            throw ArgumentError("data.rollup_level must lie in 0..5");
        }
    } catch (const ArgumentError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return cfg;
}

// Data files must exist before mine/run touches them.
inline void require_data_files(const RunConfig& cfg, const std::filesystem::path& config_path) {
    for (const auto& [label, p] :
         {std::pair{"data.patients", cfg.data.patients_path},
          std::pair{"data.events", cfg.data.events_path},
          std::pair{"data.prescriptions", cfg.data.prescriptions_path}}) {
        if (p.empty()) {
            throw ConfigError(config_path.string() + ": [data] is missing the " +
                              std::string(label) + " path");
        }
        if (!std::filesystem::exists(p)) {
            throw ConfigError(config_path.string() + ": " + std::string(label) + " file \"" +
                              p.string() + "\" does not exist");
        }
    }
}

}  // namespace ccsm
