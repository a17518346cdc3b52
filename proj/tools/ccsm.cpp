// ccsm command-line driver: synthetic fixture generation, candidate mining,
// and the full ranked-report pipeline.
//
// Exit codes (total mapping, no failure exits 0):
//   0  success
//   1  unexpected internal error
//   2  config problem (bad file, bad value, missing input path)
//   3  empty study (no exposed patients)
//   4  case-control matching failure (stratum exhausted)
//   5  I/O or data-content problem (unreadable/unwritable files, bad rows)

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "ccsm/config.hpp"
#include "ccsm/error.hpp"
#include "ccsm/ingest.hpp"
#include "ccsm/pipeline.hpp"
#include "ccsm/report.hpp"
#include "ccsm/synth.hpp"

namespace {

struct Options {
    std::string config_path;
    std::string out;
    bool seed_set = false;
    std::uint64_t seed = 0;
    int workers = -1;
};

int run_synth(const Options& opt) {
    ccsm::RunConfig cfg = ccsm::load_run_config(opt.config_path);
    if (opt.seed_set) cfg.generator.random_seed = opt.seed;
    if (opt.out.empty()) {
        throw ccsm::ConfigError("synth requires --out <directory> for the fixture files");
    }
    std::fprintf(stderr, "generating %d patients (seed %llu)\n", cfg.generator.n_patients,
                 static_cast<unsigned long long>(cfg.generator.random_seed));
    const ccsm::Cohort cohort = ccsm::generate(cfg.generator);
    const auto tables = ccsm::write_fixture(cohort, opt.out, cfg.data.delimiter);
    std::printf("patients=%zu\n", cohort.patients.size());
    std::fprintf(stderr, "wrote %s, %s, %s\n", tables.patients_path.c_str(),
                 tables.events_path.c_str(), tables.prescriptions_path.c_str());
    return 0;
}

int run_mine(const Options& opt) {
    ccsm::RunConfig cfg = ccsm::load_run_config(opt.config_path);
    if (opt.seed_set) cfg.study.random_seed = opt.seed;
    ccsm::require_data_files(cfg, opt.config_path);
    const std::filesystem::path out_path = !opt.out.empty() ? std::filesystem::path(opt.out) : cfg.candidates_path;
    if (out_path.empty()) {
        throw ccsm::ConfigError("mine needs an output path (--out or [output] candidates)");
    }
    std::fprintf(stderr, "loading cohort\n");
    ccsm::Cohort loaded = ccsm::load_cohort(cfg.data);
    if (cfg.rollup_level > 0) loaded = ccsm::roll_up_to_level(loaded, cfg.rollup_level);
    const ccsm::Cohort cohort = ccsm::apply_first_year_exclusion(loaded);
    std::fprintf(stderr, "mining candidates\n");
    const auto mining = ccsm::run_mining(cohort, cfg.study, cfg.miner);
    ccsm::write_candidates(mining.filtered_candidates, out_path);
    std::printf("d1=%zu d2=%zu candidates=%zu\n", mining.partition.d1.size(),
                mining.partition.d2.size(), mining.filtered_candidates.size());
    return 0;
}

int run_full(const Options& opt) {
    ccsm::RunConfig cfg = ccsm::load_run_config(opt.config_path);
    if (opt.seed_set) {
        cfg.study.random_seed = opt.seed;
        cfg.generator.random_seed = opt.seed;
    }
    if (opt.workers >= 0) cfg.workers = opt.workers;
    ccsm::require_data_files(cfg, opt.config_path);
    const std::filesystem::path report_path = !opt.out.empty() ? std::filesystem::path(opt.out) : cfg.report_path;
    if (report_path.empty()) {
        throw ccsm::ConfigError("run needs a report path (--out or [output] report)");
    }
    std::fprintf(stderr, "loading cohort\n");
    ccsm::Cohort raw = ccsm::load_cohort(cfg.data);
    if (cfg.rollup_level > 0) raw = ccsm::roll_up_to_level(raw, cfg.rollup_level);
    std::fprintf(stderr, "running pipeline over %zu patients\n", raw.patients.size());
    const auto result = ccsm::run_pipeline(raw, cfg.study, cfg.miner, cfg.workers);
    ccsm::emit(result.rows, report_path);
    if (!cfg.candidates_path.empty()) {
        // Secondary dump of the mined table when the config asks for it.
        ccsm::write_candidates(result.candidates, cfg.candidates_path);
    }
    std::printf("candidates=%zu flagged=%zu cases=%zu d1=%zu d2=%zu elapsed=%.3fs\n",
                result.candidate_count, result.flagged_count, result.case_count, result.d1_size,
                result.d2_size, result.elapsed_seconds);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contrast set mining of candidate risk factors from longitudinal records"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "sectioned key=value config file")
            ->required();
        sub->add_option("--seed", opt.seed, "override the configured random seed")
            ->each([&](const std::string&) { opt.seed_set = true; });
    };
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic cohort fixture");
    add_common(synth);
    synth->add_option("--out", opt.out, "directory for the generated table files");

    CLI::App* mine = app.add_subcommand("mine", "mine ratio-filtered candidate itemsets");
    add_common(mine);
    mine->add_option("--out", opt.out, "candidate table output file");

    CLI::App* full = app.add_subcommand("run", "run the full pipeline and write the report");
    add_common(full);
    full->add_option("--out", opt.out, "report output file");
    full->add_option("--workers", opt.workers, "worker thread limit (0 = all cores)");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return run_synth(opt);
        if (mine->parsed()) return run_mine(opt);
        return run_full(opt);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ccsm::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ccsm::EmptyStudyError& e) {
        std::fprintf(stderr, "empty study: %s\n", e.what());
        return 3;
    } catch (const ccsm::MatchingError& e) {
        std::fprintf(stderr, "matching failure: %s\n", e.what());
        return 4;
    } catch (const ccsm::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 5;
    } catch (const ccsm::IngestError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 5;
    } catch (const ccsm::ValidationError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
}
