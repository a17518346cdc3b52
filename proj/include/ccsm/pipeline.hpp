#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "ccsm/cohort_builder.hpp"
#include "ccsm/config.hpp"
#include "ccsm/ingest.hpp"
#include "ccsm/logit.hpp"
#include "ccsm/miner.hpp"
#include "ccsm/report.hpp"

namespace ccsm {

// Runs f(0..n-1) across a small worker pool. Work is claimed by index, so
// the caller collects results into index-addressed slots and the merged
// output is identical whatever the worker count. The first exception a
// worker raises is rethrown on the calling thread.
template <typename F>
void parallel_for(size_t n, int workers, F&& f) {
    if (workers <= 0) {
        workers = static_cast<int>(std::thread::hardware_concurrency());
        if (workers <= 0) workers = 1;
    }
    const size_t thread_count = std::min<size_t>(static_cast<size_t>(workers), n);
    if (thread_count <= 1) {
        for (size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (size_t t = 0; t < thread_count; ++t) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Steps 1-2: partition the preprocessed cohort and mine ratio-filtered
// candidates from D2.
struct MiningOutcome {
    PartitionResult partition;
    std::vector<CandidateItemset> all_candidates;       // every frequent itemset of D2
    std::vector<CandidateItemset> filtered_candidates;  // suppRatio > 1 only
};

inline MiningOutcome run_mining(const Cohort& preprocessed, const StudyDefinition& study,
                                const MinerConfig& miner_cfg) {
    MiningOutcome out;
    out.partition = partition(preprocessed, study);
    if (out.partition.d2.size() == 0) return out;  // no outcome group: nothing to mine
    const auto frequent = mine_frequent(out.partition.d2, miner_cfg);
    out.all_candidates.reserve(frequent.size());
    for (const auto& f : frequent) {
        out.all_candidates.push_back(support_ratio(f.itemset, out.partition.d1, out.partition.d2));
    }
    out.filtered_candidates = filter_candidates(out.all_candidates);
    return out;
}

struct PipelineResult {
    std::vector<ReportRow> rows;
    std::vector<CandidateItemset> candidates;  // the ratio-filtered mining table
    size_t candidate_count = 0;
    size_t flagged_count = 0;
    size_t d1_size = 0;
    size_t d2_size = 0;
    size_t case_count = 0;
    double elapsed_seconds = 0.0;
};

// The full four-step pipeline over an already-loaded raw cohort. One
// case-control selection is drawn per run and reused for every candidate;
// per-candidate fits run on the worker pool.
inline PipelineResult run_pipeline(const Cohort& raw_cohort, const StudyDefinition& study,
                                   const MinerConfig& miner_cfg, int workers = 0) {
    const auto started = std::chrono::steady_clock::now();
    PipelineResult result;

    const Cohort cohort = apply_first_year_exclusion(raw_cohort);
    auto mining = run_mining(cohort, study, miner_cfg);
    result.d1_size = mining.partition.d1.size();
    result.d2_size = mining.partition.d2.size();
    result.candidate_count = mining.filtered_candidates.size();

    const auto selection = select_cases_and_controls(cohort, study);
    for (const auto& sel : selection) result.case_count += sel.is_case ? 1 : 0;

    std::vector<FitResult> fits(mining.filtered_candidates.size());
    parallel_for(mining.filtered_candidates.size(), workers, [&](size_t i) {
        fits[i] = evaluate_candidate(mining.filtered_candidates[i].itemset, selection, study);
    });

    std::vector<std::pair<CandidateItemset, FitResult>> scored;
    scored.reserve(fits.size());
    for (size_t i = 0; i < fits.size(); ++i) {
        scored.emplace_back(mining.filtered_candidates[i], std::move(fits[i]));
    }
    result.rows = rank(scored);
    result.candidates = std::move(mining.filtered_candidates);
    for (const auto& row : result.rows) result.flagged_count += row.flagged() ? 1 : 0;
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace ccsm
