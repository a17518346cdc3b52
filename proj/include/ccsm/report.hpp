#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ccsm/csv.hpp"
#include "ccsm/error.hpp"
#include "ccsm/logit.hpp"
#include "ccsm/miner.hpp"

namespace ccsm {

struct ReportRow {
    Itemset itemset;
    double supp_d2 = 0.0;
    double supp_d1 = 0.0;
    double supp_ratio = 0.0;
    double p_age = 0.0;
    double p_gender = 0.0;
    double p_exposure = 0.0;
    double p_x = 0.0;
    double p_interaction = 0.0;
    bool flag_separation = false;
    bool flag_collinear = false;

    bool flagged() const { return flag_separation || flag_collinear; }

    std::string flags_str() const {
        std::string out;
        if (flag_separation) out += "separation";
        if (flag_collinear) out += out.empty() ? "collinear" : "|collinear";
        return out;
    }
};

inline ReportRow make_report_row(const CandidateItemset& candidate, const FitResult& fit) {
    ReportRow row{candidate.itemset};
    row.supp_d2 = candidate.supp_d2;
    row.supp_d1 = candidate.supp_d1;
    row.supp_ratio = candidate.supp_ratio;
    row.p_age = fit.p_values[1];
    row.p_gender = fit.p_values[2];
    row.p_x = fit.p_values[3];
    row.p_exposure = fit.p_values[4];
    row.p_interaction = fit.p_values[5];
    row.flag_separation = fit.separation;
    row.flag_collinear = fit.collinear;
    return row;
}

// Step 4: ascending interaction p-value, ties broken by descending support
// ratio then itemset order; flagged rows sort after every clean row under
// the same discipline. NaN p-values (collinear fits) sort last.
inline std::vector<ReportRow> rank(
    const std::vector<std::pair<CandidateItemset, FitResult>>& candidates) {
    std::vector<ReportRow> rows;
    rows.reserve(candidates.size());
    for (const auto& [candidate, fit] : candidates) rows.push_back(make_report_row(candidate, fit));

    auto p_key = [](const ReportRow& r) {
        return std::isnan(r.p_interaction) ? std::numeric_limits<double>::infinity()
                                           : r.p_interaction;
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const ReportRow& a, const ReportRow& b) {
        if (a.flagged() != b.flagged()) return !a.flagged();
        if (p_key(a) != p_key(b)) return p_key(a) < p_key(b);
        if (a.supp_ratio != b.supp_ratio) return a.supp_ratio > b.supp_ratio;
        return a.itemset < b.itemset;
    });
    return rows;
}

inline constexpr const char* kReportHeader =
    "rank,itemset,supp_d2,supp_d1,supp_ratio,p_age,p_gender,p_exposure,p_x,p_interaction,flags";

// Deterministic byte output: supports to 6 significant digits, p-values in
// scientific notation with 3. The rank column is informational only.
inline void emit(const std::vector<ReportRow>& rows, std::ostream& out) {
    out << kReportHeader << '\n';
    size_t rank_no = 0;
    for (const auto& row : rows) {
        out << ++rank_no << ',' << row.itemset.str() << ','
            << format_significant(row.supp_d2, 6) << ',' << format_significant(row.supp_d1, 6)
            << ',' << format_significant(row.supp_ratio, 6) << ','
            << format_scientific(row.p_age, 3) << ',' << format_scientific(row.p_gender, 3)
            << ',' << format_scientific(row.p_exposure, 3) << ','
            << format_scientific(row.p_x, 3) << ',' << format_scientific(row.p_interaction, 3)
            << ',' << row.flags_str() << '\n';
    }
}

inline void emit(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    emit(rows, out);
    out.flush();
    if (!out) throw IoError("failed writing report to " + path.string());
}

// Parses a file produced by emit back into rows (values at the printed
// precision). Used for round-trip checks and by downstream consumers.
inline std::vector<ReportRow> parse_report(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != kReportHeader) {
        throw IngestError("report header mismatch");
    }
    std::vector<ReportRow> rows;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(std::move(line));
        if (line.empty()) continue;
        const auto fields = split_fields(line, ',');
        if (fields.size() != 11) {
            throw IngestError("report line " + std::to_string(line_no) + ": expected 11 fields");
        }
        ReportRow row{Itemset::parse(fields[1])};
        row.supp_d2 = std::strtod(fields[2].c_str(), nullptr);
        row.supp_d1 = std::strtod(fields[3].c_str(), nullptr);
        row.supp_ratio = std::strtod(fields[4].c_str(), nullptr);
        row.p_age = std::strtod(fields[5].c_str(), nullptr);
        row.p_gender = std::strtod(fields[6].c_str(), nullptr);
        row.p_exposure = std::strtod(fields[7].c_str(), nullptr);
        row.p_x = std::strtod(fields[8].c_str(), nullptr);
        row.p_interaction = std::strtod(fields[9].c_str(), nullptr);
        row.flag_separation = fields[10].find("separation") != std::string::npos;
        row.flag_collinear = fields[10].find("collinear") != std::string::npos;
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<ReportRow> parse_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return parse_report(in);
}

}  // namespace ccsm
