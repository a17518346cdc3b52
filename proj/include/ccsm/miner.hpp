#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ccsm/csv.hpp"
#include "ccsm/error.hpp"
#include "ccsm/patient.hpp"

namespace ccsm {

// Exact rational in [0,1], used so support-threshold comparisons never hit
// float boundaries: an itemset with count c in m transactions is frequent
// iff c * den > num * m.
struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Fraction parse_decimal(std::string_view text) {
        const std::string s(text);
        if (s.size() > 12) {  // keeps the cross-multiplied comparisons in range
            throw ValidationError("decimal fraction \"" + s + "\" has too many digits");
        }
        const size_t dot = s.find('.');
        std::int64_t num = 0, den = 1;
        auto digits = [&](std::string_view part) {
            for (char c : part) {
                if (c < '0' || c > '9') {
                    throw ValidationError("malformed decimal fraction \"" + s + "\"");
                }
                num = num * 10 + (c - '0');
            }
        };
        if (dot == std::string::npos) {
            digits(s);
        } else {
            digits(std::string_view(s).substr(0, dot));
            const auto frac = std::string_view(s).substr(dot + 1);
            digits(frac);
            for (size_t i = 0; i < frac.size(); ++i) den *= 10;
        }
        if (s.empty() || (dot != std::string::npos && s.size() == 1)) {
            throw ValidationError("malformed decimal fraction \"" + s + "\"");
        }
        const std::int64_t g = std::gcd(num, den);
        return {num / g, den / g};
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    bool operator==(const Fraction&) const = default;
};

// Canonical itemset: non-empty, sorted, unique.
class Itemset {
public:
    explicit Itemset(std::vector<Item> items) : items_(std::move(items)) {
        std::sort(items_.begin(), items_.end());
        items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
        if (items_.empty()) throw ArgumentError("itemset must be non-empty");
    }
    Itemset(std::initializer_list<Item> items) : Itemset(std::vector<Item>(items)) {}

    size_t size() const { return items_.size(); }
    const std::vector<Item>& items() const { return items_; }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    bool contains(const Item& item) const {
        return std::binary_search(items_.begin(), items_.end(), item);
    }
    bool subset_of(const std::vector<Item>& sorted_items) const {
        return std::includes(sorted_items.begin(), sorted_items.end(), items_.begin(),
                             items_.end());
    }

    Itemset united_with(const Itemset& other) const {
        std::vector<Item> merged = items_;
        merged.insert(merged.end(), other.items_.begin(), other.items_.end());
        return Itemset(std::move(merged));
    }

    // Codes joined by '&' (drug items carry their "Rx:" marker).
    std::string str() const {
        std::string out;
        for (const auto& item : items_) {
            if (!out.empty()) out += '&';
            out += item.str();
        }
        return out;
    }

    static Itemset parse(std::string_view text) {
        std::vector<Item> items;
        size_t start = 0;
        while (start <= text.size()) {
            const size_t pos = text.find('&', start);
            const auto part =
                text.substr(start, pos == std::string_view::npos ? pos : pos - start);
            items.push_back(Item::parse(part));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        return Itemset(std::move(items));
    }

    bool operator==(const Itemset&) const = default;
    auto operator<=>(const Itemset& other) const {
        return std::lexicographical_compare_three_way(items_.begin(), items_.end(),
                                                      other.items_.begin(), other.items_.end());
    }

private:
    std::vector<Item> items_;
};

// The set-of-itemsets view of a patient group. Each transaction is a
// sorted, duplicate-free list of items.
struct TransactionDB {
    std::vector<std::vector<Item>> transactions;

    size_t size() const { return transactions.size(); }

    void add(std::vector<Item> items) {
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
        transactions.push_back(std::move(items));
    }
};

struct MinerConfig {
    Fraction min_support{1, 20};  // the threshold the support must strictly exceed
    int max_itemset_size = 3;
};

struct FrequentItemset {
    Itemset itemset;
    std::int64_t count = 0;
    double support = 0.0;
};

inline std::int64_t support_count(const Itemset& x, const TransactionDB& db) {
    std::int64_t count = 0;
    for (const auto& t : db.transactions) {
        if (x.subset_of(t)) ++count;
    }
    return count;
}

inline double support(const Itemset& x, const TransactionDB& db) {
    if (db.size() == 0) throw ArgumentError("support is undefined on an empty database");
    return static_cast<double>(support_count(x, db)) / static_cast<double>(db.size());
}

inline double confidence(const Itemset& x, const Itemset& y, const TransactionDB& db) {
    const double supp_x = support(x, db);
    if (supp_x == 0.0) {
        throw ArgumentError("confidence of rule with unsupported antecedent {" + x.str() +
                            "} is undefined");
    }
    return support(x.united_with(y), db) / supp_x;
}

namespace detail {

// Dense-id encoding of a database for the level-wise search. For item
// universes up to 4096 the transactions are held as bitsets, otherwise as
// sorted id arrays.
struct EncodedDB {
    std::vector<Item> id_to_item;                     // dense id -> item
    std::vector<std::vector<std::uint32_t>> rows;     // sorted ids per transaction
    std::vector<std::uint64_t> bits;                  // rows.size() x words bitset
    size_t words = 0;
    bool use_bits = false;

    explicit EncodedDB(const TransactionDB& db) {
        std::map<Item, std::uint32_t> index;
        rows.reserve(db.size());
        for (const auto& t : db.transactions) {
            std::vector<std::uint32_t> row;
            row.reserve(t.size());
            for (const auto& item : t) {
                auto [it, inserted] = index.emplace(item, id_to_item.size());
                if (inserted) id_to_item.push_back(item);
                row.push_back(it->second);
            }
            std::sort(row.begin(), row.end());
            rows.push_back(std::move(row));
        }
        use_bits = id_to_item.size() <= 4096;
        if (use_bits) {
            words = (id_to_item.size() + 63) / 64;
            bits.assign(rows.size() * std::max<size_t>(words, 1), 0);
            for (size_t r = 0; r < rows.size(); ++r) {
                for (const auto id : rows[r]) {
                    bits[r * words + id / 64] |= std::uint64_t{1} << (id % 64);
                }
            }
        }
    }

    bool row_contains(size_t row, const std::vector<std::uint32_t>& candidate) const {
        if (use_bits) {
            const std::uint64_t* w = bits.data() + row * words;
            for (const auto id : candidate) {
                if (!(w[id / 64] & (std::uint64_t{1} << (id % 64)))) return false;
            }
            return true;
        }
        return std::includes(rows[row].begin(), rows[row].end(), candidate.begin(),
                             candidate.end());
    }
};

}  // namespace detail

// Level-wise (Apriori) search for all itemsets up to max_itemset_size with
// support strictly greater than the minimum. Candidates at level k are
// joins of level-(k-1) survivors sharing a (k-2)-prefix, pruned by the
// anti-monotone subset condition before counting.
inline std::vector<FrequentItemset> mine_frequent(const TransactionDB& db,
                                                  const MinerConfig& cfg) {
    if (db.size() == 0) throw ArgumentError("cannot mine an empty database");
    if (cfg.min_support.num <= 0 || cfg.min_support.num > cfg.min_support.den) {
        throw ArgumentError("min_support must lie in (0,1]");
    }
    if (cfg.max_itemset_size < 1) throw ArgumentError("max_itemset_size must be >= 1");

    const detail::EncodedDB enc(db);
    const auto m = static_cast<std::int64_t>(db.size());
    const auto frequent = [&](std::int64_t count) {
        return count * cfg.min_support.den > cfg.min_support.num * m;
    };

    std::vector<FrequentItemset> result;
    const size_t n_items = enc.id_to_item.size();

    // Level 1: one counting pass over the universe.
    std::vector<std::int64_t> singles(n_items, 0);
    for (const auto& row : enc.rows) {
        for (const auto id : row) ++singles[id];
    }
    std::vector<std::vector<std::uint32_t>> level;
    std::vector<std::int64_t> level_counts;
    for (std::uint32_t id = 0; id < n_items; ++id) {
        if (frequent(singles[id])) {
            level.push_back({id});
            level_counts.push_back(singles[id]);
        }
    }

    auto emit_level = [&]() {
        for (size_t i = 0; i < level.size(); ++i) {
            std::vector<Item> items;
            items.reserve(level[i].size());
            for (const auto id : level[i]) items.push_back(enc.id_to_item[id]);
            result.push_back({Itemset(std::move(items)), level_counts[i],
                              static_cast<double>(level_counts[i]) / static_cast<double>(m)});
        }
    };
    emit_level();

    for (int k = 2; k <= cfg.max_itemset_size && level.size() >= 2; ++k) {
        // Join step: pairs sharing the first k-2 ids (level is sorted).
        std::vector<std::vector<std::uint32_t>> candidates;
        for (size_t i = 0; i < level.size(); ++i) {
            for (size_t j = i + 1; j < level.size(); ++j) {
                if (!std::equal(level[i].begin(), level[i].end() - 1, level[j].begin())) break;
                std::vector<std::uint32_t> cand = level[i];
                cand.push_back(level[j].back());
                // Prune: every (k-1)-subset must itself be frequent. Dropping
                // the last id reproduces level[i], which is frequent already.
                bool ok = true;
                for (size_t drop = 0; ok && drop + 1 < cand.size(); ++drop) {
                    std::vector<std::uint32_t> subset;
                    subset.reserve(cand.size() - 1);
                    for (size_t q = 0; q < cand.size(); ++q) {
                        if (q != drop) subset.push_back(cand[q]);
                    }
                    ok = std::binary_search(level.begin(), level.end(), subset);
                }
                if (ok) candidates.push_back(std::move(cand));
            }
        }
        if (candidates.empty()) break;

        std::vector<std::int64_t> counts(candidates.size(), 0);
        for (size_t r = 0; r < enc.rows.size(); ++r) {
            for (size_t c = 0; c < candidates.size(); ++c) {
                if (enc.row_contains(r, candidates[c])) ++counts[c];
            }
        }

        std::vector<std::vector<std::uint32_t>> next;
        std::vector<std::int64_t> next_counts;
        for (size_t c = 0; c < candidates.size(); ++c) {
            if (frequent(counts[c])) {
                next.push_back(std::move(candidates[c]));
                next_counts.push_back(counts[c]);
            }
        }
        level = std::move(next);
        level_counts = std::move(next_counts);
        emit_level();
    }
    return result;
}

// A mined itemset together with its supports in the outcome group (d2) and
// the comparison group (d1) and their ratio.
struct CandidateItemset {
    Itemset itemset;
    double supp_d2 = 0.0;
    double supp_d1 = 0.0;
    double supp_ratio = 0.0;
};

// Ratio of two supports; zero support in the comparison group maps to the
// +infinity sentinel, which ranks above every finite ratio.
inline double support_ratio_value(double supp_d2, double supp_d1) {
    if (supp_d1 == 0.0) return std::numeric_limits<double>::infinity();
    return supp_d2 / supp_d1;
}

inline CandidateItemset support_ratio(const Itemset& x, const TransactionDB& d1,
                                      const TransactionDB& d2) {
    const double supp_d2 = support(x, d2);
    if (supp_d2 == 0.0) {
        throw ArgumentError("support ratio requires {" + x.str() +
                            "} to occur in the outcome database");
    }
    const double supp_d1 = d1.size() == 0 ? 0.0 : support(x, d1);
    return {x, supp_d2, supp_d1, support_ratio_value(supp_d2, supp_d1)};
}

// Keeps exactly the candidates whose ratio strictly exceeds 1 (infinity
// included), preserving order.
inline std::vector<CandidateItemset> filter_candidates(std::vector<CandidateItemset> candidates) {
    std::erase_if(candidates, [](const CandidateItemset& c) { return !(c.supp_ratio > 1.0); });
    return candidates;
}

// Table of mined candidates, one row per itemset.
inline constexpr const char* kCandidateHeader = "itemset,supp_d2,supp_d1,supp_ratio";

inline void write_candidates(const std::vector<CandidateItemset>& candidates, std::ostream& out) {
    out << kCandidateHeader << '\n';
    for (const auto& c : candidates) {
        out << c.itemset.str() << ',' << format_significant(c.supp_d2, 6) << ','
            << format_significant(c.supp_d1, 6) << ',' << format_significant(c.supp_ratio, 6)
            << '\n';
    }
}

inline void write_candidates(const std::vector<CandidateItemset>& candidates,
                             const std::filesystem::path& path) {
    auto out = open_for_write(path);
    write_candidates(candidates, out);
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace ccsm
