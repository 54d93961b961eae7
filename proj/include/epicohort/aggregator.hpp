#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "epicohort/classification.hpp"
#include "epicohort/record_model.hpp"
#include "epicohort/report_table.hpp"

namespace epicohort {

/// Which state a patient is attributed to in state-level output.
enum class RegionBasis { ReportingState, ResidenceState };
std::string_view to_string(RegionBasis b);
std::optional<RegionBasis> parse_region_basis(std::string_view s);

struct DateWindow {
    CalendarDate start;
    CalendarDate end;  // inclusive
};

/// Cohort selection. A default-constructed filter accepts every record.
struct CohortFilter {
    bool indigenous_only = false;
    std::optional<std::set<int>> states;              // matched against the attributed state
    std::optional<std::set<RegionKey>> municipalities;  // matched against residence
    std::optional<DateWindow> date_window;            // on symptom onset; undated records fail

    bool accepts(const PatientRecord& record, RegionBasis basis) const;
};

int attributed_state(const PatientRecord& record, RegionBasis basis);

/// One primary counter cell of the stratification cross.
struct CellKey {
    int state = 1;
    Sex sex = Sex::Unspecified;
    TestStatus test = TestStatus::Pending;
    CareStatus care = CareStatus::Unspecified;
    IcuStatus icu = IcuStatus::NotApplicable;
    IntubationStatus intubation = IntubationStatus::NotApplicable;
    VitalStatus vital = VitalStatus::NotRecordedDeceased;
};

struct RateCounts {
    std::uint64_t deaths = 0;
    std::uint64_t positives = 0;
    friend bool operator==(const RateCounts&, const RateCounts&) = default;
};

class InconsistentCounts : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Mergeable stratified counters. Cells cover the full cross of
/// (state, sex, test, care/ICU/intubation branch, vital status); only branch
/// combinations that satisfy the gating rules have storage.
class CohortAccumulator {
public:
    static constexpr std::size_t kBranchCount = 7;
    static constexpr std::size_t kCellCount = kStateCount * 3 * 3 * kBranchCount * 2;

    explicit CohortAccumulator(RegionBasis basis = RegionBasis::ReportingState);

    /// Adds the record iff `filter` accepts it. Classification must satisfy gating.
    void accumulate(const PatientRecord& record, const Classification& c, const CohortFilter& filter);
    void note_rejected_rows(std::uint64_t n) { rejected_rows_ += n; }

    /// Cell-wise sum. Throws std::invalid_argument on differing region basis.
    CohortAccumulator& merge(const CohortAccumulator& other);

    RegionBasis region_basis() const { return basis_; }
    std::uint64_t total() const { return total_; }
    std::uint64_t count(const CellKey& key) const { return cells_[index_of(key)]; }
    std::uint64_t comorbidity(Comorbidity c, TriState v) const {
        return comorbidities_[static_cast<std::size_t>(c)][static_cast<std::size_t>(v)];
    }
    std::uint64_t intubated_outside_icu() const { return intubated_outside_icu_; }
    std::uint64_t rejected_rows() const { return rejected_rows_; }
    const std::map<RegionKey, RateCounts>& municipal() const { return municipal_; }

    /// Visits every cell with a non-zero count.
    template <class Fn>
    void for_each_cell(Fn&& fn) const {
        for (std::size_t i = 0; i < kCellCount; ++i)
            if (cells_[i]) fn(key_of(i), cells_[i]);
    }

    /// Sum over cells whose key satisfies `pred`.
    template <class Pred>
    std::uint64_t sum(Pred&& pred) const {
        std::uint64_t s = 0;
        for (std::size_t i = 0; i < kCellCount; ++i)
            if (cells_[i] && pred(key_of(i))) s += cells_[i];
        return s;
    }

    /// Bytes owned by the counters (dense cells plus municipality map nodes).
    std::size_t memory_footprint() const;

    /// Versioned JSON snapshot; `from_json` rejects unknown versions.
    nlohmann::ordered_json to_json() const;
    static CohortAccumulator from_json(const nlohmann::ordered_json& j);

    friend bool operator==(const CohortAccumulator&, const CohortAccumulator&) = default;

    static std::size_t index_of(const CellKey& key);
    static CellKey key_of(std::size_t index);

private:
    RegionBasis basis_;
    std::uint64_t total_ = 0;
    std::vector<std::uint64_t> cells_;
    std::array<std::array<std::uint64_t, 3>, kComorbidityCount> comorbidities_{};  // hospitalized positives
    std::map<RegionKey, RateCounts> municipal_;                                   // positives by residence
    std::uint64_t intubated_outside_icu_ = 0;
    std::uint64_t rejected_rows_ = 0;
};

CohortAccumulator merge(CohortAccumulator a, const CohortAccumulator& b);

/// 100 * deaths / positives, rounded half-up to 2 decimals from exact integers.
/// Undefined for 0/0; InconsistentCounts for deaths > 0 over zero positives.
Percent fatality_rate(std::uint64_t deaths, std::uint64_t positives);

/// 100 * icu_intubated_deaths / all_deaths, half-up to 2 decimals; Undefined when all_deaths = 0.
Percent icu_intubated_death_share(std::uint64_t icu_intubated_deaths, std::uint64_t all_deaths);

struct FatalityRateRow {
    std::optional<RegionKey> region;  // nullopt == Total
    std::uint64_t deaths = 0;
    std::uint64_t positives = 0;
    Percent rate_percent;

    friend bool operator==(const FatalityRateRow&, const FatalityRateRow&) = default;
};

/// One row per state 1..32 plus a trailing Total row.
std::vector<FatalityRateRow> fatality_by_state(const CohortAccumulator& acc);
/// Per residence municipality with at least one positive, plus Total.
std::vector<FatalityRateRow> fatality_by_municipality(const CohortAccumulator& acc);

ReportTable build_table(const CohortAccumulator& acc, ReportKind kind);

}  // namespace epicohort
