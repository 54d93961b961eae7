#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "epicohort/record_model.hpp"
#include "epicohort/report_table.hpp"
#include "epicohort/schema_config.hpp"

namespace epicohort {

/// Record selection, restated independently of the production filter.
struct OracleFilter {
    bool indigenous_only = false;
    bool by_residence = false;
    std::optional<std::set<int>> states;
    std::optional<std::set<RegionKey>> municipalities;
    std::optional<std::pair<CalendarDate, CalendarDate>> onset_window;
};

/// Brute-force recount of one report kind straight from the records, with the
/// same table layout as the production pipeline.
/// Throws UnknownKind.
ReportTable oracle_counts(const std::vector<PatientRecord>& records, ReportKind kind, const OracleFilter& filter,
                          const SchemaConfig& schema);

/// 100 * num / den rounded half-up to hundredths, via decimal long division.
std::optional<long long> oracle_percent_hundredths(unsigned long long num, unsigned long long den);

}  // namespace epicohort
