#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "epicohort/aggregator.hpp"
#include "epicohort/report_table.hpp"

namespace epicohort {

/// RFC-4180 CSV: header row (row header + column labels), CRLF line ends,
/// rates with exactly two decimals, Undefined as an empty cell.
std::string emit_csv(const ReportTable& table);

/// {"kind", "row_header", "columns", "rows", "cells"}; counts are integers,
/// rates are numbers (null when Undefined). Key order is fixed.
std::string emit_json(const ReportTable& table);
/// Inverse of emit_json.
ReportTable parse_table_json(std::string_view text);

class DuplicateRegion : public std::invalid_argument {
public:
    explicit DuplicateRegion(long code) : std::invalid_argument("region appears twice in rates: " + std::to_string(code)), code_(code) {}
    long code() const { return code_; }

private:
    long code_;
};

class GeoJsonError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ChoroplethResult {
    std::string geojson;
    std::vector<long> join_misses;  // region codes present in rates but not in boundaries
    std::size_t matched_features = 0;
};

/// Join code used for a rate row: the state code, or state*1000 + municipality
/// (INEGI concatenated key) for municipality rows.
long join_code(const RegionKey& region);

/// Adds {deaths, positives, rate_percent} to every boundary feature whose
/// `join_key` property matches a rate row; other features get rate_percent =
/// null. Everything outside the properties objects is copied byte-for-byte.
ChoroplethResult emit_choropleth(const std::vector<FatalityRateRow>& rates, std::string_view boundaries,
                                 std::string_view join_key);

/// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace epicohort
