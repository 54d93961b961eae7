#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <ostream>
#include <string>
#include <vector>

#include "epicohort/aggregator.hpp"
#include "epicohort/report_table.hpp"
#include "epicohort/schema_config.hpp"

namespace epicohort {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataFindings = 1;
inline constexpr int kExitFailure = 2;

struct RunConfig {
    std::filesystem::path input;
    std::optional<std::filesystem::path> schema;
    /// Directory for validate/report; target file for synth ("-" = stdout).
    std::filesystem::path out;
    std::vector<ReportKind> kinds;  // empty = all
    bool write_csv = true;
    bool write_json = true;
    CohortFilter filter;
    RegionBasis basis = RegionBasis::ReportingState;
    std::optional<std::filesystem::path> boundaries;
    std::string join_key = "CVE_ENT";
    bool municipal_rates = false;
    unsigned workers = 1;
    std::optional<InputEncoding> encoding;
    std::size_t error_cap = 20;
    bool quiet = false;

    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> rows;
    std::optional<std::filesystem::path> spec;
    std::optional<std::string> fixture;
};

/// "all" or a comma-separated list of kind names.
std::vector<ReportKind> parse_kind_list(std::string_view text);
/// Comma-separated state codes 1..32.
std::set<int> parse_state_list(std::string_view text);
/// "YYYY-MM-DD:YYYY-MM-DD", inclusive.
DateWindow parse_window(std::string_view text);

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_report(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_synth(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace epicohort
