#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace epicohort {

enum class ReportKind {
    ResultBySex,
    CareByResult,
    CareBySex,
    IcuAmongHospitalizedPositives,
    IntubationAmongIcu,
    DeathsSummary,
    FatalityByState,
    ComorbidityFrequencies,
};

inline constexpr std::size_t kReportKindCount = 8;
extern const ReportKind kAllReportKinds[kReportKindCount];

class UnknownKind : public std::invalid_argument {
public:
    explicit UnknownKind(const std::string& name) : std::invalid_argument("unknown report kind: " + name) {}
};

/// snake_case file stem, e.g. "fatality_by_state".
std::string_view kind_name(ReportKind kind);
/// Throws UnknownKind.
ReportKind parse_kind(std::string_view name);

/// A percentage held as an exact count of hundredths; nullopt is Undefined.
class Percent {
public:
    Percent() = default;
    static Percent from_hundredths(std::int64_t h) { return Percent(h); }
    static Percent undefined() { return Percent(); }

    bool defined() const { return hundredths_.has_value(); }
    std::int64_t hundredths() const { return hundredths_.value(); }
    /// "10.93", or "" when undefined.
    std::string to_string() const;

    friend bool operator==(const Percent&, const Percent&) = default;

private:
    explicit Percent(std::int64_t h) : hundredths_(h) {}
    std::optional<std::int64_t> hundredths_;
};

/// Counts or rates; a table may mix both (e.g. a rate row under count rows).
using Cell = std::variant<std::int64_t, Percent>;

struct ReportTable {
    ReportKind kind{};
    std::string row_header;
    std::vector<std::string> column_labels;
    std::vector<std::string> row_labels;
    std::vector<std::vector<Cell>> cells;

    bool rectangular() const {
        for (const auto& row : cells)
            if (row.size() != column_labels.size()) return false;
        return cells.size() == row_labels.size();
    }

    friend bool operator==(const ReportTable&, const ReportTable&) = default;
};

/// Human-readable dump for test failure messages.
std::string describe(const ReportTable& table);

}  // namespace epicohort
