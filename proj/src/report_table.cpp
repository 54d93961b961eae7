#include "epicohort/report_table.hpp"

#include <array>
#include <sstream>

namespace epicohort {

const ReportKind kAllReportKinds[kReportKindCount] = {
    ReportKind::ResultBySex,
    ReportKind::CareByResult,
    ReportKind::CareBySex,
    ReportKind::IcuAmongHospitalizedPositives,
    ReportKind::IntubationAmongIcu,
    ReportKind::DeathsSummary,
    ReportKind::FatalityByState,
    ReportKind::ComorbidityFrequencies,
};

namespace {
constexpr std::array<std::string_view, kReportKindCount> kKindNames = {
    "result_by_sex",        "care_by_result",  "care_by_sex",       "icu_among_hospitalized_positives",
    "intubation_among_icu", "deaths_summary",  "fatality_by_state", "comorbidity_frequencies",
};
}

std::string_view kind_name(ReportKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

ReportKind parse_kind(std::string_view name) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == name) return static_cast<ReportKind>(i);
    throw UnknownKind(std::string(name));
}

std::string Percent::to_string() const {
    if (!hundredths_) return {};
    auto h = *hundredths_;
    std::string sign;
    if (h < 0) {
        sign = "-";
        h = -h;
    }
    auto frac = std::to_string(h % 100);
    if (frac.size() < 2) frac.insert(0, "0");
    return sign + std::to_string(h / 100) + "." + frac;
}

std::string describe(const ReportTable& table) {
    std::ostringstream os;
    os << kind_name(table.kind) << " [" << table.row_header << "]";
    for (const auto& c : table.column_labels) os << " | " << c;
    os << "\n";
    for (std::size_t r = 0; r < table.cells.size(); ++r) {
        os << (r < table.row_labels.size() ? table.row_labels[r] : "?");
        for (const auto& cell : table.cells[r]) {
            os << " | ";
            if (const auto* n = std::get_if<std::int64_t>(&cell))
                os << *n;
            else
                os << std::get<Percent>(cell).to_string();
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace epicohort
