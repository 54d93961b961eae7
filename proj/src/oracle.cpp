#include "epicohort/oracle.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <string>

namespace epicohort {

namespace {

enum { kPos, kNeg, kPend };
enum { kAmb, kHosp, kCareUnk };
enum { kNa, kYes, kNo, kUnk };  // ICU and intubation

struct Row {
    int state;
    int sex;  // 0 F, 1 M, 2 unspecified
    int test;
    int care;
    int icu;
    int intub;
    bool dead;
    const PatientRecord* record;
};

bool listed(const std::vector<std::string>& codes, const std::string& code) {
    return std::find(codes.begin(), codes.end(), code) != codes.end();
}

int tri(const CodeTable<TriState>& table, const std::string& code) {
    switch (table.decode(code)) {
        case TriState::Yes: return kYes;
        case TriState::No: return kNo;
        case TriState::Unspecified: return kUnk;
    }
    return kUnk;
}

std::vector<Row> select(const std::vector<PatientRecord>& records, const OracleFilter& sel, const SchemaConfig& schema) {
    std::vector<Row> rows;
    for (const auto& r : records) {
        int state = sel.by_residence ? r.residence.state_code : r.reporting_state;
        if (sel.indigenous_only && r.indigenous_speaker != TriState::Yes) continue;
        if (sel.states && sel.states->find(state) == sel.states->end()) continue;
        if (sel.municipalities && sel.municipalities->find(r.residence) == sel.municipalities->end()) continue;
        if (sel.onset_window) {
            if (!r.symptom_onset_date) continue;
            if (*r.symptom_onset_date < sel.onset_window->first || sel.onset_window->second < *r.symptom_onset_date)
                continue;
        }
        Row row{};
        row.record = &r;
        row.state = state;
        row.sex = r.sex == Sex::Female ? 0 : r.sex == Sex::Male ? 1 : 2;
        row.test = listed(schema.positive_codes, r.lab_result_code)   ? kPos
                   : listed(schema.negative_codes, r.lab_result_code) ? kNeg
                                                                      : kPend;
        auto care = schema.patient_type_catalog.decode(r.patient_type_code);
        row.care = care == CareType::Ambulatory ? kAmb : care == CareType::Hospitalized ? kHosp : kCareUnk;
        row.icu = row.care == kHosp ? tri(schema.tristate_catalog(Field::Icu), r.icu_code) : kNa;
        row.intub = row.icu == kYes ? tri(schema.tristate_catalog(Field::Intubated), r.intubated_code) : kNa;
        row.dead = r.death_date.has_value();
        rows.push_back(row);
    }
    return rows;
}

Cell count(long long n) { return Cell{static_cast<std::int64_t>(n)}; }

Cell percent(long long num, long long den) {
    auto h = oracle_percent_hundredths(static_cast<unsigned long long>(num), static_cast<unsigned long long>(den));
    return h ? Cell{Percent::from_hundredths(*h)} : Cell{Percent::undefined()};
}

// Generic table: grid[r][c] with optional (drop-if-zero) trailing row/column.
ReportTable assemble(ReportKind kind, std::string header, std::vector<std::string> row_labels,
                     std::vector<std::string> col_labels, std::vector<std::vector<long long>> grid,
                     bool last_row_optional, bool last_col_optional, bool total_row) {
    if (last_col_optional) {
        long long s = 0;
        for (auto& g : grid) s += g.back();
        if (s == 0) {
            for (auto& g : grid) g.pop_back();
            col_labels.pop_back();
        }
    }
    if (last_row_optional) {
        long long s = 0;
        for (auto v : grid.back()) s += v;
        if (s == 0) {
            grid.pop_back();
            row_labels.pop_back();
        }
    }
    ReportTable t;
    t.kind = kind;
    t.row_header = std::move(header);
    t.column_labels = col_labels;
    t.column_labels.push_back("Total");
    std::vector<long long> totals(col_labels.size() + 1, 0);
    for (std::size_t r = 0; r < grid.size(); ++r) {
        std::vector<Cell> line;
        long long s = 0;
        for (std::size_t c = 0; c < grid[r].size(); ++c) {
            line.push_back(count(grid[r][c]));
            totals[c] += grid[r][c];
            s += grid[r][c];
        }
        line.push_back(count(s));
        totals.back() += s;
        t.row_labels.push_back(row_labels[r]);
        t.cells.push_back(std::move(line));
    }
    if (total_row) {
        t.row_labels.push_back("Total");
        std::vector<Cell> line;
        for (auto v : totals) line.push_back(count(v));
        t.cells.push_back(std::move(line));
    }
    return t;
}

const std::vector<std::string> kSexLabels = {"Women", "Men", "Unspecified"};
const std::vector<std::string> kResultLabels = {"Positive", "Negative", "Pending"};
const std::vector<std::string> kCareLabels = {"Ambulatory", "Hospitalized", "Unspecified"};

}  // namespace

std::optional<long long> oracle_percent_hundredths(unsigned long long num, unsigned long long den) {
    if (den == 0) return std::nullopt;
    // Long division of 100*num/den to two decimals; the remainder decides rounding.
    unsigned long long whole = (num * 100) / den;
    unsigned long long rem = (num * 100) % den;
    unsigned long long tenths = (rem * 10) / den;
    rem = (rem * 10) % den;
    unsigned long long hundredths = (rem * 10) / den;
    rem = (rem * 10) % den;
    long long result = static_cast<long long>(whole * 100 + tenths * 10 + hundredths);
    if (rem * 2 >= den) ++result;
    return result;
}

ReportTable oracle_counts(const std::vector<PatientRecord>& records, ReportKind kind, const OracleFilter& selection,
                    const SchemaConfig& schema) {
    auto rows = select(records, selection, schema);
    switch (kind) {
        case ReportKind::ResultBySex: {
            std::vector<std::vector<long long>> g(3, std::vector<long long>(3, 0));
            for (const auto& r : rows) ++g[r.test][r.sex];
            return assemble(kind, "Result", kResultLabels, kSexLabels, g, false, true, true);
        }
        case ReportKind::CareByResult: {
            std::vector<std::vector<long long>> g(3, std::vector<long long>(3, 0));
            for (const auto& r : rows) ++g[r.test][r.care];
            return assemble(kind, "Result", kResultLabels, kCareLabels, g, false, true, true);
        }
        case ReportKind::CareBySex: {
            std::vector<std::vector<long long>> g(3, std::vector<long long>(3, 0));
            for (const auto& r : rows) ++g[r.sex][r.care];
            return assemble(kind, "Sex", kSexLabels, kCareLabels, g, true, true, true);
        }
        case ReportKind::IcuAmongHospitalizedPositives: {
            std::vector<std::vector<long long>> g(1, std::vector<long long>(3, 0));
            for (const auto& r : rows)
                if (r.test == kPos && r.care == kHosp) ++g[0][r.icu == kYes ? 0 : r.icu == kNo ? 1 : 2];
            return assemble(kind, "Patient type", {"Hospitalized"},
                            {"Intensive care unit", "No intensive care unit", "Unspecified"}, g, false, true, false);
        }
        case ReportKind::IntubationAmongIcu: {
            std::vector<std::vector<long long>> g(1, std::vector<long long>(3, 0));
            for (const auto& r : rows)
                if (r.test == kPos && r.care == kHosp && r.icu == kYes)
                    ++g[0][r.intub == kYes ? 0 : r.intub == kNo ? 1 : 2];
            return assemble(kind, "Patient type", {"Hospitalized intensive care unit"},
                            {"Intubated", "Not intubated", "Unspecified"}, g, false, true, false);
        }
        case ReportKind::DeathsSummary: {
            std::array<long long, 3> deaths{}, ventilated{};
            for (const auto& r : rows) {
                if (r.test != kPos || !r.dead) continue;
                ++deaths[r.sex];
                if (r.icu == kYes && r.intub == kYes) ++ventilated[r.sex];
            }
            std::size_t n = deaths[2] ? 3 : 2;
            ReportTable t;
            t.kind = kind;
            t.row_header = "Patient type";
            t.row_labels = {"Deceased positives", "ICU with intubation", "% deceased requiring ICU and intubation"};
            t.cells.resize(3);
            long long dt = 0, vt = 0;
            for (std::size_t s = 0; s < n; ++s) {
                t.column_labels.push_back(kSexLabels[s]);
                t.cells[0].push_back(count(deaths[s]));
                t.cells[1].push_back(count(ventilated[s]));
                t.cells[2].push_back(percent(ventilated[s], deaths[s]));
                dt += deaths[s];
                vt += ventilated[s];
            }
            t.column_labels.push_back("Total");
            t.cells[0].push_back(count(dt));
            t.cells[1].push_back(count(vt));
            t.cells[2].push_back(percent(vt, dt));
            return t;
        }
        case ReportKind::FatalityByState: {
            std::map<int, std::pair<long long, long long>> by_state;
            for (int s = 1; s <= kStateCount; ++s) by_state[s] = {0, 0};
            for (const auto& r : rows) {
                if (r.test != kPos) continue;
                auto& [d, p] = by_state[r.state];
                ++p;
                if (r.dead) ++d;
            }
            ReportTable t;
            t.kind = kind;
            t.row_header = "State";
            t.column_labels = {"Deaths", "Positives", "Case fatality rate"};
            long long td = 0, tp = 0;
            for (const auto& [s, dp] : by_state) {
                t.row_labels.push_back(std::to_string(s));
                t.cells.push_back({count(dp.first), count(dp.second), percent(dp.first, dp.second)});
                td += dp.first;
                tp += dp.second;
            }
            t.row_labels.push_back("Total");
            t.cells.push_back({count(td), count(tp), percent(td, tp)});
            return t;
        }
        case ReportKind::ComorbidityFrequencies: {
            ReportTable t;
            t.kind = kind;
            t.row_header = "Comorbidity";
            t.column_labels = {"Yes", "No", "Unspecified", "Total", "% Yes"};
            for (std::size_t c = 0; c < kComorbidityCount; ++c) {
                long long yes = 0, no = 0, unk = 0;
                for (const auto& r : rows) {
                    if (r.test != kPos || r.care != kHosp) continue;
                    auto v = r.record->comorbidities[c];
                    (v == TriState::Yes ? yes : v == TriState::No ? no : unk) += 1;
                }
                t.row_labels.emplace_back(comorbidity_label(static_cast<Comorbidity>(c)));
                t.cells.push_back({count(yes), count(no), count(unk), count(yes + no + unk), percent(yes, yes + no + unk)});
            }
            return t;
        }
    }
    throw UnknownKind(std::to_string(static_cast<int>(kind)));
}

}  // namespace epicohort
