#include "epicohort/aggregator.hpp"

#include <functional>
#include <stdexcept>

namespace epicohort {

namespace {

struct Branch {
    CareStatus care;
    IcuStatus icu;
    IntubationStatus intubation;
};

constexpr std::array<Branch, CohortAccumulator::kBranchCount> kBranches = {{
    {CareStatus::Ambulatory, IcuStatus::NotApplicable, IntubationStatus::NotApplicable},
    {CareStatus::Unspecified, IcuStatus::NotApplicable, IntubationStatus::NotApplicable},
    {CareStatus::Hospitalized, IcuStatus::InICU, IntubationStatus::Intubated},
    {CareStatus::Hospitalized, IcuStatus::InICU, IntubationStatus::NotIntubated},
    {CareStatus::Hospitalized, IcuStatus::InICU, IntubationStatus::Unspecified},
    {CareStatus::Hospitalized, IcuStatus::NotInICU, IntubationStatus::NotApplicable},
    {CareStatus::Hospitalized, IcuStatus::Unspecified, IntubationStatus::NotApplicable},
}};

std::size_t branch_of(CareStatus care, IcuStatus icu, IntubationStatus intubation) {
    for (std::size_t b = 0; b < kBranches.size(); ++b)
        if (kBranches[b].care == care && kBranches[b].icu == icu && kBranches[b].intubation == intubation) return b;
    throw std::invalid_argument("classification violates the care/ICU/intubation gating");
}

constexpr std::uint64_t kPercentScale = 10000;  // 100 (percent) * 100 (two decimals)

Percent half_up_percent(std::uint64_t num, std::uint64_t den) {
    auto scaled = num * kPercentScale;
    auto q = scaled / den;
    auto r = scaled % den;
    if (2 * r >= den) ++q;
    return Percent::from_hundredths(static_cast<std::int64_t>(q));
}

std::vector<Cell> count_row(const std::vector<std::uint64_t>& values) {
    std::vector<Cell> row;
    row.reserve(values.size());
    for (auto v : values) row.emplace_back(static_cast<std::int64_t>(v));
    return row;
}

// Appends a trailing total to `values`.
std::vector<std::uint64_t> with_total(std::vector<std::uint64_t> values) {
    std::uint64_t t = 0;
    for (auto v : values) t += v;
    values.push_back(t);
    return values;
}

const char* sex_label(Sex s) {
    switch (s) {
        case Sex::Female: return "Women";
        case Sex::Male: return "Men";
        case Sex::Unspecified: break;
    }
    return "Unspecified";
}

}  // namespace

std::string_view to_string(RegionBasis b) { return b == RegionBasis::ReportingState ? "reporting" : "residence"; }

std::optional<RegionBasis> parse_region_basis(std::string_view s) {
    if (s == "reporting") return RegionBasis::ReportingState;
    if (s == "residence") return RegionBasis::ResidenceState;
    return std::nullopt;
}

int attributed_state(const PatientRecord& record, RegionBasis basis) {
    return basis == RegionBasis::ReportingState ? record.reporting_state : record.residence.state_code;
}

bool CohortFilter::accepts(const PatientRecord& record, RegionBasis basis) const {
    if (indigenous_only && record.indigenous_speaker != TriState::Yes) return false;
    if (states && !states->count(attributed_state(record, basis))) return false;
    if (municipalities && !municipalities->count(record.residence)) return false;
    if (date_window) {
        if (!record.symptom_onset_date) return false;
        const auto& d = *record.symptom_onset_date;
        if (d < date_window->start || d > date_window->end) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

CohortAccumulator::CohortAccumulator(RegionBasis basis) : basis_(basis), cells_(kCellCount, 0) {}

std::size_t CohortAccumulator::index_of(const CellKey& k) {
    if (k.state < 1 || k.state > kStateCount) throw std::out_of_range("state code outside 1..32");
    auto i = static_cast<std::size_t>(k.state - 1);
    i = i * 3 + static_cast<std::size_t>(k.sex);
    i = i * 3 + static_cast<std::size_t>(k.test);
    i = i * kBranchCount + branch_of(k.care, k.icu, k.intubation);
    i = i * 2 + static_cast<std::size_t>(k.vital);
    return i;
}

CellKey CohortAccumulator::key_of(std::size_t index) {
    CellKey k;
    k.vital = static_cast<VitalStatus>(index % 2);
    index /= 2;
    const auto& br = kBranches[index % kBranchCount];
    k.care = br.care;
    k.icu = br.icu;
    k.intubation = br.intubation;
    index /= kBranchCount;
    k.test = static_cast<TestStatus>(index % 3);
    index /= 3;
    k.sex = static_cast<Sex>(index % 3);
    index /= 3;
    k.state = static_cast<int>(index) + 1;
    return k;
}

void CohortAccumulator::accumulate(const PatientRecord& record, const Classification& c, const CohortFilter& filter) {
    if (!filter.accepts(record, basis_)) return;
    CellKey key{attributed_state(record, basis_), record.sex,          c.test_status, c.care_status,
                c.icu_status,                     c.intubation_status, c.vital_status};
    ++cells_[index_of(key)];
    ++total_;
    if (c.intubation_reported_outside_icu) ++intubated_outside_icu_;
    if (c.test_status != TestStatus::Positive) return;

    auto& muni = municipal_[record.residence];
    ++muni.positives;
    if (c.vital_status == VitalStatus::Deceased) ++muni.deaths;

    if (c.care_status == CareStatus::Hospitalized)
        for (std::size_t i = 0; i < kComorbidityCount; ++i)
            ++comorbidities_[i][static_cast<std::size_t>(record.comorbidities[i])];
}

CohortAccumulator& CohortAccumulator::merge(const CohortAccumulator& other) {
    if (basis_ != other.basis_) throw std::invalid_argument("cannot merge accumulators with different region basis");
    total_ += other.total_;
    for (std::size_t i = 0; i < kCellCount; ++i) cells_[i] += other.cells_[i];
    for (std::size_t i = 0; i < kComorbidityCount; ++i)
        for (std::size_t v = 0; v < 3; ++v) comorbidities_[i][v] += other.comorbidities_[i][v];
    for (const auto& [key, counts] : other.municipal_) {
        auto& mine = municipal_[key];
        mine.deaths += counts.deaths;
        mine.positives += counts.positives;
    }
    intubated_outside_icu_ += other.intubated_outside_icu_;
    rejected_rows_ += other.rejected_rows_;
    return *this;
}

CohortAccumulator merge(CohortAccumulator a, const CohortAccumulator& b) {
    a.merge(b);
    return a;
}

std::size_t CohortAccumulator::memory_footprint() const {
    // rb-tree node: three pointers + colour, rounded, plus payload
    constexpr std::size_t kNodeOverhead = 4 * sizeof(void*);
    return sizeof(*this) + cells_.capacity() * sizeof(std::uint64_t) +
           municipal_.size() * (kNodeOverhead + sizeof(std::pair<const RegionKey, RateCounts>));
}

namespace {
constexpr int kSnapshotVersion = 1;
constexpr const char* kSnapshotFormat = "epicohort-accumulator";
}  // namespace

nlohmann::ordered_json CohortAccumulator::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = kSnapshotFormat;
    j["version"] = kSnapshotVersion;
    j["region_basis"] = std::string(to_string(basis_));
    j["total"] = total_;
    auto& cells = j["cells"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < kCellCount; ++i)
        if (cells_[i]) cells.push_back({i, cells_[i]});
    auto& com = j["comorbidities"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < kComorbidityCount; ++i)
        com[std::string(comorbidity_name(static_cast<Comorbidity>(i)))] = comorbidities_[i];
    auto& muni = j["municipal"] = nlohmann::ordered_json::array();
    for (const auto& [key, counts] : municipal_) {
        nlohmann::ordered_json m = key.municipality_code ? nlohmann::ordered_json(*key.municipality_code) : nullptr;
        muni.push_back({key.state_code, m, counts.deaths, counts.positives});
    }
    j["intubated_outside_icu"] = intubated_outside_icu_;
    j["rejected_rows"] = rejected_rows_;
    return j;
}

CohortAccumulator CohortAccumulator::from_json(const nlohmann::ordered_json& j) {
    if (j.value("format", "") != kSnapshotFormat) throw std::invalid_argument("not an accumulator snapshot");
    if (j.value("version", 0) != kSnapshotVersion)
        throw std::invalid_argument("unsupported accumulator snapshot version");
    auto basis = parse_region_basis(j.at("region_basis").get<std::string>());
    if (!basis) throw std::invalid_argument("bad region_basis in snapshot");
    CohortAccumulator acc(*basis);
    acc.total_ = j.at("total").get<std::uint64_t>();
    for (const auto& cell : j.at("cells")) {
        auto idx = cell.at(0).get<std::size_t>();
        if (idx >= kCellCount) throw std::invalid_argument("cell index out of range in snapshot");
        acc.cells_[idx] = cell.at(1).get<std::uint64_t>();
    }
    for (std::size_t i = 0; i < kComorbidityCount; ++i) {
        const auto& v = j.at("comorbidities").at(std::string(comorbidity_name(static_cast<Comorbidity>(i))));
        for (std::size_t k = 0; k < 3; ++k) acc.comorbidities_[i][k] = v.at(k).get<std::uint64_t>();
    }
    for (const auto& m : j.at("municipal")) {
        RegionKey key{m.at(0).get<int>(), std::nullopt};
        if (!m.at(1).is_null()) key.municipality_code = m.at(1).get<int>();
        acc.municipal_[key] = RateCounts{m.at(2).get<std::uint64_t>(), m.at(3).get<std::uint64_t>()};
    }
    acc.intubated_outside_icu_ = j.at("intubated_outside_icu").get<std::uint64_t>();
    acc.rejected_rows_ = j.at("rejected_rows").get<std::uint64_t>();
    return acc;
}

// ---------------------------------------------------------------------------
// Rates

Percent fatality_rate(std::uint64_t deaths, std::uint64_t positives) {
    if (positives == 0) {
        if (deaths == 0) return Percent::undefined();
        throw InconsistentCounts("deaths recorded over a slice with zero positives");
    }
    return half_up_percent(deaths, positives);
}

Percent icu_intubated_death_share(std::uint64_t icu_intubated_deaths, std::uint64_t all_deaths) {
    if (all_deaths == 0) return Percent::undefined();
    return half_up_percent(icu_intubated_deaths, all_deaths);
}

std::vector<FatalityRateRow> fatality_by_state(const CohortAccumulator& acc) {
    std::array<RateCounts, kStateCount> per_state{};
    acc.for_each_cell([&](const CellKey& k, std::uint64_t n) {
        if (k.test != TestStatus::Positive) return;
        auto& rc = per_state[static_cast<std::size_t>(k.state - 1)];
        rc.positives += n;
        if (k.vital == VitalStatus::Deceased) rc.deaths += n;
    });
    std::vector<FatalityRateRow> rows;
    RateCounts total;
    for (int s = 1; s <= kStateCount; ++s) {
        const auto& rc = per_state[static_cast<std::size_t>(s - 1)];
        rows.push_back({RegionKey{s, std::nullopt}, rc.deaths, rc.positives, fatality_rate(rc.deaths, rc.positives)});
        total.deaths += rc.deaths;
        total.positives += rc.positives;
    }
    rows.push_back({std::nullopt, total.deaths, total.positives, fatality_rate(total.deaths, total.positives)});
    return rows;
}

std::vector<FatalityRateRow> fatality_by_municipality(const CohortAccumulator& acc) {
    std::vector<FatalityRateRow> rows;
    RateCounts total;
    for (const auto& [key, rc] : acc.municipal()) {
        rows.push_back({key, rc.deaths, rc.positives, fatality_rate(rc.deaths, rc.positives)});
        total.deaths += rc.deaths;
        total.positives += rc.positives;
    }
    rows.push_back({std::nullopt, total.deaths, total.positives, fatality_rate(total.deaths, total.positives)});
    return rows;
}

// ---------------------------------------------------------------------------
// Tables

namespace {

struct Axis {
    std::string label;
    std::function<bool(const CellKey&)> match;
    bool optional = false;  // dropped when its whole line is zero
};

// Cross-tab of `rows` x `cols` over cells passing `universe`, with a Total
// column and (optionally) a Total row.
ReportTable cross_tab(const CohortAccumulator& acc, ReportKind kind, std::string row_header, std::vector<Axis> rows,
                      std::vector<Axis> cols, const std::function<bool(const CellKey&)>& universe, bool total_row) {
    std::vector<std::vector<std::uint64_t>> grid(rows.size(), std::vector<std::uint64_t>(cols.size(), 0));
    acc.for_each_cell([&](const CellKey& k, std::uint64_t n) {
        if (!universe(k)) return;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!rows[r].match(k)) continue;
            for (std::size_t c = 0; c < cols.size(); ++c)
                if (cols[c].match(k)) grid[r][c] += n;
        }
    });

    std::vector<bool> keep_col(cols.size(), true);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (!cols[c].optional) continue;
        std::uint64_t s = 0;
        for (const auto& row : grid) s += row[c];
        keep_col[c] = s != 0;
    }

    ReportTable t;
    t.kind = kind;
    t.row_header = std::move(row_header);
    for (std::size_t c = 0; c < cols.size(); ++c)
        if (keep_col[c]) t.column_labels.push_back(cols[c].label);
    t.column_labels.push_back("Total");

    std::vector<std::uint64_t> column_sums;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::vector<std::uint64_t> line;
        for (std::size_t c = 0; c < cols.size(); ++c)
            if (keep_col[c]) line.push_back(grid[r][c]);
        line = with_total(std::move(line));
        std::uint64_t row_sum = line.back();
        if (rows[r].optional && row_sum == 0) continue;
        if (column_sums.empty()) column_sums.assign(line.size(), 0);
        for (std::size_t c = 0; c < line.size(); ++c) column_sums[c] += line[c];
        t.row_labels.push_back(rows[r].label);
        t.cells.push_back(count_row(line));
    }
    if (total_row) {
        if (column_sums.empty()) column_sums.assign(t.column_labels.size(), 0);
        t.row_labels.push_back("Total");
        t.cells.push_back(count_row(column_sums));
    }
    return t;
}

auto is_test(TestStatus s) {
    return [s](const CellKey& k) { return k.test == s; };
}
auto is_sex(Sex s) {
    return [s](const CellKey& k) { return k.sex == s; };
}
auto is_care(CareStatus s) {
    return [s](const CellKey& k) { return k.care == s; };
}
bool everything(const CellKey&) { return true; }

std::vector<Axis> result_rows() {
    return {{"Positive", is_test(TestStatus::Positive)},
            {"Negative", is_test(TestStatus::Negative)},
            {"Pending", is_test(TestStatus::Pending)}};
}
std::vector<Axis> sex_axis() {
    return {{sex_label(Sex::Female), is_sex(Sex::Female)},
            {sex_label(Sex::Male), is_sex(Sex::Male)},
            {sex_label(Sex::Unspecified), is_sex(Sex::Unspecified), true}};
}
std::vector<Axis> care_axis() {
    return {{"Ambulatory", is_care(CareStatus::Ambulatory)},
            {"Hospitalized", is_care(CareStatus::Hospitalized)},
            {"Unspecified", is_care(CareStatus::Unspecified), true}};
}

bool hospitalized_positive(const CellKey& k) {
    return k.test == TestStatus::Positive && k.care == CareStatus::Hospitalized;
}

ReportTable deaths_summary(const CohortAccumulator& acc) {
    std::array<std::uint64_t, 3> deaths{}, icu_intubated{};
    acc.for_each_cell([&](const CellKey& k, std::uint64_t n) {
        if (k.test != TestStatus::Positive || k.vital != VitalStatus::Deceased) return;
        deaths[static_cast<std::size_t>(k.sex)] += n;
        if (k.icu == IcuStatus::InICU && k.intubation == IntubationStatus::Intubated)
            icu_intubated[static_cast<std::size_t>(k.sex)] += n;
    });
    std::vector<std::size_t> sexes = {0, 1};
    if (deaths[2] != 0) sexes.push_back(2);

    ReportTable t;
    t.kind = ReportKind::DeathsSummary;
    t.row_header = "Patient type";
    std::vector<std::uint64_t> d, ii;
    for (auto s : sexes) {
        t.column_labels.push_back(sex_label(static_cast<Sex>(s)));
        d.push_back(deaths[s]);
        ii.push_back(icu_intubated[s]);
    }
    t.column_labels.push_back("Total");
    d = with_total(std::move(d));
    ii = with_total(std::move(ii));
    std::vector<Cell> share;
    for (std::size_t i = 0; i < d.size(); ++i) share.emplace_back(icu_intubated_death_share(ii[i], d[i]));
    t.row_labels = {"Deceased positives", "ICU with intubation", "% deceased requiring ICU and intubation"};
    t.cells = {count_row(d), count_row(ii), std::move(share)};
    return t;
}

ReportTable fatality_table(const CohortAccumulator& acc) {
    ReportTable t;
    t.kind = ReportKind::FatalityByState;
    t.row_header = "State";
    t.column_labels = {"Deaths", "Positives", "Case fatality rate"};
    for (const auto& row : fatality_by_state(acc)) {
        t.row_labels.push_back(row.region ? std::to_string(row.region->state_code) : "Total");
        t.cells.push_back({static_cast<std::int64_t>(row.deaths), static_cast<std::int64_t>(row.positives),
                           row.rate_percent});
    }
    return t;
}

ReportTable comorbidity_table(const CohortAccumulator& acc) {
    ReportTable t;
    t.kind = ReportKind::ComorbidityFrequencies;
    t.row_header = "Comorbidity";
    t.column_labels = {"Yes", "No", "Unspecified", "Total", "% Yes"};
    for (std::size_t i = 0; i < kComorbidityCount; ++i) {
        auto c = static_cast<Comorbidity>(i);
        auto yes = acc.comorbidity(c, TriState::Yes);
        auto no = acc.comorbidity(c, TriState::No);
        auto unspecified = acc.comorbidity(c, TriState::Unspecified);
        auto total = yes + no + unspecified;
        t.row_labels.emplace_back(comorbidity_label(c));
        auto row = count_row({yes, no, unspecified, total});
        row.emplace_back(total ? half_up_percent(yes, total) : Percent::undefined());
        t.cells.push_back(std::move(row));
    }
    return t;
}

}  // namespace

ReportTable build_table(const CohortAccumulator& acc, ReportKind kind) {
    switch (kind) {
        case ReportKind::ResultBySex:
            return cross_tab(acc, kind, "Result", result_rows(), sex_axis(), everything, true);
        case ReportKind::CareByResult:
            return cross_tab(acc, kind, "Result", result_rows(), care_axis(), everything, true);
        case ReportKind::CareBySex:
            return cross_tab(acc, kind, "Sex", sex_axis(), care_axis(), everything, true);
        case ReportKind::IcuAmongHospitalizedPositives:
            return cross_tab(acc, kind, "Patient type", {{"Hospitalized", everything}},
                             {{"Intensive care unit", [](const CellKey& k) { return k.icu == IcuStatus::InICU; }},
                              {"No intensive care unit", [](const CellKey& k) { return k.icu == IcuStatus::NotInICU; }},
                              {"Unspecified", [](const CellKey& k) { return k.icu == IcuStatus::Unspecified; }, true}},
                             hospitalized_positive, false);
        case ReportKind::IntubationAmongIcu:
            return cross_tab(
                acc, kind, "Patient type", {{"Hospitalized intensive care unit", everything}},
                {{"Intubated", [](const CellKey& k) { return k.intubation == IntubationStatus::Intubated; }},
                 {"Not intubated", [](const CellKey& k) { return k.intubation == IntubationStatus::NotIntubated; }},
                 {"Unspecified", [](const CellKey& k) { return k.intubation == IntubationStatus::Unspecified; }, true}},
                [](const CellKey& k) { return hospitalized_positive(k) && k.icu == IcuStatus::InICU; }, false);
        case ReportKind::DeathsSummary:
            return deaths_summary(acc);
        case ReportKind::FatalityByState:
            return fatality_table(acc);
        case ReportKind::ComorbidityFrequencies:
            return comorbidity_table(acc);
    }
    throw UnknownKind(std::to_string(static_cast<int>(kind)));
}

}  // namespace epicohort
