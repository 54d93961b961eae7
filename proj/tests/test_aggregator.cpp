#include <doctest.h>

#include "epicohort/classifier.hpp"
#include "epicohort/pipeline.hpp"
#include "epicohort/reference_tables.hpp"
#include "support.hpp"

using namespace epicohort;

namespace {

const SchemaConfig& schema() {
    static const SchemaConfig s = SchemaConfig::default_profile();
    return s;
}

std::vector<PatientRecord> synth_records(std::uint64_t seed, std::uint64_t rows) {
    GeneratorSpec spec;
    spec.seed = seed;
    spec.rows = rows;
    spec.deceased_per_mille = 150;
    return testsupport::read_records(generate_records(spec, schema()), schema());
}

CohortAccumulator accumulate(const std::vector<PatientRecord>& records, std::size_t begin, std::size_t end,
                             const CohortFilter& filter = {}, RegionBasis basis = RegionBasis::ReportingState) {
    CohortAccumulator acc(basis);
    auto rules = SuspectRuleSet::default_rules();
    for (std::size_t i = begin; i < end; ++i) acc.accumulate(records[i], classify_patient(records[i], schema(), rules), filter);
    return acc;
}

std::int64_t int_cell(const ReportTable& t, std::size_t r, std::size_t c) { return std::get<std::int64_t>(t.cells[r][c]); }
Percent pct_cell(const ReportTable& t, std::size_t r, std::size_t c) { return std::get<Percent>(t.cells[r][c]); }

}  // namespace

TEST_CASE("fatality rate examples") {
    CHECK(fatality_rate(47472, 434193).to_string() == "10.93");
    CHECK(fatality_rate(67, 4555).to_string() == "1.47");
    CHECK(fatality_rate(4, 28).to_string() == "14.29");
    CHECK(fatality_rate(0, 8).to_string() == "0.00");
    CHECK(fatality_rate(1, 1).to_string() == "100.00");
    CHECK_FALSE(fatality_rate(0, 0).defined());
    CHECK_THROWS_AS(fatality_rate(3, 0), InconsistentCounts);
    CHECK(fatality_rate(5, 4).to_string() == "125.00");
}

TEST_CASE("rates round half up from exact integers") {
    CHECK(fatality_rate(1, 8).hundredths() == 1250);
    CHECK(fatality_rate(1, 800).hundredths() == 13);    // 0.125 -> 0.13
    CHECK(fatality_rate(1, 1600).hundredths() == 6);    // 0.0625 -> 0.06
    CHECK(fatality_rate(1, 3).hundredths() == 3333);
    CHECK(fatality_rate(2, 3).hundredths() == 6667);
}

TEST_CASE("rates agree with long division") {
    epicohort::Rng rng(9);
    for (int i = 0; i < 20000; ++i) {
        auto p = rng.between(1, i % 2 ? 1000 : 1000000000);
        auto d = rng.below(p + 1);
        CHECK(fatality_rate(d, p).hundredths() == *oracle_percent_hundredths(d, p));
    }
}

TEST_CASE("rates are scale invariant") {
    epicohort::Rng rng(10);
    for (int i = 0; i < 2000; ++i) {
        auto p = rng.between(1, 100000);
        auto d = rng.below(p + 1);
        auto k = rng.between(2, 1000);
        CHECK(fatality_rate(d * k, p * k) == fatality_rate(d, p));
    }
}

TEST_CASE("ICU-intubation death share") {
    CHECK(icu_intubated_death_share(18, 18).to_string() == "100.00");
    CHECK(icu_intubated_death_share(67, 67).to_string() == "100.00");
    CHECK(icu_intubated_death_share(1, 3).to_string() == "33.33");
    CHECK_FALSE(icu_intubated_death_share(0, 0).defined());
}

TEST_CASE("cell index round-trips over the whole cross") {
    for (std::size_t i = 0; i < CohortAccumulator::kCellCount; ++i)
        CHECK(CohortAccumulator::index_of(CohortAccumulator::key_of(i)) == i);
}

TEST_CASE("filter") {
    PatientRecord r;
    r.reporting_state = 5;
    r.residence = {7, 12};
    r.indigenous_speaker = TriState::No;
    r.symptom_onset_date = CalendarDate{std::chrono::year{2020}, std::chrono::month{4}, std::chrono::day{10}};

    CHECK(CohortFilter{}.accepts(r, RegionBasis::ReportingState));

    CohortFilter f;
    f.indigenous_only = true;
    CHECK_FALSE(f.accepts(r, RegionBasis::ReportingState));

    f = {};
    f.states = std::set<int>{5};
    CHECK(f.accepts(r, RegionBasis::ReportingState));
    CHECK_FALSE(f.accepts(r, RegionBasis::ResidenceState));

    f = {};
    f.municipalities = std::set<RegionKey>{{7, 12}};
    CHECK(f.accepts(r, RegionBasis::ReportingState));
    f.municipalities = std::set<RegionKey>{{7, std::nullopt}};
    CHECK_FALSE(f.accepts(r, RegionBasis::ReportingState));

    using namespace std::chrono;
    f = {};
    f.date_window = DateWindow{year{2020} / April / 10, year{2020} / April / 10};
    CHECK(f.accepts(r, RegionBasis::ReportingState));
    f.date_window = DateWindow{year{2020} / April / 11, year{2020} / May / 1};
    CHECK_FALSE(f.accepts(r, RegionBasis::ReportingState));
    r.symptom_onset_date.reset();
    f.date_window = DateWindow{year{2000} / 1 / 1, year{2030} / 1 / 1};
    CHECK_FALSE(f.accepts(r, RegionBasis::ReportingState));
}

TEST_CASE("accumulated tables match the brute-force recount") {
    auto records = synth_records(21, 3000);
    epicohort::Rng rng(21);
    for (int trial = 0; trial < 25; ++trial) {
        auto f = testsupport::random_filter(rng);
        auto acc = accumulate(records, 0, records.size(), f.filter, f.basis);
        for (auto kind : kAllReportKinds) {
            auto expected = oracle_counts(records, kind, f.oracle, schema());
            auto actual = build_table(acc, kind);
            CHECK_MESSAGE(actual == expected, describe(actual), "\n", describe(expected));
        }
    }
}

TEST_CASE("merge is associative and commutative with the empty accumulator as identity") {
    auto records = synth_records(22, 900);
    auto a = accumulate(records, 0, 300);
    auto b = accumulate(records, 300, 600);
    auto c = accumulate(records, 600, 900);
    CohortAccumulator empty;
    CHECK(merge(merge(a, b), c) == merge(a, merge(b, c)));
    CHECK(merge(a, b) == merge(b, a));
    CHECK(merge(a, empty) == a);
    CHECK(merge(empty, a) == a);
    CHECK(merge(merge(a, b), c) == accumulate(records, 0, 900));
    CHECK_THROWS_AS(CohortAccumulator(RegionBasis::ResidenceState).merge(a), std::invalid_argument);
}

TEST_CASE("any chunking gives the sequential result") {
    auto records = synth_records(23, 1200);
    auto whole = accumulate(records, 0, records.size());
    epicohort::Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        auto parts = testsupport::random_partition(rng, records.size(), static_cast<std::size_t>(rng.between(1, 12)));
        CohortAccumulator acc;
        std::size_t at = 0;
        for (auto n : parts) {
            acc.merge(accumulate(records, at, at + n));
            at += n;
        }
        CHECK(acc == whole);
    }
}

TEST_CASE("partition and totals") {
    auto records = synth_records(24, 2000);
    auto acc = accumulate(records, 0, records.size());
    auto pos = acc.sum([](const CellKey& k) { return k.test == TestStatus::Positive; });
    auto neg = acc.sum([](const CellKey& k) { return k.test == TestStatus::Negative; });
    auto pend = acc.sum([](const CellKey& k) { return k.test == TestStatus::Pending; });
    CHECK(pos + neg + pend == acc.total());
    CHECK(acc.total() == records.size());
    acc.for_each_cell([](const CellKey& k, std::uint64_t) {
        Classification c;
        c.care_status = k.care;
        c.icu_status = k.icu;
        c.intubation_status = k.intubation;
        CHECK(satisfies_gating(c));
    });
}

TEST_CASE("empty accumulator tables") {
    CohortAccumulator acc;
    auto deaths = build_table(acc, ReportKind::DeathsSummary);
    CHECK(deaths.rectangular());
    CHECK_FALSE(pct_cell(deaths, 2, deaths.column_labels.size() - 1).defined());

    auto rates = fatality_by_state(acc);
    REQUIRE(rates.size() == 33);
    CHECK_FALSE(rates.back().region);
    for (const auto& r : rates) CHECK_FALSE(r.rate_percent.defined());
    CHECK(fatality_by_municipality(acc).size() == 1);

    for (auto kind : kAllReportKinds) CHECK(build_table(acc, kind).rectangular());
}

TEST_CASE("snapshot round-trip") {
    auto records = synth_records(25, 500);
    auto acc = accumulate(records, 0, records.size(), {}, RegionBasis::ResidenceState);
    auto back = CohortAccumulator::from_json(nlohmann::ordered_json::parse(acc.to_json().dump()));
    CHECK(back == acc);

    auto j = acc.to_json();
    j["version"] = 999;
    CHECK_THROWS(CohortAccumulator::from_json(j));
}

TEST_CASE("footprint does not grow with record count") {
    auto small = accumulate(synth_records(26, 100), 0, 100);
    auto large_records = synth_records(27, 5000);
    auto large = accumulate(large_records, 0, large_records.size());
    CHECK(small.memory_footprint() > 0);
    // Municipality nodes are bounded by 32 * 61 regardless of volume.
    CHECK(large.memory_footprint() <= small.memory_footprint() + 32 * 61 * 96);
}

TEST_CASE("reference cohort margins") {
    auto s = SchemaConfig::default_profile();
    std::istringstream in(generate_records(reference_cohort_spec(1), s));
    PipelineOptions options;
    options.filter.indigenous_only = true;
    auto acc = run_pipeline(in, s, SuspectRuleSet::default_rules(), options).accumulator;

    auto t1 = build_table(acc, ReportKind::ResultBySex);
    CHECK(int_cell(t1, 0, 0) == 1845);
    CHECK(int_cell(t1, 0, 1) == 2710);
    CHECK(int_cell(t1, 1, 0) == 1937);
    CHECK(int_cell(t1, 1, 1) == 1843);
    CHECK(int_cell(t1, 2, 0) == 286);
    CHECK(int_cell(t1, 2, 1) == 317);
    CHECK(int_cell(t1, 3, 2) == 8938);

    auto icu = build_table(acc, ReportKind::IcuAmongHospitalizedPositives);
    CHECK(int_cell(icu, 0, 0) == 164);
    CHECK(int_cell(icu, 0, 1) == 1666);
    auto intub = build_table(acc, ReportKind::IntubationAmongIcu);
    CHECK(int_cell(intub, 0, 0) == 84);
    CHECK(int_cell(intub, 0, 1) == 80);

    auto deaths = build_table(acc, ReportKind::DeathsSummary);
    CHECK(int_cell(deaths, 0, 0) == 18);
    CHECK(int_cell(deaths, 0, 1) == 49);
    CHECK(int_cell(deaths, 0, 2) == 67);
    CHECK(pct_cell(deaths, 2, 2).to_string() == "100.00");

    auto rates = fatality_by_state(acc);
    for (int s = 0; s < kStateCount; ++s) {
        CHECK(rates[static_cast<std::size_t>(s)].deaths == static_cast<std::uint64_t>(kIndigenousByState[s].deaths));
        CHECK(rates[static_cast<std::size_t>(s)].positives == static_cast<std::uint64_t>(kIndigenousByState[s].positives));
    }
    CHECK(rates.back().rate_percent.to_string() == "1.47");
}
