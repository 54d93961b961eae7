#pragma once

#include <chrono>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "epicohort/aggregator.hpp"
#include "epicohort/ingest.hpp"
#include "epicohort/oracle.hpp"
#include "epicohort/rng.hpp"
#include "epicohort/synth.hpp"

namespace testsupport {

using namespace epicohort;

inline std::vector<PatientRecord> read_records(const std::string& csv, const SchemaConfig& schema) {
    std::istringstream in(csv);
    RecordStream stream(in, schema);
    std::vector<PatientRecord> out;
    while (auto r = stream.next())
        if (auto* rec = std::get_if<PatientRecord>(&*r)) out.push_back(std::move(*rec));
    return out;
}

inline std::vector<RowResult> read_results(const std::string& csv, const SchemaConfig& schema) {
    std::istringstream in(csv);
    RecordStream stream(in, schema);
    std::vector<RowResult> out;
    while (auto r = stream.next()) out.push_back(std::move(*r));
    return out;
}

/// n split into k non-negative parts at random cut points.
inline std::vector<std::uint64_t> random_partition(Rng& rng, std::uint64_t n, std::size_t k) {
    std::vector<std::uint64_t> cuts{0, n};
    for (std::size_t i = 1; i < k; ++i) cuts.push_back(rng.below(n + 1));
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::uint64_t> parts;
    for (std::size_t i = 1; i < cuts.size(); ++i) parts.push_back(cuts[i] - cuts[i - 1]);
    return parts;
}

/// Random generator spec: optional planted test x sex and care-by-test
/// marginals, code-distribution overrides and a few faults.
inline GeneratorSpec random_spec(Rng& rng, std::uint64_t max_rows) {
    GeneratorSpec spec;
    spec.seed = rng.next();
    spec.rows = rng.below(max_rows + 1);
    spec.deceased_per_mille = static_cast<std::uint32_t>(rng.below(400));
    if (rng.chance(1, 3)) spec.distributions[Field::Sex] = {{"1", 3}, {"2", 3}, {"99", 1}, {"7", 1}};
    if (rng.chance(1, 3)) spec.distributions[Field::Diabetes] = {{"1", 1}, {"2", 1}, {"98", 1}, {"", 1}};
    if (rng.chance(1, 4)) spec.distributions[Field::LabResult] = {{"1", 5}, {"2", 5}, {"3", 1}, {"4", 1}};

    if (rng.chance(1, 2)) {
        Marginal m{{PlantDim::TestStatus, PlantDim::Sex}, {}};
        auto parts = random_partition(rng, spec.rows, 9);
        for (int t = 0; t < 3; ++t)
            for (int s = 0; s < 3; ++s) m.cells.push_back({{t, s}, parts[static_cast<std::size_t>(t * 3 + s)]});
        spec.planted.push_back({m, std::nullopt});
        if (rng.chance(1, 2)) {
            Marginal c{{PlantDim::TestStatus, PlantDim::CareStatus}, {}};
            for (int t = 0; t < 3; ++t) {
                std::uint64_t group = 0;
                for (int s = 0; s < 3; ++s) group += parts[static_cast<std::size_t>(t * 3 + s)];
                auto care = random_partition(rng, group, 3);
                for (int k = 0; k < 3; ++k) c.cells.push_back({{t, k}, care[static_cast<std::size_t>(k)]});
            }
            spec.planted.push_back({c, std::nullopt});
        }
    }
    if (spec.rows > 0 && rng.chance(1, 3))
        for (auto& f : spec.faults) f = rng.below(std::min<std::uint64_t>(4, spec.rows / 5 + 1));
    return spec;
}

struct FilterPair {
    CohortFilter filter;
    OracleFilter oracle;
    RegionBasis basis = RegionBasis::ReportingState;
};

inline FilterPair random_filter(Rng& rng) {
    using namespace std::chrono;
    FilterPair f;
    if (rng.chance(1, 2)) {
        f.basis = RegionBasis::ResidenceState;
        f.oracle.by_residence = true;
    }
    if (rng.chance(1, 2)) f.filter.indigenous_only = f.oracle.indigenous_only = true;
    if (rng.chance(1, 3)) {
        std::set<int> states;
        auto n = rng.between(1, 20);
        for (int i = 0; i < n; ++i) states.insert(static_cast<int>(rng.between(1, kStateCount)));
        f.filter.states = f.oracle.states = states;
    }
    if (rng.chance(1, 6)) {
        std::set<RegionKey> munis;
        for (int i = 0; i < 200; ++i) {
            RegionKey k{static_cast<int>(rng.between(1, kStateCount)), std::nullopt};
            if (!rng.chance(1, 10)) k.municipality_code = static_cast<int>(rng.between(1, 60));
            munis.insert(k);
        }
        f.filter.municipalities = f.oracle.municipalities = munis;
    }
    if (rng.chance(1, 4)) {
        auto start = sys_days{year{2020} / March / 1} + days{rng.below(150)};
        auto end = start + days{rng.below(90)};
        f.filter.date_window = DateWindow{year_month_day{start}, year_month_day{end}};
        f.oracle.onset_window = std::pair{year_month_day{start}, year_month_day{end}};
    }
    return f;
}

}  // namespace testsupport

namespace testsupport {

/// Builds CSV text in the default profile's layout; every row starts from a
/// valid ambulatory negative and applies per-field overrides.
class CsvBuilder {
public:
    explicit CsvBuilder(SchemaConfig schema = SchemaConfig::default_profile()) : schema_(std::move(schema)) {
        for (std::size_t f = 0; f < kFieldCount; ++f)
            if (schema_.present(static_cast<Field>(f))) fields_.push_back(static_cast<Field>(f));
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            if (i) text_ += ',';
            text_ += *schema_.column(fields_[i]);
        }
        text_ += '\n';
    }

    CsvBuilder& row(std::map<Field, std::string> overrides = {}) {
        std::map<Field, std::string> v = {
            {Field::RecordId, "r" + std::to_string(++n_)},
            {Field::Sex, "1"},
            {Field::Age, "40"},
            {Field::ResidenceState, "9"},
            {Field::ResidenceMunicipality, "5"},
            {Field::ReportingState, "9"},
            {Field::PatientType, "1"},
            {Field::Icu, "97"},
            {Field::Intubated, "97"},
            {Field::LabResult, "2"},
            {Field::DeathDate, "9999-99-99"},
            {Field::SymptomOnsetDate, "2020-06-01"},
            {Field::IndigenousSpeaker, "2"},
            {Field::Contact, "2"},
        };
        for (auto& [f, s] : overrides) v[f] = s;
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            if (i) text_ += ',';
            auto it = v.find(fields_[i]);
            text_ += it != v.end() ? it->second : std::string("2");
        }
        text_ += '\n';
        return *this;
    }

    CsvBuilder& raw(const std::string& line) {
        text_ += line;
        return *this;
    }

    const std::string& text() const { return text_; }
    const SchemaConfig& schema() const { return schema_; }

private:
    SchemaConfig schema_;
    std::vector<Field> fields_;
    std::string text_;
    int n_ = 0;
};

}  // namespace testsupport
