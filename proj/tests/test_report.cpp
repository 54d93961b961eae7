#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "epicohort/classifier.hpp"
#include "epicohort/pipeline.hpp"
#include "epicohort/reference_tables.hpp"
#include "epicohort/report.hpp"
#include "epicohort/synth.hpp"

using namespace epicohort;
using json = nlohmann::ordered_json;

namespace {

std::vector<FatalityRateRow> national_rates() {
    std::vector<FatalityRateRow> rows;
    for (int s = 0; s < kStateCount; ++s) {
        auto d = static_cast<std::uint64_t>(kNationalByState[s].deaths);
        auto p = static_cast<std::uint64_t>(kNationalByState[s].positives);
        rows.push_back({RegionKey{s + 1, std::nullopt}, d, p, fatality_rate(d, p)});
    }
    return rows;
}

std::string boundaries(std::vector<std::string> codes, bool padded = false) {
    std::string out = "{\"type\": \"FeatureCollection\",\n \"features\": [";
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (i) out += ",";
        auto code = codes[i];
        if (padded && code.size() < 2) code = "0" + code;
        out += "\n  {\"type\":\"Feature\", \"properties\": {\"CVE_ENT\": \"" + code + "\", \"NOM\": \"n" + code +
               "\"}, \"geometry\": {\"type\":\"Point\",\"coordinates\":[-99.1332000001, 19.4326]}}";
    }
    return out + "\n]}\n";
}

std::vector<std::string> all_codes() {
    std::vector<std::string> codes;
    for (int s = 1; s <= kStateCount; ++s) codes.push_back(std::to_string(s));
    return codes;
}

ReportTable reference_table(ReportKind kind) {
    auto s = SchemaConfig::default_profile();
    std::istringstream in(generate_records(reference_cohort_spec(1), s));
    PipelineOptions options;
    options.filter.indigenous_only = true;
    return build_table(run_pipeline(in, s, SuspectRuleSet::default_rules(), options).accumulator, kind);
}

}  // namespace

TEST_CASE("single-cell CSV") {
    ReportTable t;
    t.kind = ReportKind::ResultBySex;
    t.row_header = "Result";
    t.column_labels = {"Total"};
    t.row_labels = {"Positive"};
    t.cells = {{std::int64_t{7}}};
    CHECK(emit_csv(t) == "Result,Total\r\nPositive,7\r\n");
}

TEST_CASE("CSV quoting, rates and undefined cells") {
    ReportTable t;
    t.kind = ReportKind::DeathsSummary;
    t.row_header = "a,b";
    t.column_labels = {"say \"hi\"", "rate"};
    t.row_labels = {"r"};
    t.cells = {{Percent::from_hundredths(1093), Percent::undefined()}};
    CHECK(emit_csv(t) == "\"a,b\",\"say \"\"hi\"\"\",rate\r\nr,10.93,\r\n");
}

TEST_CASE("fatality CSV has a row per state and a total") {
    CohortAccumulator acc;
    auto csv = emit_csv(build_table(acc, ReportKind::FatalityByState));
    std::size_t lines = 0;
    for (std::size_t p = 0; (p = csv.find("\r\n", p)) != std::string::npos; p += 2) ++lines;
    CHECK(lines == 34);
    CHECK(csv.find("Total,0,0,\r\n") != std::string::npos);
}

TEST_CASE("JSON for an empty table") {
    ReportTable t;
    t.kind = ReportKind::IntubationAmongIcu;
    t.row_header = "Patient type";
    auto j = json::parse(emit_json(t));
    CHECK(j["kind"] == "intubation_among_icu");
    CHECK(j["columns"].empty());
    CHECK(j["cells"].empty());
    CHECK(parse_table_json(emit_json(t)) == t);
}

TEST_CASE("intubation table of the reference cohort") {
    auto t = reference_table(ReportKind::IntubationAmongIcu);
    auto j = json::parse(emit_json(t));
    CHECK(j["cells"][0] == json::array({84, 80, 164}));
    CHECK(emit_csv(t).find("84,80,164") != std::string::npos);
}

TEST_CASE("JSON round-trips every table") {
    for (auto kind : kAllReportKinds) {
        auto t = reference_table(kind);
        CHECK(parse_table_json(emit_json(t)) == t);
    }
    CohortAccumulator empty;
    for (auto kind : kAllReportKinds) {
        auto t = build_table(empty, kind);
        CHECK(parse_table_json(emit_json(t)) == t);
    }
}

TEST_CASE("national rate table") {
    auto rates = national_rates();
    CHECK(rates[16].rate_percent.to_string() == "20.39");
    CHECK(fatality_rate(static_cast<std::uint64_t>(kNationalTotal.deaths), static_cast<std::uint64_t>(kNationalTotal.positives))
              .to_string() == "10.93");
}

TEST_CASE("choropleth joins every state") {
    auto rates = national_rates();
    auto result = emit_choropleth(rates, boundaries(all_codes()), "CVE_ENT");
    CHECK(result.matched_features == 32);
    CHECK(result.join_misses.empty());
    auto j = json::parse(result.geojson);
    REQUIRE(j["features"].size() == 32);
    const auto& morelos = j["features"][16]["properties"];
    CHECK(morelos["CVE_ENT"] == "17");
    CHECK(morelos["NOM"] == "n17");
    CHECK(morelos["deaths"] == 836);
    CHECK(morelos["positives"] == 4101);
    CHECK(morelos["rate_percent"].get<double>() == doctest::Approx(20.39));
}

TEST_CASE("choropleth copies geometry bytes") {
    auto geo = boundaries(all_codes());
    auto result = emit_choropleth(national_rates(), geo, "CVE_ENT");
    const std::string geometry = "{\"type\":\"Point\",\"coordinates\":[-99.1332000001, 19.4326]}";
    std::size_t copies = 0;
    for (auto p = result.geojson.find(geometry); p != std::string::npos; p = result.geojson.find(geometry, p + 1)) ++copies;
    CHECK(copies == 32);
}

TEST_CASE("zero-padded and numeric join codes") {
    auto padded = emit_choropleth(national_rates(), boundaries(all_codes(), true), "CVE_ENT");
    CHECK(padded.matched_features == 32);

    std::string numeric = "{\"type\":\"FeatureCollection\",\"features\":[{\"type\":\"Feature\",\"properties\":{\"CVE_ENT\":17},"
                          "\"geometry\":null}]}";
    auto r = emit_choropleth(national_rates(), numeric, "CVE_ENT");
    CHECK(r.matched_features == 1);
    CHECK(r.join_misses.size() == 31);
}

TEST_CASE("rate rows without a boundary feature are reported") {
    auto rates = national_rates();
    rates.push_back({RegionKey{99, std::nullopt}, 1, 2, fatality_rate(1, 2)});
    auto result = emit_choropleth(rates, boundaries(all_codes()), "CVE_ENT");
    CHECK(result.join_misses == std::vector<long>{99});
}

TEST_CASE("features without a rate get null") {
    auto codes = all_codes();
    codes.push_back("40");
    auto j = json::parse(emit_choropleth(national_rates(), boundaries(codes), "CVE_ENT").geojson);
    CHECK(j["features"][32]["properties"]["rate_percent"].is_null());
}

TEST_CASE("duplicate rate rows are rejected") {
    auto rates = national_rates();
    rates.push_back(rates[3]);
    CHECK_THROWS_AS(emit_choropleth(rates, boundaries(all_codes()), "CVE_ENT"), DuplicateRegion);
}

TEST_CASE("malformed boundaries") {
    CHECK_THROWS_AS(emit_choropleth(national_rates(), "{", "CVE_ENT"), GeoJsonError);
    CHECK_THROWS_AS(emit_choropleth(national_rates(), "{\"type\":\"Feature\"}", "CVE_ENT"), GeoJsonError);
}

TEST_CASE("municipal join codes") {
    CHECK(join_code(RegionKey{17, std::nullopt}) == 17);
    CHECK(join_code(RegionKey{17, 7}) == 17007);
}

TEST_CASE("atomic writes replace the target") {
    auto dir = std::filesystem::temp_directory_path() / "epicohort-report-test";
    std::filesystem::create_directories(dir);
    auto path = dir / "t.csv";
    write_file_atomic(path, "one");
    write_file_atomic(path, "two");
    std::ifstream in(path);
    std::string s;
    std::getline(in, s);
    CHECK(s == "two");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
    CHECK(entries == 1);
    std::filesystem::remove_all(dir);
}
