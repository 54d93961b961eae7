#include <doctest.h>

#include <sstream>

#include "support.hpp"

using namespace epicohort;
using testsupport::CsvBuilder;

namespace {

const RowError& error_of(const RowResult& r) { return std::get<RowError>(r); }
const PatientRecord& record_of(const RowResult& r) { return std::get<PatientRecord>(r); }

ValidationReport validate_text(const std::string& text, std::size_t cap = 20) {
    std::istringstream in(text);
    ValidationOptions options;
    options.error_cap = cap;
    return validate_dataset(in, SchemaConfig::default_profile(), options);
}

}  // namespace

TEST_CASE("CsvReader handles quoting, embedded newlines and CRLF") {
    std::istringstream in("a,\"b,c\",\"d\"\"e\"\r\n\"multi\nline\",,x\r\nlast,row");
    CsvReader reader(in, 4);
    std::vector<std::string> cells;
    REQUIRE(reader.next(cells));
    CHECK(cells == std::vector<std::string>{"a", "b,c", "d\"e"});
    REQUIRE(reader.next(cells));
    CHECK(cells == std::vector<std::string>{"multi\nline", "", "x"});
    REQUIRE(reader.next(cells));
    CHECK(cells == std::vector<std::string>{"last", "row"});
    CHECK_FALSE(reader.next(cells));
}

TEST_CASE("utf8 validity and latin1 transcoding") {
    CHECK(is_valid_utf8("plain"));
    CHECK(is_valid_utf8("Quer\xC3\xA9taro"));
    CHECK_FALSE(is_valid_utf8("\xC3\x28"));
    CHECK_FALSE(is_valid_utf8("\xE9"));
    CHECK(latin1_to_utf8("Quer\xE9taro") == "Quer\xC3\xA9taro");
}

TEST_CASE("three-row file with a garbled date") {
    CsvBuilder csv;
    csv.row({{Field::Sex, "2"}, {Field::LabResult, "1"}})
        .row({{Field::SymptomOnsetDate, "2020-02-30"}})
        .row({{Field::PatientType, "2"}, {Field::Icu, "1"}, {Field::Intubated, "2"}});
    auto results = testsupport::read_results(csv.text(), csv.schema());
    REQUIRE(results.size() == 3);

    const auto& first = record_of(results[0]);
    CHECK(first.sex == Sex::Male);
    CHECK(first.lab_result_code == "1");
    CHECK_FALSE(first.death_date);
    CHECK(first.symptom_onset_date == CalendarDate{std::chrono::year{2020}, std::chrono::month{6}, std::chrono::day{1}});

    const auto& bad = error_of(results[1]);
    CHECK(bad.row_number == 2);
    CHECK(bad.kind == RowErrorKind::MalformedDate);
    CHECK(bad.field == "symptom_onset_date");

    CHECK(record_of(results[2]).icu_code == "1");
}

TEST_CASE("missing mapped column fails at open") {
    std::string text = "ID_REGISTRO,SEXO\nr1,1\n";
    std::istringstream in(text);
    try {
        RecordStream stream(in, SchemaConfig::default_profile());
        FAIL("expected MissingColumnError");
    } catch (const MissingColumnError& e) {
        CHECK_FALSE(e.column().empty());
    }

    auto schema = SchemaConfig::default_profile();
    CsvBuilder full(schema);
    auto header = full.text().substr(0, full.text().find('\n'));
    auto without_lab = header;
    without_lab.replace(without_lab.find(",RESULTADO"), 10, "");
    std::istringstream in2(without_lab + "\n");
    try {
        RecordStream stream(in2, schema);
        FAIL("expected MissingColumnError");
    } catch (const MissingColumnError& e) {
        CHECK(e.column() == "RESULTADO");
    }
}

TEST_CASE("header columns may appear in any order with extras") {
    std::string text = "EXTRA,RESULTADO,ID_REGISTRO,SEXO,EDAD,ENTIDAD_RES,MUNICIPIO_RES,ENTIDAD_UM,TIPO_PACIENTE,UCI,"
                       "INTUBADO,FECHA_DEF,FECHA_SINTOMAS,HABLA_LENGUA_INDIG,OTRO_CASO,DIABETES,HIPERTENSION,"
                       "OBESIDAD,NEUMONIA,EPOC,ASMA,INMUSUPR,CARDIOVASCULAR,RENAL_CRONICA,TABAQUISMO,OTRA_COM\n"
                       "zzz,1,abc,1,33,20,12,20,1,97,97,99-99-9999,2020-05-05,1,2,1,2,2,2,2,2,2,2,2,2,2\n";
    auto records = testsupport::read_records(text, SchemaConfig::default_profile());
    REQUIRE(records.size() == 1);
    const auto& r = records[0];
    CHECK(r.record_id == "abc");
    CHECK(r.sex == Sex::Female);
    CHECK(r.age == 33);
    CHECK(r.residence.state_code == 20);
    CHECK(r.residence.municipality_code == 12);
    CHECK(r.reporting_state == 20);
    CHECK(r.indigenous_speaker == TriState::Yes);
    CHECK(r.comorbidity(Comorbidity::Diabetes) == TriState::Yes);
    CHECK(r.comorbidity(Comorbidity::Other) == TriState::No);
    CHECK_FALSE(r.death_date);
}

TEST_CASE("row-level failures") {
    SUBCASE("negative age") {
        CsvBuilder csv;
        csv.row({{Field::Age, "-3"}});
        auto e = error_of(testsupport::read_results(csv.text(), csv.schema()).at(0));
        CHECK(e.kind == RowErrorKind::MalformedInteger);
        CHECK(e.field == "age");
    }
    SUBCASE("state outside the catalog") {
        CsvBuilder csv;
        csv.row({{Field::ReportingState, "77"}});
        CHECK(error_of(testsupport::read_results(csv.text(), csv.schema()).at(0)).kind == RowErrorKind::MalformedInteger);
    }
    SUBCASE("empty lab result") {
        CsvBuilder csv;
        csv.row({{Field::LabResult, ""}});
        auto e = error_of(testsupport::read_results(csv.text(), csv.schema()).at(0));
        CHECK(e.kind == RowErrorKind::EmptyRequired);
        CHECK(e.field == "lab_result");
    }
    SUBCASE("malformed death date") {
        CsvBuilder csv;
        csv.row({{Field::DeathDate, "2020-13-40"}});
        auto e = error_of(testsupport::read_results(csv.text(), csv.schema()).at(0));
        CHECK(e.kind == RowErrorKind::MalformedDate);
        CHECK(e.field == "death_date");
        CHECK(e.raw_excerpt.find("2020-13-40") != std::string::npos);
    }
    SUBCASE("ragged row") {
        CsvBuilder csv;
        csv.raw("r1,1,40\n");
        auto e = error_of(testsupport::read_results(csv.text(), csv.schema()).at(0));
        CHECK(e.kind == RowErrorKind::MissingColumn);
        CHECK(e.field == "whole-row");
    }
    SUBCASE("invalid utf8") {
        CsvBuilder csv;
        csv.row({{Field::RecordId, "bad\xC3\x28"}});
        std::istringstream in(csv.text());
        RecordStream stream(in, csv.schema(), InputEncoding::Utf8);
        auto r = stream.next();
        REQUIRE(r);
        CHECK(error_of(*r).kind == RowErrorKind::EncodingError);
    }
}

TEST_CASE("unspecified codes decode without rejecting the row") {
    CsvBuilder csv;
    csv.row({{Field::Sex, "99"},
             {Field::PatientType, "99"},
             {Field::IndigenousSpeaker, "99"},
             {Field::ResidenceMunicipality, "999"},
             {Field::SymptomOnsetDate, "9999-99-99"},
             {Field::Diabetes, "98"}});
    auto records = testsupport::read_records(csv.text(), csv.schema());
    REQUIRE(records.size() == 1);
    const auto& r = records[0];
    CHECK(r.sex == Sex::Unspecified);
    CHECK(r.indigenous_speaker == TriState::Unspecified);
    CHECK_FALSE(r.residence.municipality_code);
    CHECK_FALSE(r.symptom_onset_date);
    CHECK(r.comorbidity(Comorbidity::Diabetes) == TriState::Unspecified);
}

TEST_CASE("death date and both sentinel spellings") {
    CsvBuilder csv;
    csv.row({{Field::DeathDate, "2020-07-14"}}).row({{Field::DeathDate, "99-99-9999"}}).row({{Field::DeathDate, " 9999-99-99 "}});
    auto records = testsupport::read_records(csv.text(), csv.schema());
    REQUIRE(records.size() == 3);
    CHECK(records[0].death_date);
    CHECK_FALSE(records[1].death_date);
    CHECK_FALSE(records[2].death_date);
}

TEST_CASE("latin1 input is transcoded") {
    auto schema = SchemaConfig::default_profile();
    CsvBuilder csv(schema);
    csv.row({{Field::RecordId, "Quer\xE9taro"}});
    auto records = testsupport::read_records(csv.text(), schema);
    REQUIRE(records.size() == 1);
    CHECK(records[0].record_id == "Quer\xC3\xA9taro");

    std::istringstream in(csv.text());
    RecordStream stream(in, schema);
    CHECK(stream.encoding() == InputEncoding::Latin1);
}

TEST_CASE("byte-order mark is skipped") {
    CsvBuilder csv;
    csv.row();
    auto records = testsupport::read_records("\xEF\xBB\xBF" + csv.text(), csv.schema());
    CHECK(records.size() == 1);
}

TEST_CASE("empty file with a header validates to zero rows") {
    CsvBuilder csv;
    auto v = validate_text(csv.text());
    CHECK(v.rows_total == 0);
    CHECK(v.rows_accepted == 0);
    CHECK(v.rows_rejected == 0);
    CHECK(v.first_errors.empty());
}

TEST_CASE("headerless input is an IoError") {
    std::istringstream in("");
    CHECK_THROWS_AS(RecordStream(in, SchemaConfig::default_profile()), IoError);
}

TEST_CASE("validation of clean synthetic rows") {
    GeneratorSpec spec;
    spec.seed = 11;
    spec.rows = 100;
    auto v = validate_text(generate_records(spec, SchemaConfig::default_profile()));
    CHECK(v.rows_total == 100);
    CHECK(v.rows_accepted == 100);
    CHECK(v.rows_rejected == 0);
    CHECK(v.duplicate_ids == 0);
}

TEST_CASE("validation counts seven bad dates") {
    GeneratorSpec spec;
    spec.seed = 3;
    spec.rows = 100;
    spec.faults[static_cast<std::size_t>(RowErrorKind::MalformedDate)] = 7;
    auto v = validate_text(generate_records(spec, SchemaConfig::default_profile()));
    CHECK(v.rows_total == 100);
    CHECK(v.rows_rejected == 7);
    CHECK(v.errors(RowErrorKind::MalformedDate) == 7);
    CHECK(v.first_errors.size() == 7);
    for (std::size_t i = 1; i < v.first_errors.size(); ++i)
        CHECK(v.first_errors[i - 1].row_number < v.first_errors[i].row_number);
}

TEST_CASE("error list is capped but counts are not") {
    CsvBuilder csv;
    for (int i = 0; i < 30; ++i) csv.row({{Field::Age, "x"}});
    auto v = validate_text(csv.text(), 5);
    CHECK(v.rows_rejected == 30);
    CHECK(v.first_errors.size() == 5);
    CHECK(v.first_errors.front().row_number == 1);
    CHECK(v.first_errors.back().row_number == 5);
}

TEST_CASE("age above the cap warns and keeps the row") {
    CsvBuilder csv;
    csv.row({{Field::Age, "151"}}).row({{Field::Age, "150"}});
    auto v = validate_text(csv.text());
    CHECK(v.rows_accepted == 2);
    CHECK(v.age_over_cap == 1);
}

TEST_CASE("duplicate record ids are counted") {
    CsvBuilder csv;
    csv.row({{Field::RecordId, "a"}}).row({{Field::RecordId, "b"}}).row({{Field::RecordId, "a"}});
    CHECK(validate_text(csv.text()).duplicate_ids == 1);
}

TEST_CASE("validation reports merge to the sequential result") {
    CsvBuilder csv;
    for (int i = 0; i < 40; ++i) csv.row(i % 3 == 0 ? std::map<Field, std::string>{{Field::Age, "?"}} : std::map<Field, std::string>{});
    auto whole = validate_text(csv.text(), 4);

    auto results = testsupport::read_results(csv.text(), csv.schema());
    ValidationReport a, b;
    a.error_cap = b.error_cap = 4;
    for (std::size_t i = 0; i < results.size(); ++i) (i % 2 ? a : b).note(results[i], 150);
    a.merge(b);
    CHECK(a.rows_total == whole.rows_total);
    CHECK(a.rows_rejected == whole.rows_rejected);
    CHECK(a.first_errors == whole.first_errors);
}

TEST_CASE("validation json has stable keys") {
    CsvBuilder csv;
    csv.row().row({{Field::Age, "x"}});
    auto j = validate_text(csv.text()).to_json();
    CHECK(j["rows_total"] == 2);
    CHECK(j["rows_rejected"] == 1);
    CHECK(j.contains("errors_by_kind"));
}
