#include <doctest.h>

#include "epicohort/classifier.hpp"
#include "support.hpp"

using namespace epicohort;

namespace {

const SchemaConfig& schema() {
    static const SchemaConfig s = SchemaConfig::default_profile();
    return s;
}

PatientRecord record(std::string lab, std::string type, std::string icu = "97", std::string intub = "97") {
    PatientRecord r;
    r.record_id = "x";
    r.reporting_state = 1;
    r.residence.state_code = 1;
    r.lab_result_code = std::move(lab);
    r.patient_type_code = std::move(type);
    r.icu_code = std::move(icu);
    r.intubated_code = std::move(intub);
    return r;
}

SuspectRuleSet rules_from(const std::string& body) { return SuspectRuleSet::from_yaml("suspect_rules:\n" + body); }

SchemaConfig schema_with_travel() {
    std::string text(default_profile_yaml());
    auto pos = text.find("travel_history: ~");
    text.replace(pos, 17, "travel_history: VIAJE");
    return SchemaConfig::from_yaml(text);
}

}  // namespace

TEST_CASE("hospitalized positive in ICU and intubated") {
    auto r = record("1", "2", "1", "1");
    r.death_date = CalendarDate{std::chrono::year{2020}, std::chrono::month{6}, std::chrono::day{2}};
    auto c = classify_patient(r, schema(), SuspectRuleSet::default_rules());
    CHECK(c.test_status == TestStatus::Positive);
    CHECK(c.care_status == CareStatus::Hospitalized);
    CHECK(c.icu_status == IcuStatus::InICU);
    CHECK(c.intubation_status == IntubationStatus::Intubated);
    CHECK(c.vital_status == VitalStatus::Deceased);
    CHECK(satisfies_gating(c));
}

TEST_CASE("ambulatory patients never carry ICU or intubation labels") {
    auto c = classify_patient(record("1", "1", "1", "1"), schema(), SuspectRuleSet::default_rules());
    CHECK(c.care_status == CareStatus::Ambulatory);
    CHECK(c.icu_status == IcuStatus::NotApplicable);
    CHECK(c.intubation_status == IntubationStatus::NotApplicable);
    CHECK(c.intubation_reported_outside_icu);
    CHECK(c.vital_status == VitalStatus::NotRecordedDeceased);
}

TEST_CASE("hospitalized outside ICU") {
    auto c = classify_patient(record("2", "2", "2", "97"), schema(), SuspectRuleSet::default_rules());
    CHECK(c.test_status == TestStatus::Negative);
    CHECK(c.icu_status == IcuStatus::NotInICU);
    CHECK(c.intubation_status == IntubationStatus::NotApplicable);
    CHECK_FALSE(c.intubation_reported_outside_icu);
}

TEST_CASE("unspecified codes along the gated path") {
    CHECK(classify_patient(record("1", "2", "99"), schema(), {}).icu_status == IcuStatus::Unspecified);
    CHECK(classify_patient(record("1", "2", "1", "98"), schema(), {}).intubation_status == IntubationStatus::Unspecified);
    auto c = classify_patient(record("1", "99", "1", "1"), schema(), {});
    CHECK(c.care_status == CareStatus::Unspecified);
    CHECK(c.icu_status == IcuStatus::NotApplicable);
}

TEST_CASE("lab codes outside positive and negative lists are pending") {
    CHECK(classify_test_status(record("3", "1"), schema()) == TestStatus::Pending);
    CHECK(classify_test_status(record("4", "1"), schema()) == TestStatus::Pending);
    CHECK(classify_test_status(record("1", "1"), schema()) == TestStatus::Positive);
}

TEST_CASE("default rules are indeterminate when travel history is absent") {
    auto r = record("1", "2");
    r.contact = TriState::Yes;
    CHECK(classify_suspect_type(r, SuspectRuleSet::default_rules(), schema()) == SuspectType::Indeterminate);
}

TEST_CASE("suspect rules with every field present") {
    auto s = schema_with_travel();
    auto rules = SuspectRuleSet::default_rules();
    auto r = record("3", "2");
    r.travel_history = TriState::No;
    r.contact = TriState::No;
    r.comorbidities[static_cast<std::size_t>(Comorbidity::Pneumonia)] = TriState::Yes;

    SUBCASE("contact gives type 2") {
        r.contact = TriState::Yes;
        CHECK(classify_suspect_type(r, rules, s) == SuspectType::Type2);
    }
    SUBCASE("travel wins over contact") {
        r.contact = TriState::Yes;
        r.travel_history = TriState::Yes;
        CHECK(classify_suspect_type(r, rules, s) == SuspectType::Type1);
    }
    SUBCASE("hospitalized pneumonia gives type 3") {
        CHECK(classify_suspect_type(r, rules, s) == SuspectType::Type3);
    }
    SUBCASE("no rule matches") {
        r.patient_type_code = "1";
        CHECK(classify_suspect_type(r, rules, s) == SuspectType::NotSuspect);
    }
}

TEST_CASE("rule operators") {
    auto s = schema_with_travel();
    auto r = record("1", "1");
    r.sex = Sex::Male;
    r.age = 70;
    auto rules = rules_from("  type1:\n    - {field: sex, op: ne, value: Female}\n    - {field: age, op: in, value: [\"69\", \"70\"]}\n");
    CHECK(classify_suspect_type(r, rules, s) == SuspectType::Type1);
    r.age = 71;
    CHECK(classify_suspect_type(r, rules, s) == SuspectType::NotSuspect);
}

TEST_CASE("malformed rules are rejected") {
    CHECK_THROWS_AS(rules_from("  type4: []\n"), ConfigError);
    CHECK_THROWS_AS(rules_from("  type1:\n    - {field: sex, op: gt, value: Female}\n"), ConfigError);
    CHECK_THROWS_AS(rules_from("  type1:\n    - {field: sex, value: Purple}\n"), ConfigError);
    CHECK_THROWS_AS(rules_from("  type1:\n    - {field: death_date, value: x}\n"), ConfigError);
    CHECK_THROWS_AS(rules_from("  type1:\n    - {field: sex, op: eq, value: [Female]}\n"), ConfigError);
    CHECK_FALSE(SuspectRuleSet::from_yaml("encoding: auto\n").configured);
}

TEST_CASE("classification is gated, deterministic and ignores unrelated fields") {
    static const char* labs[] = {"1", "2", "3", "", "x"};
    static const char* types[] = {"1", "2", "99", "5"};
    static const char* tri[] = {"1", "2", "97", "98", "99", "0"};
    auto rules = SuspectRuleSet::default_rules();
    epicohort::Rng rng(42);
    for (int i = 0; i < 2000; ++i) {
        auto r = record(labs[rng.below(5)], types[rng.below(4)], tri[rng.below(6)], tri[rng.below(6)]);
        if (rng.chance(1, 5)) r.death_date = CalendarDate{std::chrono::year{2020}, std::chrono::month{5}, std::chrono::day{1}};
        auto c = classify_patient(r, schema(), rules);
        CHECK(satisfies_gating(c));
        CHECK(classify_patient(r, schema(), rules) == c);

        auto other = r;
        other.age = static_cast<int>(rng.below(100));
        other.sex = static_cast<Sex>(rng.below(3));
        other.reporting_state = static_cast<int>(rng.between(1, 32));
        other.comorbidities.fill(static_cast<TriState>(rng.below(3)));
        auto c2 = classify_patient(other, schema(), rules);
        CHECK(c2.test_status == c.test_status);
        CHECK(c2.care_status == c.care_status);
        CHECK(c2.icu_status == c.icu_status);
        CHECK(c2.intubation_status == c.intubation_status);
        CHECK(c2.vital_status == c.vital_status);
    }
}

TEST_CASE("reference cohort classifies to its planted branch counts") {
    auto s = SchemaConfig::default_profile();
    auto records = testsupport::read_records(generate_records(reference_cohort_spec(5), s), s);
    auto rules = SuspectRuleSet::default_rules();
    std::uint64_t pos = 0, hosp = 0, icu = 0, intub = 0, dead = 0;
    for (const auto& r : records) {
        if (r.indigenous_speaker != TriState::Yes) continue;
        auto c = classify_patient(r, s, rules);
        if (c.test_status != TestStatus::Positive) continue;
        ++pos;
        hosp += c.care_status == CareStatus::Hospitalized;
        icu += c.icu_status == IcuStatus::InICU;
        intub += c.intubation_status == IntubationStatus::Intubated;
        dead += c.vital_status == VitalStatus::Deceased;
    }
    CHECK(pos == 4555);
    CHECK(hosp == 1830);
    CHECK(icu == 164);
    CHECK(intub == 84);
    CHECK(dead == 67);
}
