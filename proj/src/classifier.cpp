#include "epicohort/classifier.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace epicohort {

namespace {

bool contains(const std::vector<std::string>& set, std::string_view code) {
    return std::find(set.begin(), set.end(), code) != set.end();
}

// Whether `value` is a legal comparison value for `field`.
bool value_fits(Field f, const std::string& value) {
    if (f == Field::Sex) return parse_sex(value).has_value();
    if (f == Field::PatientType) return parse_care_type(value).has_value();
    if (f == Field::LabResult) return parse_test_status(value).has_value();
    if (is_tristate_field(f)) return parse_tristate(value).has_value();
    return true;
}

bool rule_field_supported(Field f) {
    switch (f) {
        case Field::RecordId:
        case Field::DeathDate:
        case Field::SymptomOnsetDate:
            return false;
        default:
            return true;
    }
}

std::string field_value(const PatientRecord& r, Field f, const SchemaConfig& schema) {
    switch (f) {
        case Field::Sex: return std::string(to_string(r.sex));
        case Field::Age: return std::to_string(r.age);
        case Field::ResidenceState: return std::to_string(r.residence.state_code);
        case Field::ResidenceMunicipality:
            return r.residence.municipality_code ? std::to_string(*r.residence.municipality_code) : "Unspecified";
        case Field::ReportingState: return std::to_string(r.reporting_state);
        case Field::PatientType: return std::string(to_string(classify_care(r, schema)));
        case Field::LabResult: return std::string(to_string(classify_test_status(r, schema)));
        case Field::Icu: return std::string(to_string(schema.tristate_catalog(f).decode(r.icu_code)));
        case Field::Intubated: return std::string(to_string(schema.tristate_catalog(f).decode(r.intubated_code)));
        case Field::IndigenousSpeaker: return std::string(to_string(r.indigenous_speaker));
        case Field::Contact: return std::string(to_string(r.contact));
        case Field::TravelHistory: return std::string(to_string(r.travel_history));
        default:
            if (f >= Field::Diabetes)
                return std::string(
                    to_string(r.comorbidities[static_cast<std::size_t>(f) - static_cast<std::size_t>(Field::Diabetes)]));
            return {};
    }
}

bool holds(const RuleCondition& c, const std::string& actual) {
    switch (c.op) {
        case RuleOp::Eq: return actual == c.values.front();
        case RuleOp::Ne: return actual != c.values.front();
        case RuleOp::In: return contains(c.values, actual);
    }
    return false;
}

}  // namespace

SuspectRuleSet SuspectRuleSet::from_yaml(const std::string& text) {
    SuspectRuleSet rules;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("rules are not valid YAML: ") + e.what());
    }
    auto section = root.IsMap() ? root["suspect_rules"] : YAML::Node();
    if (!section) return rules;
    if (!section.IsMap()) throw ConfigError("suspect_rules must be a mapping");

    rules.configured = true;
    static constexpr const char* kTypeKeys[] = {"type1", "type2", "type3"};
    try {
        for (const auto& kv : section) {
            auto key = kv.first.as<std::string>();
            if (std::find(std::begin(kTypeKeys), std::end(kTypeKeys), key) == std::end(kTypeKeys))
                throw ConfigError("suspect_rules: unknown key '" + key + "'");
        }
        for (std::size_t t = 0; t < 3; ++t) {
            auto list = section[kTypeKeys[t]];
            if (!list) continue;
            if (!list.IsSequence()) throw ConfigError(std::string("suspect_rules.") + kTypeKeys[t] + " must be a list");
            for (const auto& node : list) {
                RuleCondition cond;
                auto fname = node["field"].as<std::string>();
                auto field = parse_field(fname);
                if (!field || !rule_field_supported(*field))
                    throw ConfigError("suspect_rules: field '" + fname + "' cannot be used in a rule");
                cond.field = *field;
                auto op = node["op"] ? node["op"].as<std::string>() : "eq";
                if (op == "eq")
                    cond.op = RuleOp::Eq;
                else if (op == "ne")
                    cond.op = RuleOp::Ne;
                else if (op == "in")
                    cond.op = RuleOp::In;
                else
                    throw ConfigError("suspect_rules: unknown op '" + op + "'");
                auto value = node["value"];
                if (!value) throw ConfigError("suspect_rules: condition on '" + fname + "' needs a value");
                if (value.IsSequence()) {
                    if (cond.op != RuleOp::In) throw ConfigError("suspect_rules: list values need op 'in'");
                    for (const auto& v : value) cond.values.push_back(v.as<std::string>());
                } else {
                    cond.values.push_back(value.as<std::string>());
                }
                if (cond.values.empty()) throw ConfigError("suspect_rules: empty value list");
                for (const auto& v : cond.values)
                    if (!value_fits(cond.field, v))
                        throw ConfigError("suspect_rules: '" + v + "' is not a value of field '" + fname + "'");
                rules.types[t].push_back(std::move(cond));
            }
        }
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("suspect_rules: ") + e.what());
    }
    return rules;
}

SuspectRuleSet SuspectRuleSet::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read rules file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_yaml(ss.str());
}

SuspectRuleSet SuspectRuleSet::default_rules() { return from_yaml(std::string(default_profile_yaml())); }

TestStatus classify_test_status(const PatientRecord& record, const SchemaConfig& schema) {
    if (contains(schema.positive_codes, record.lab_result_code)) return TestStatus::Positive;
    if (contains(schema.negative_codes, record.lab_result_code)) return TestStatus::Negative;
    return TestStatus::Pending;
}

CareStatus classify_care(const PatientRecord& record, const SchemaConfig& schema) {
    return schema.patient_type_catalog.decode(record.patient_type_code);
}

IcuStatus classify_icu(const PatientRecord& record, CareStatus care, const SchemaConfig& schema) {
    if (care != CareStatus::Hospitalized) return IcuStatus::NotApplicable;
    switch (schema.tristate_catalog(Field::Icu).decode(record.icu_code)) {
        case TriState::Yes: return IcuStatus::InICU;
        case TriState::No: return IcuStatus::NotInICU;
        case TriState::Unspecified: break;
    }
    return IcuStatus::Unspecified;
}

IntubationStatus classify_intubation(const PatientRecord& record, IcuStatus icu, const SchemaConfig& schema) {
    if (icu != IcuStatus::InICU) return IntubationStatus::NotApplicable;
    switch (schema.tristate_catalog(Field::Intubated).decode(record.intubated_code)) {
        case TriState::Yes: return IntubationStatus::Intubated;
        case TriState::No: return IntubationStatus::NotIntubated;
        case TriState::Unspecified: break;
    }
    return IntubationStatus::Unspecified;
}

VitalStatus is_deceased(const PatientRecord& record) {
    return record.death_date ? VitalStatus::Deceased : VitalStatus::NotRecordedDeceased;
}

SuspectType classify_suspect_type(const PatientRecord& record, const SuspectRuleSet& rules,
                                  const SchemaConfig& schema) {
    if (!rules.configured) return SuspectType::Indeterminate;
    for (std::size_t t = 0; t < rules.types.size(); ++t) {
        const auto& conds = rules.types[t];
        if (conds.empty()) continue;
        bool matched = true;
        for (const auto& c : conds) {
            if (!schema.present(c.field)) return SuspectType::Indeterminate;
            if (matched && !holds(c, field_value(record, c.field, schema))) matched = false;
        }
        if (matched) return static_cast<SuspectType>(t);
    }
    return SuspectType::NotSuspect;
}

Classification classify_patient(const PatientRecord& record, const SchemaConfig& schema, const SuspectRuleSet& rules) {
    Classification c;
    c.test_status = classify_test_status(record, schema);
    c.care_status = classify_care(record, schema);
    c.icu_status = classify_icu(record, c.care_status, schema);
    c.intubation_status = classify_intubation(record, c.icu_status, schema);
    c.vital_status = is_deceased(record);
    c.suspect_type = classify_suspect_type(record, rules, schema);
    c.intubation_reported_outside_icu =
        c.icu_status != IcuStatus::InICU &&
        schema.tristate_catalog(Field::Intubated).decode(record.intubated_code) == TriState::Yes;
    return c;
}

}  // namespace epicohort
