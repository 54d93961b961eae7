#pragma once

#include <array>
#include <string>
#include <vector>

#include "epicohort/classification.hpp"
#include "epicohort/record_model.hpp"
#include "epicohort/schema_config.hpp"

namespace epicohort {

enum class RuleOp { Eq, Ne, In };

/// One (field, op, value) condition. Values are compared against decoded labels
/// ("Yes", "Hospitalized", "Positive", ...) or, for numeric fields, the number.
struct RuleCondition {
    Field field{};
    RuleOp op = RuleOp::Eq;
    std::vector<std::string> values;
};

/// Suspect-case typing rules. Each type is a conjunction of conditions; types
/// are tried in order and the first match wins. An unconfigured set classifies
/// everything as Indeterminate.
struct SuspectRuleSet {
    bool configured = false;
    std::array<std::vector<RuleCondition>, 3> types;

    /// Reads the `suspect_rules` section of a schema YAML document.
    static SuspectRuleSet from_yaml(const std::string& text);
    static SuspectRuleSet load_file(const std::string& path);
    static SuspectRuleSet default_rules();
};

TestStatus classify_test_status(const PatientRecord& record, const SchemaConfig& schema);
CareStatus classify_care(const PatientRecord& record, const SchemaConfig& schema);
IcuStatus classify_icu(const PatientRecord& record, CareStatus care, const SchemaConfig& schema);
IntubationStatus classify_intubation(const PatientRecord& record, IcuStatus icu, const SchemaConfig& schema);
VitalStatus is_deceased(const PatientRecord& record);
SuspectType classify_suspect_type(const PatientRecord& record, const SuspectRuleSet& rules, const SchemaConfig& schema);

/// Full patient-identification flow: test result, care modality, then ICU and
/// intubation gated on the branch above, death and suspect type.
Classification classify_patient(const PatientRecord& record, const SchemaConfig& schema, const SuspectRuleSet& rules);

}  // namespace epicohort
