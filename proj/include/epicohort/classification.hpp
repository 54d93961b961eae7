#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "epicohort/record_model.hpp"

namespace epicohort {

enum class TestStatus : std::uint8_t { Positive, Negative, Pending };
using CareStatus = CareType;
enum class IcuStatus : std::uint8_t { InICU, NotInICU, NotApplicable, Unspecified };
enum class IntubationStatus : std::uint8_t { Intubated, NotIntubated, NotApplicable, Unspecified };
enum class VitalStatus : std::uint8_t { Deceased, NotRecordedDeceased };
enum class SuspectType : std::uint8_t { Type1, Type2, Type3, NotSuspect, Indeterminate };

struct Classification {
    TestStatus test_status = TestStatus::Pending;
    CareStatus care_status = CareStatus::Unspecified;
    IcuStatus icu_status = IcuStatus::NotApplicable;
    IntubationStatus intubation_status = IntubationStatus::NotApplicable;
    VitalStatus vital_status = VitalStatus::NotRecordedDeceased;
    SuspectType suspect_type = SuspectType::Indeterminate;
    // Raw data said "intubated" for a patient outside the ICU branch; the
    // label above stays NotApplicable, this keeps the fact countable.
    bool intubation_reported_outside_icu = false;

    friend bool operator==(const Classification&, const Classification&) = default;
};

/// Both gating rules: ICU only under Hospitalized, intubation only under InICU.
constexpr bool satisfies_gating(const Classification& c) {
    if (c.icu_status != IcuStatus::NotApplicable && c.care_status != CareStatus::Hospitalized) return false;
    if (c.icu_status == IcuStatus::NotApplicable && c.care_status == CareStatus::Hospitalized) return false;
    if (c.intubation_status != IntubationStatus::NotApplicable && c.icu_status != IcuStatus::InICU) return false;
    if (c.intubation_status == IntubationStatus::NotApplicable && c.icu_status == IcuStatus::InICU) return false;
    return true;
}

std::string_view to_string(TestStatus v);
std::string_view to_string(IcuStatus v);
std::string_view to_string(IntubationStatus v);
std::string_view to_string(VitalStatus v);
std::string_view to_string(SuspectType v);

std::optional<TestStatus> parse_test_status(std::string_view label);
std::optional<IcuStatus> parse_icu_status(std::string_view label);
std::optional<IntubationStatus> parse_intubation_status(std::string_view label);
std::optional<VitalStatus> parse_vital_status(std::string_view label);

}  // namespace epicohort
