#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace epicohort {

enum class TriState : std::uint8_t { Yes, No, Unspecified };
enum class Sex : std::uint8_t { Female, Male, Unspecified };
enum class CareType : std::uint8_t { Ambulatory, Hospitalized, Unspecified };

inline constexpr int kStateCount = 32;

/// Federal entity names indexed by INEGI code - 1.
extern const std::array<std::string_view, kStateCount> kStateNames;

struct RegionKey {
    int state_code = 0;                     // 1..32
    std::optional<int> municipality_code;   // nullopt == Unspecified

    friend auto operator<=>(const RegionKey&, const RegionKey&) = default;
};

/// Calendar date; only valid dates are constructible through parse routines.
using CalendarDate = std::chrono::year_month_day;

enum class Comorbidity : std::uint8_t {
    Diabetes,
    Hypertension,
    Obesity,
    Pneumonia,
    Copd,
    Asthma,
    Immunosuppression,
    Cardiovascular,
    ChronicRenal,
    Smoking,
    Other,
};
inline constexpr std::size_t kComorbidityCount = 11;

/// Semantic (config) names, e.g. "chronic_renal".
std::string_view comorbidity_name(Comorbidity c);
/// Table labels, e.g. "Chronic renal disease".
std::string_view comorbidity_label(Comorbidity c);

struct PatientRecord {
    std::string record_id;
    Sex sex = Sex::Unspecified;
    int age = 0;
    RegionKey residence;
    int reporting_state = 0;
    std::string patient_type_code;
    std::string icu_code;
    std::string intubated_code;
    std::string lab_result_code;
    std::optional<CalendarDate> death_date;
    std::optional<CalendarDate> symptom_onset_date;
    TriState indigenous_speaker = TriState::Unspecified;
    TriState contact = TriState::Unspecified;
    TriState travel_history = TriState::Unspecified;
    std::array<TriState, kComorbidityCount> comorbidities{};

    PatientRecord() { comorbidities.fill(TriState::Unspecified); }

    TriState comorbidity(Comorbidity c) const { return comorbidities[static_cast<std::size_t>(c)]; }
};

// Label <-> enum helpers. Labels are the spellings used in config files and
// report tables ("Yes", "Female", "Hospitalized", ...).
std::string_view to_string(TriState v);
std::string_view to_string(Sex v);
std::string_view to_string(CareType v);

std::optional<TriState> parse_tristate(std::string_view label);
std::optional<Sex> parse_sex(std::string_view label);
std::optional<CareType> parse_care_type(std::string_view label);

std::string format_date(const CalendarDate& d);

}  // namespace epicohort
