#include "epicohort/classification.hpp"
#include "epicohort/record_model.hpp"

#include <cstdio>

namespace epicohort {

const std::array<std::string_view, kStateCount> kStateNames = {
    "Aguascalientes",
    "Baja California",
    "Baja California Sur",
    "Campeche",
    "Chiapas",
    "Chihuahua",
    "Ciudad de México",
    "Coahuila de Zaragoza",
    "Colima",
    "Durango",
    "Guanajuato",
    "Guerrero",
    "Hidalgo",
    "Jalisco",
    "México",
    "Michoacán de Ocampo",
    "Morelos",
    "Nayarit",
    "Nuevo León",
    "Oaxaca",
    "Puebla",
    "Querétaro",
    "Quintana Roo",
    "San Luis Potosí",
    "Sinaloa",
    "Sonora",
    "Tabasco",
    "Tamaulipas",
    "Tlaxcala",
    "Veracruz de Ignacio de la Llave",
    "Yucatán",
    "Zacatecas",
};

namespace {

constexpr std::array<std::string_view, kComorbidityCount> kComorbidityNames = {
    "diabetes", "hypertension",      "obesity",        "pneumonia",     "copd",    "asthma",
    "immunosuppression", "cardiovascular", "chronic_renal", "smoking", "other_comorbidity",
};

constexpr std::array<std::string_view, kComorbidityCount> kComorbidityLabels = {
    "Diabetes",
    "Hypertension",
    "Obesity",
    "Pneumonia",
    "COPD",
    "Asthma",
    "Immunosuppression",
    "Cardiovascular disease",
    "Chronic renal disease",
    "Smoking",
    "Other comorbidity",
};

template <class E, std::size_t N>
std::optional<E> lookup(std::string_view label, const std::array<std::string_view, N>& names) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == label) return static_cast<E>(i);
    return std::nullopt;
}

constexpr std::array<std::string_view, 3> kTriNames = {"Yes", "No", "Unspecified"};
constexpr std::array<std::string_view, 3> kSexNames = {"Female", "Male", "Unspecified"};
constexpr std::array<std::string_view, 3> kCareNames = {"Ambulatory", "Hospitalized", "Unspecified"};
constexpr std::array<std::string_view, 3> kTestNames = {"Positive", "Negative", "Pending"};
constexpr std::array<std::string_view, 4> kIcuNames = {"InICU", "NotInICU", "NotApplicable", "Unspecified"};
constexpr std::array<std::string_view, 4> kIntubationNames = {"Intubated", "NotIntubated", "NotApplicable",
                                                              "Unspecified"};
constexpr std::array<std::string_view, 2> kVitalNames = {"Deceased", "NotRecordedDeceased"};
constexpr std::array<std::string_view, 5> kSuspectNames = {"Type1", "Type2", "Type3", "NotSuspect",
                                                           "Indeterminate"};

}  // namespace

std::string_view comorbidity_name(Comorbidity c) { return kComorbidityNames[static_cast<std::size_t>(c)]; }
std::string_view comorbidity_label(Comorbidity c) { return kComorbidityLabels[static_cast<std::size_t>(c)]; }

std::string_view to_string(TriState v) { return kTriNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Sex v) { return kSexNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(CareType v) { return kCareNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(TestStatus v) { return kTestNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(IcuStatus v) { return kIcuNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(IntubationStatus v) { return kIntubationNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(VitalStatus v) { return kVitalNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(SuspectType v) { return kSuspectNames[static_cast<std::size_t>(v)]; }

std::optional<TriState> parse_tristate(std::string_view s) { return lookup<TriState>(s, kTriNames); }
std::optional<Sex> parse_sex(std::string_view s) { return lookup<Sex>(s, kSexNames); }
std::optional<CareType> parse_care_type(std::string_view s) { return lookup<CareType>(s, kCareNames); }
std::optional<TestStatus> parse_test_status(std::string_view s) { return lookup<TestStatus>(s, kTestNames); }
std::optional<IcuStatus> parse_icu_status(std::string_view s) { return lookup<IcuStatus>(s, kIcuNames); }
std::optional<IntubationStatus> parse_intubation_status(std::string_view s) {
    return lookup<IntubationStatus>(s, kIntubationNames);
}
std::optional<VitalStatus> parse_vital_status(std::string_view s) { return lookup<VitalStatus>(s, kVitalNames); }

std::string format_date(const CalendarDate& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

}  // namespace epicohort
