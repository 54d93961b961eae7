#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epicohort/record_model.hpp"

namespace epicohort {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Semantic fields a schema maps onto CSV columns.
enum class Field : std::uint8_t {
    RecordId,
    Sex,
    Age,
    ResidenceState,
    ResidenceMunicipality,
    ReportingState,
    PatientType,
    Icu,
    Intubated,
    LabResult,
    DeathDate,
    SymptomOnsetDate,
    IndigenousSpeaker,
    Contact,
    TravelHistory,
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
    OtherComorbidity,
};
inline constexpr std::size_t kFieldCount = 26;

std::string_view field_name(Field f);
std::optional<Field> parse_field(std::string_view name);
constexpr Field comorbidity_field(Comorbidity c) {
    return static_cast<Field>(static_cast<int>(Field::Diabetes) + static_cast<int>(c));
}
/// Fields decoded through a yes/no/unspecified catalog.
bool is_tristate_field(Field f);

std::string_view trim(std::string_view s);

/// Code -> meaning dictionary. Lookup is total: unknown codes map to the fallback.
template <class Meaning>
class CodeTable {
public:
    CodeTable() = default;
    CodeTable(std::vector<std::pair<std::string, Meaning>> entries, Meaning fallback)
        : entries_(std::move(entries)), fallback_(fallback) {}

    Meaning decode(std::string_view code) const {
        code = trim(code);
        for (const auto& [k, v] : entries_)
            if (k == code) return v;
        return fallback_;
    }

    /// The unique code for `m`, or nullopt when zero or several codes map to it.
    std::optional<std::string> encode(Meaning m) const {
        std::optional<std::string> found;
        for (const auto& [k, v] : entries_) {
            if (v != m) continue;
            if (found) return std::nullopt;
            found = k;
        }
        return found;
    }

    std::vector<std::string> codes_for(Meaning m) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries_)
            if (v == m) out.push_back(k);
        return out;
    }

    Meaning fallback() const { return fallback_; }
    const std::vector<std::pair<std::string, Meaning>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, Meaning>> entries_;
    Meaning fallback_{};
};

template <class Meaning>
Meaning decode_code(const CodeTable<Meaning>& catalog, std::string_view code) {
    return catalog.decode(code);
}

enum class InputEncoding { Auto, Utf8, Latin1 };
std::optional<InputEncoding> parse_encoding(std::string_view name);

struct SchemaConfig {
    // nullopt marks a field explicitly absent from the dataset.
    std::array<std::optional<std::string>, kFieldCount> columns;

    CodeTable<Sex> sex_catalog;
    CodeTable<CareType> patient_type_catalog;
    // Indexed by Field; only tristate fields are populated.
    std::array<CodeTable<TriState>, kFieldCount> tristate_catalogs;

    std::string date_sentinel = "9999-99-99";
    std::vector<std::string> date_sentinel_aliases{"99-99-9999"};
    std::string date_format = "YYYY-MM-DD";

    std::vector<std::string> positive_codes;
    std::vector<std::string> negative_codes;
    std::vector<std::string> pending_codes;

    std::vector<std::string> municipality_unspecified_codes;
    int age_cap = 150;
    InputEncoding encoding = InputEncoding::Auto;

    const std::optional<std::string>& column(Field f) const { return columns[static_cast<std::size_t>(f)]; }
    bool present(Field f) const { return column(f).has_value(); }
    const CodeTable<TriState>& tristate_catalog(Field f) const {
        return tristate_catalogs[static_cast<std::size_t>(f)];
    }
    bool is_date_sentinel(std::string_view cell) const;

    /// Throws ConfigError when result-code sets overlap or a required field is unmapped.
    void validate() const;

    static SchemaConfig from_yaml(const std::string& text);
    static SchemaConfig load_file(const std::string& path);
    /// The shipped profile for the Mexican federal open dataset.
    static SchemaConfig default_profile();
};

/// YAML text of the shipped default profile.
std::string_view default_profile_yaml();

enum class DateCellStatus { Sentinel, Valid, Malformed };

struct ParsedDate {
    DateCellStatus status = DateCellStatus::Sentinel;
    CalendarDate date{};

    std::optional<CalendarDate> value() const {
        return status == DateCellStatus::Valid ? std::optional(date) : std::nullopt;
    }
};

/// Parses `text` against a pattern made of YYYY / MM / DD tokens and literal separators.
std::optional<CalendarDate> parse_date(std::string_view text, std::string_view pattern);

/// Sentinel (any configured spelling, whitespace-trimmed) => Sentinel; otherwise a
/// valid date or Malformed.
ParsedDate parse_death_date(std::string_view cell, const SchemaConfig& schema);

}  // namespace epicohort
