#include "epicohort/schema_config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace epicohort {

namespace {

constexpr std::array<std::string_view, kFieldCount> kFieldNames = {
    "record_id",
    "sex",
    "age",
    "residence_state",
    "residence_municipality",
    "reporting_state",
    "patient_type",
    "icu",
    "intubated",
    "lab_result",
    "death_date",
    "symptom_onset_date",
    "indigenous_speaker",
    "contact",
    "travel_history",
    "diabetes",
    "hypertension",
    "obesity",
    "pneumonia",
    "copd",
    "asthma",
    "immunosuppression",
    "cardiovascular",
    "chronic_renal",
    "smoking",
    "other_comorbidity",
};

constexpr Field kRequiredFields[] = {Field::LabResult, Field::PatientType, Field::ReportingState, Field::DeathDate};

struct RawCatalog {
    std::vector<std::pair<std::string, std::string>> entries;
    std::string fallback;
};

template <class Meaning, class Parse>
CodeTable<Meaning> typed_catalog(const RawCatalog& raw, std::string_view catalog, Parse parse) {
    auto convert = [&](const std::string& label) {
        auto m = parse(label);
        if (!m)
            throw ConfigError("catalog '" + std::string(catalog) + "': label '" + label +
                              "' is not valid for the field it is assigned to");
        return *m;
    };
    std::vector<std::pair<std::string, Meaning>> entries;
    entries.reserve(raw.entries.size());
    for (const auto& [code, label] : raw.entries) entries.emplace_back(code, convert(label));
    return CodeTable<Meaning>(std::move(entries), convert(raw.fallback));
}

std::vector<std::string> string_list(const YAML::Node& node, const char* what) {
    std::vector<std::string> out;
    if (!node) return out;
    if (!node.IsSequence()) throw ConfigError(std::string(what) + " must be a list");
    for (const auto& item : node) out.push_back(item.as<std::string>());
    return out;
}

bool overlaps(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    for (const auto& x : a)
        if (std::find(b.begin(), b.end(), x) != b.end()) return true;
    return false;
}

}  // namespace

std::string_view field_name(Field f) { return kFieldNames[static_cast<std::size_t>(f)]; }

std::optional<Field> parse_field(std::string_view name) {
    for (std::size_t i = 0; i < kFieldNames.size(); ++i)
        if (kFieldNames[i] == name) return static_cast<Field>(i);
    return std::nullopt;
}

bool is_tristate_field(Field f) {
    switch (f) {
        case Field::Icu:
        case Field::Intubated:
        case Field::IndigenousSpeaker:
        case Field::Contact:
        case Field::TravelHistory:
            return true;
        default:
            return f >= Field::Diabetes;
    }
}

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::optional<InputEncoding> parse_encoding(std::string_view name) {
    if (name == "auto") return InputEncoding::Auto;
    if (name == "utf8" || name == "utf-8") return InputEncoding::Utf8;
    if (name == "latin1" || name == "latin-1" || name == "iso-8859-1") return InputEncoding::Latin1;
    return std::nullopt;
}

bool SchemaConfig::is_date_sentinel(std::string_view cell) const {
    cell = trim(cell);
    if (cell == date_sentinel) return true;
    return std::find(date_sentinel_aliases.begin(), date_sentinel_aliases.end(), cell) != date_sentinel_aliases.end();
}

void SchemaConfig::validate() const {
    for (auto f : kRequiredFields)
        if (!present(f)) throw ConfigError("field '" + std::string(field_name(f)) + "' must be mapped to a column");
    if (positive_codes.empty()) throw ConfigError("lab_result.positive must list at least one code");
    if (overlaps(positive_codes, negative_codes) || overlaps(positive_codes, pending_codes) ||
        overlaps(negative_codes, pending_codes))
        throw ConfigError("lab_result code sets must be pairwise disjoint");
    if (date_format.find("YYYY") == std::string::npos || date_format.find("MM") == std::string::npos ||
        date_format.find("DD") == std::string::npos)
        throw ConfigError("dates.format must contain YYYY, MM and DD");
    if (date_sentinel.empty()) throw ConfigError("dates.sentinel must not be empty");
    if (age_cap < 0) throw ConfigError("age_cap must be non-negative");
}

SchemaConfig SchemaConfig::from_yaml(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("schema is not valid YAML: ") + e.what());
    }
    if (!root.IsMap()) throw ConfigError("schema root must be a mapping");

    SchemaConfig schema;
    try {
        if (auto enc = root["encoding"]) {
            auto parsed = parse_encoding(enc.as<std::string>());
            if (!parsed) throw ConfigError("unknown encoding '" + enc.as<std::string>() + "'");
            schema.encoding = *parsed;
        }
        if (auto cap = root["age_cap"]) schema.age_cap = cap.as<int>();

        if (auto dates = root["dates"]) {
            if (dates["format"]) schema.date_format = dates["format"].as<std::string>();
            if (dates["sentinel"]) schema.date_sentinel = dates["sentinel"].as<std::string>();
            if (dates["sentinel_aliases"])
                schema.date_sentinel_aliases = string_list(dates["sentinel_aliases"], "dates.sentinel_aliases");
        }

        auto columns = root["columns"];
        if (!columns || !columns.IsMap()) throw ConfigError("schema needs a 'columns' mapping");
        std::array<bool, kFieldCount> seen{};
        for (const auto& kv : columns) {
            auto key = kv.first.as<std::string>();
            auto field = parse_field(key);
            if (!field) throw ConfigError("unknown semantic field '" + key + "' in columns");
            auto idx = static_cast<std::size_t>(*field);
            seen[idx] = true;
            if (!kv.second.IsNull()) schema.columns[idx] = kv.second.as<std::string>();
        }
        for (std::size_t i = 0; i < kFieldCount; ++i)
            if (!seen[i])
                throw ConfigError("columns: field '" + std::string(kFieldNames[i]) +
                                  "' needs a column name or an explicit ~ (absent)");

        auto lab = root["lab_result"];
        if (!lab) throw ConfigError("schema needs a 'lab_result' section");
        schema.positive_codes = string_list(lab["positive"], "lab_result.positive");
        schema.negative_codes = string_list(lab["negative"], "lab_result.negative");
        schema.pending_codes = string_list(lab["pending"], "lab_result.pending");
        schema.municipality_unspecified_codes = string_list(root["municipality_unspecified"], "municipality_unspecified");

        std::map<std::string, RawCatalog> catalogs;
        if (auto cats = root["catalogs"]) {
            for (const auto& kv : cats) {
                RawCatalog raw;
                auto entries = kv.second["entries"];
                if (entries && !entries.IsMap())
                    throw ConfigError("catalog '" + kv.first.as<std::string>() + "': entries must be a mapping");
                if (entries)
                    for (const auto& e : entries) raw.entries.emplace_back(e.first.as<std::string>(), e.second.as<std::string>());
                if (!kv.second["default"])
                    throw ConfigError("catalog '" + kv.first.as<std::string>() + "' needs a default meaning");
                raw.fallback = kv.second["default"].as<std::string>();
                catalogs.emplace(kv.first.as<std::string>(), std::move(raw));
            }
        }
        auto find_catalog = [&](const std::string& name) -> const RawCatalog& {
            auto it = catalogs.find(name);
            if (it == catalogs.end()) throw ConfigError("unknown catalog '" + name + "'");
            return it->second;
        };

        std::map<Field, std::string> assigned;
        if (auto fc = root["field_catalogs"]) {
            for (const auto& kv : fc) {
                auto key = kv.first.as<std::string>();
                auto field = parse_field(key);
                if (!field) throw ConfigError("unknown semantic field '" + key + "' in field_catalogs");
                assigned[*field] = kv.second.as<std::string>();
            }
        }
        std::string default_tri = root["default_tristate_catalog"] ? root["default_tristate_catalog"].as<std::string>() : "";

        auto catalog_for = [&](Field f) -> const RawCatalog& {
            if (auto it = assigned.find(f); it != assigned.end()) return find_catalog(it->second);
            if (f == Field::Sex || f == Field::PatientType || default_tri.empty())
                throw ConfigError("field '" + std::string(field_name(f)) + "' has no catalog");
            return find_catalog(default_tri);
        };

        if (schema.present(Field::Sex)) schema.sex_catalog = typed_catalog<Sex>(catalog_for(Field::Sex), field_name(Field::Sex), parse_sex);
        else schema.sex_catalog = CodeTable<Sex>({}, Sex::Unspecified);
        schema.patient_type_catalog =
            typed_catalog<CareType>(catalog_for(Field::PatientType), field_name(Field::PatientType), parse_care_type);
        for (std::size_t i = 0; i < kFieldCount; ++i) {
            auto f = static_cast<Field>(i);
            if (!is_tristate_field(f)) continue;
            if (!schema.present(f) && !assigned.count(f) && default_tri.empty()) {
                schema.tristate_catalogs[i] = CodeTable<TriState>({}, TriState::Unspecified);
                continue;
            }
            schema.tristate_catalogs[i] = typed_catalog<TriState>(catalog_for(f), field_name(f), parse_tristate);
        }
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("schema: ") + e.what());
    }

    schema.validate();
    return schema;
}

SchemaConfig SchemaConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read schema file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_yaml(ss.str());
}

SchemaConfig SchemaConfig::default_profile() { return from_yaml(std::string(default_profile_yaml())); }

std::optional<CalendarDate> parse_date(std::string_view text, std::string_view pattern) {
    text = trim(text);
    int year = 0;
    unsigned month = 0, day = 0;
    std::size_t t = 0;
    auto read_digits = [&](std::size_t n, auto& out) {
        if (t + n > text.size()) return false;
        auto first = text.data() + t;
        for (std::size_t i = 0; i < n; ++i)
            if (first[i] < '0' || first[i] > '9') return false;
        auto [ptr, ec] = std::from_chars(first, first + n, out);
        if (ec != std::errc{} || ptr != first + n) return false;
        t += n;
        return true;
    };
    for (std::size_t p = 0; p < pattern.size();) {
        if (pattern.compare(p, 4, "YYYY") == 0) {
            if (!read_digits(4, year)) return std::nullopt;
            p += 4;
        } else if (pattern.compare(p, 2, "MM") == 0) {
            if (!read_digits(2, month)) return std::nullopt;
            p += 2;
        } else if (pattern.compare(p, 2, "DD") == 0) {
            if (!read_digits(2, day)) return std::nullopt;
            p += 2;
        } else {
            if (t >= text.size() || text[t] != pattern[p]) return std::nullopt;
            ++t;
            ++p;
        }
    }
    if (t != text.size()) return std::nullopt;
    CalendarDate d{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!d.ok()) return std::nullopt;
    return d;
}

ParsedDate parse_death_date(std::string_view cell, const SchemaConfig& schema) {
    if (schema.is_date_sentinel(cell)) return {DateCellStatus::Sentinel, {}};
    if (auto d = parse_date(cell, schema.date_format)) return {DateCellStatus::Valid, *d};
    return {DateCellStatus::Malformed, {}};
}

}  // namespace epicohort
