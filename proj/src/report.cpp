#include "epicohort/report.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

namespace epicohort {

namespace {

void append_csv_field(std::string& out, std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
        out += s;
        return;
    }
    out += '"';
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

std::string cell_text(const Cell& cell) {
    if (const auto* n = std::get_if<std::int64_t>(&cell)) return std::to_string(*n);
    return std::get<Percent>(cell).to_string();
}

}  // namespace

std::string emit_csv(const ReportTable& table) {
    std::string out;
    append_csv_field(out, table.row_header);
    for (const auto& label : table.column_labels) {
        out += ',';
        append_csv_field(out, label);
    }
    out += "\r\n";
    for (std::size_t r = 0; r < table.cells.size(); ++r) {
        append_csv_field(out, table.row_labels[r]);
        for (const auto& cell : table.cells[r]) {
            out += ',';
            append_csv_field(out, cell_text(cell));
        }
        out += "\r\n";
    }
    return out;
}

std::string emit_json(const ReportTable& table) {
    nlohmann::ordered_json j;
    j["kind"] = std::string(kind_name(table.kind));
    j["row_header"] = table.row_header;
    j["columns"] = table.column_labels;
    j["rows"] = table.row_labels;
    auto& cells = j["cells"] = nlohmann::ordered_json::array();
    for (const auto& row : table.cells) {
        auto jr = nlohmann::ordered_json::array();
        for (const auto& cell : row) {
            if (const auto* n = std::get_if<std::int64_t>(&cell)) {
                jr.push_back(*n);
            } else {
                const auto& p = std::get<Percent>(cell);
                if (p.defined())
                    jr.push_back(static_cast<double>(p.hundredths()) / 100.0);
                else
                    jr.push_back(nullptr);
            }
        }
        cells.push_back(std::move(jr));
    }
    return j.dump(2) + "\n";
}

ReportTable parse_table_json(std::string_view text) {
    auto j = nlohmann::ordered_json::parse(text);
    ReportTable t;
    t.kind = parse_kind(j.at("kind").get<std::string>());
    t.row_header = j.at("row_header").get<std::string>();
    t.column_labels = j.at("columns").get<std::vector<std::string>>();
    t.row_labels = j.at("rows").get<std::vector<std::string>>();
    for (const auto& jr : j.at("cells")) {
        std::vector<Cell> row;
        for (const auto& c : jr) {
            if (c.is_null())
                row.emplace_back(Percent::undefined());
            else if (c.is_number_float())
                row.emplace_back(Percent::from_hundredths(std::llround(c.get<double>() * 100.0)));
            else
                row.emplace_back(c.get<std::int64_t>());
        }
        t.cells.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Choropleth

namespace {

// Span-level walker over already-validated JSON text; lets the join rewrite
// properties while copying every other byte unchanged.
class JsonSpans {
public:
    explicit JsonSpans(std::string_view text) : s_(text) {}

    std::size_t skip_ws(std::size_t i) const {
        while (i < s_.size() && (s_[i] == ' ' || s_[i] == '\t' || s_[i] == '\n' || s_[i] == '\r')) ++i;
        return i;
    }

    // End (one past) of the value starting at i.
    std::size_t value_end(std::size_t i) const {
        char c = s_[i];
        if (c == '"') return string_end(i);
        if (c == '{' || c == '[') {
            int depth = 0;
            while (i < s_.size()) {
                char d = s_[i];
                if (d == '"') {
                    i = string_end(i);
                    continue;
                }
                if (d == '{' || d == '[') ++depth;
                if (d == '}' || d == ']') {
                    if (--depth == 0) return i + 1;
                }
                ++i;
            }
            throw GeoJsonError("unterminated container");
        }
        while (i < s_.size() && s_[i] != ',' && s_[i] != '}' && s_[i] != ']' && s_[i] != ' ' && s_[i] != '\n' &&
               s_[i] != '\r' && s_[i] != '\t')
            ++i;
        return i;
    }

    std::size_t string_end(std::size_t i) const {
        for (++i; i < s_.size(); ++i) {
            if (s_[i] == '\\') {
                ++i;
                continue;
            }
            if (s_[i] == '"') return i + 1;
        }
        throw GeoJsonError("unterminated string");
    }

    struct Member {
        std::string_view key_token;  // raw, including quotes
        std::string key;
        std::string_view value;
        std::size_t value_begin;
    };

    // Members of the object starting at i.
    std::vector<Member> members(std::size_t i) const {
        std::vector<Member> out;
        i = skip_ws(i);
        if (s_[i] != '{') throw GeoJsonError("expected an object");
        i = skip_ws(i + 1);
        if (s_[i] == '}') return out;
        for (;;) {
            auto kb = i;
            auto ke = string_end(kb);
            Member m;
            m.key_token = s_.substr(kb, ke - kb);
            m.key = nlohmann::json::parse(m.key_token).get<std::string>();
            i = skip_ws(ke);
            ++i;  // ':'
            i = skip_ws(i);
            auto ve = value_end(i);
            m.value = s_.substr(i, ve - i);
            m.value_begin = i;
            out.push_back(std::move(m));
            i = skip_ws(ve);
            if (s_[i] == ',') {
                i = skip_ws(i + 1);
                continue;
            }
            break;  // '}'
        }
        return out;
    }

    // Element spans of the array starting at i.
    std::vector<std::pair<std::size_t, std::size_t>> elements(std::size_t i) const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        i = skip_ws(i);
        i = skip_ws(i + 1);
        if (s_[i] == ']') return out;
        for (;;) {
            auto e = value_end(i);
            out.emplace_back(i, e);
            i = skip_ws(e);
            if (s_[i] == ',') {
                i = skip_ws(i + 1);
                continue;
            }
            break;
        }
        return out;
    }

private:
    std::string_view s_;
};

std::optional<long> property_code(const nlohmann::ordered_json& v) {
    if (v.is_number_integer()) return v.get<long>();
    if (v.is_number_float()) {
        auto d = v.get<double>();
        if (d == std::floor(d)) return static_cast<long>(d);
        return std::nullopt;
    }
    if (v.is_string()) {
        auto s = v.get<std::string>();
        if (s.empty() || s.size() > 12) return std::nullopt;
        for (char c : s)
            if (c < '0' || c > '9') return std::nullopt;
        return std::stol(s);
    }
    return std::nullopt;
}

}  // namespace

long join_code(const RegionKey& region) {
    if (region.municipality_code) return static_cast<long>(region.state_code) * 1000 + *region.municipality_code;
    return region.state_code;
}

ChoroplethResult emit_choropleth(const std::vector<FatalityRateRow>& rates, std::string_view boundaries,
                                 std::string_view join_key) {
    std::map<long, const FatalityRateRow*> by_code;
    for (const auto& row : rates) {
        if (!row.region) continue;
        auto code = join_code(*row.region);
        if (!by_code.emplace(code, &row).second) throw DuplicateRegion(code);
    }

    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(boundaries);
    } catch (const nlohmann::json::parse_error& e) {
        throw GeoJsonError(std::string("boundaries are not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array())
        throw GeoJsonError("boundaries must be a GeoJSON FeatureCollection");

    JsonSpans spans(boundaries);
    auto start = spans.skip_ws(0);
    std::string out;
    out.reserve(boundaries.size() + doc["features"].size() * 64);
    std::set<long> matched;
    ChoroplethResult result;

    out += '{';
    bool first_member = true;
    for (const auto& top : spans.members(start)) {
        if (!first_member) out += ',';
        first_member = false;
        out += top.key_token;
        out += ':';
        if (top.key != "features") {
            out += top.value;
            continue;
        }
        out += '[';
        bool first_feature = true;
        for (auto [fb, fe] : spans.elements(top.value_begin)) {
            out += first_feature ? "\n" : ",\n";
            first_feature = false;
            auto members = spans.members(fb);

            auto properties = nlohmann::ordered_json::object();
            for (const auto& m : members)
                if (m.key == "properties" && m.value != "null") properties = nlohmann::ordered_json::parse(m.value);

            const FatalityRateRow* row = nullptr;
            if (properties.contains(std::string(join_key)))
                if (auto code = property_code(properties[std::string(join_key)]))
                    if (auto it = by_code.find(*code); it != by_code.end()) {
                        row = it->second;
                        matched.insert(*code);
                    }
            if (row) {
                ++result.matched_features;
                properties["deaths"] = row->deaths;
                properties["positives"] = row->positives;
                if (row->rate_percent.defined())
                    properties["rate_percent"] = static_cast<double>(row->rate_percent.hundredths()) / 100.0;
                else
                    properties["rate_percent"] = nullptr;
            } else {
                properties["rate_percent"] = nullptr;
            }

            out += '{';
            bool first = true;
            bool wrote_properties = false;
            for (const auto& m : members) {
                if (!first) out += ',';
                first = false;
                out += m.key_token;
                out += ':';
                if (m.key == "properties") {
                    out += properties.dump();
                    wrote_properties = true;
                } else {
                    out += m.value;
                }
            }
            if (!wrote_properties) {
                if (!first) out += ',';
                out += "\"properties\":";
                out += properties.dump();
            }
            out += '}';
        }
        out += first_feature ? "]" : "\n]";
    }
    out += "}\n";

    for (const auto& [code, row] : by_code)
        if (!matched.count(code)) result.join_misses.push_back(code);
    result.geojson = std::move(out);
    return result;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto dir = path.parent_path();
    std::random_device rd;
    auto tmp = (dir.empty() ? std::filesystem::path(".") : dir) /
               ("." + path.filename().string() + ".tmp" + std::to_string(rd() % 1000000));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace epicohort
