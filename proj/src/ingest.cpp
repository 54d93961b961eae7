#include "epicohort/ingest.hpp"

#include <algorithm>
#include <charconv>

namespace epicohort {

namespace {

constexpr std::array<std::string_view, kRowErrorKindCount> kRowErrorKindNames = {
    "MissingColumn", "MalformedDate", "MalformedInteger", "EmptyRequired", "EncodingError"};

constexpr std::string_view kWholeRow = "whole-row";

std::string excerpt(std::string_view s) {
    if (s.size() <= kExcerptLimit) return std::string(s);
    auto cut = kExcerptLimit;
    // do not split a UTF-8 sequence
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return std::string(s.substr(0, cut));
}

std::string join_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
        if (out.size() > kExcerptLimit * 2) break;
    }
    return out;
}

bool has_high_bytes(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) >= 0x80; });
}

// Last bytes of a sniffed block may hold a partial sequence; accept that.
bool valid_utf8_prefix(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
        if (len == 0) return false;
        if (i + len > s.size()) return true;
        if (!is_valid_utf8(s.substr(i, len))) return false;
        i += len;
    }
    return true;
}

enum class IntStatus { Ok, Empty, Malformed };

IntStatus parse_int(std::string_view cell, int& out) {
    cell = trim(cell);
    if (cell.empty()) return IntStatus::Empty;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) return IntStatus::Malformed;
    return IntStatus::Ok;
}

}  // namespace

std::string_view to_string(RowErrorKind kind) { return kRowErrorKindNames[static_cast<std::size_t>(kind)]; }

std::optional<RowErrorKind> parse_row_error_kind(std::string_view name) {
    for (std::size_t i = 0; i < kRowErrorKindNames.size(); ++i)
        if (kRowErrorKindNames[i] == name) return static_cast<RowErrorKind>(i);
    return std::nullopt;
}

bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    const auto n = s.size();
    while (i < n) {
        auto c = static_cast<unsigned char>(s[i]);
        if (c < 0x80) {
            ++i;
            continue;
        }
        std::size_t len;
        std::uint32_t cp;
        if ((c >> 5) == 0x6) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c >> 4) == 0xE) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c >> 3) == 0x1E) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (std::size_t k = 1; k < len; ++k) {
            auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // overlong forms, surrogates, out of range
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
            (cp >= 0xD800 && cp <= 0xDFFF))
            return false;
        i += len;
    }
    return true;
}

std::string latin1_to_utf8(std::string_view s) {
    std::string out;
    out.reserve(s.size() + s.size() / 4);
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        if (c < 0x80) {
            out.push_back(ch);
        } else {
            out.push_back(static_cast<char>(0xC0 | (c >> 6)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CsvReader

CsvReader::CsvReader(std::istream& in, std::size_t block_size) : in_(in), buf_(block_size) {}

bool CsvReader::fill() {
    if (eof_) return false;
    in_.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (in_.bad()) throw IoError("read failure on input stream");
    end_ = static_cast<std::size_t>(in_.gcount());
    pos_ = 0;
    if (end_ == 0) {
        eof_ = true;
        return false;
    }
    return true;
}

std::string_view CsvReader::peek_block() {
    if (pos_ == end_) fill();
    return {buf_.data() + pos_, end_ - pos_};
}

void CsvReader::consume(std::size_t n) { pos_ = std::min(end_, pos_ + n); }

bool CsvReader::next(std::vector<std::string>& cells) {
    enum class State { FieldStart, Unquoted, Quoted, QuoteSeen };
    State st = State::FieldStart;
    std::size_t n = 0;
    std::string* cur = nullptr;
    bool started = false;

    auto begin_field = [&] {
        if (n == cells.size())
            cells.emplace_back();
        else
            cells[n].clear();
        cur = &cells[n++];
    };
    auto swallow_lf = [&] {
        if (pos_ == end_ && !fill()) return;
        if (buf_[pos_] == '\n') ++pos_;
    };

    for (;;) {
        if (pos_ == end_ && !fill()) {
            if (!started) {
                cells.clear();
                return false;
            }
            break;
        }
        char c = buf_[pos_++];
        if (!started) {
            if (c == '\n' || c == '\r') continue;  // blank line
            started = true;
            begin_field();
        }
        bool end_record = false;
        switch (st) {
            case State::FieldStart:
                if (c == '"') {
                    st = State::Quoted;
                } else if (c == ',') {
                    begin_field();
                } else if (c == '\n' || c == '\r') {
                    end_record = true;
                } else {
                    cur->push_back(c);
                    st = State::Unquoted;
                }
                break;
            case State::Unquoted:
                if (c == ',') {
                    begin_field();
                    st = State::FieldStart;
                } else if (c == '\n' || c == '\r') {
                    end_record = true;
                } else {
                    cur->push_back(c);
                }
                break;
            case State::Quoted:
                if (c == '"')
                    st = State::QuoteSeen;
                else
                    cur->push_back(c);
                break;
            case State::QuoteSeen:
                if (c == '"') {
                    cur->push_back('"');
                    st = State::Quoted;
                } else if (c == ',') {
                    begin_field();
                    st = State::FieldStart;
                } else if (c == '\n' || c == '\r') {
                    end_record = true;
                } else {
                    cur->push_back(c);
                    st = State::Unquoted;
                }
                break;
        }
        if (end_record) {
            if (c == '\r') swallow_lf();
            break;
        }
    }
    cells.resize(n);
    return true;
}

// ---------------------------------------------------------------------------
// Row decoding

RowResult parse_row(const RawRow& row, const ColumnIndex& columns, std::size_t header_width,
                    const SchemaConfig& schema) {
    auto fail = [&](Field f, RowErrorKind kind, std::string_view cell) -> RowResult {
        return RowError{row.row_number, std::string(field_name(f)), kind, excerpt(cell)};
    };
    if (row.encoding_error)
        return RowError{row.row_number, std::string(kWholeRow), RowErrorKind::EncodingError,
                        excerpt(latin1_to_utf8(join_row(row.cells)))};
    if (row.cells.size() != header_width)
        return RowError{row.row_number, std::string(kWholeRow), RowErrorKind::MissingColumn, excerpt(join_row(row.cells))};

    PatientRecord rec;
    for (std::size_t i = 0; i < kFieldCount; ++i) {
        const auto& col = columns[i];
        if (!col) continue;
        const auto f = static_cast<Field>(i);
        std::string_view cell = row.cells[*col];

        if (is_tristate_field(f)) {
            auto v = schema.tristate_catalog(f).decode(cell);
            switch (f) {
                case Field::IndigenousSpeaker: rec.indigenous_speaker = v; break;
                case Field::Contact: rec.contact = v; break;
                case Field::TravelHistory: rec.travel_history = v; break;
                case Field::Icu: rec.icu_code = std::string(trim(cell)); break;
                case Field::Intubated: rec.intubated_code = std::string(trim(cell)); break;
                default:
                    rec.comorbidities[i - static_cast<std::size_t>(Field::Diabetes)] = v;
                    break;
            }
            continue;
        }

        switch (f) {
            case Field::RecordId:
                if (trim(cell).empty()) return fail(f, RowErrorKind::EmptyRequired, cell);
                rec.record_id = std::string(trim(cell));
                break;
            case Field::Sex:
                rec.sex = schema.sex_catalog.decode(cell);
                break;
            case Field::Age: {
                int age = 0;
                auto st = parse_int(cell, age);
                if (st == IntStatus::Empty) return fail(f, RowErrorKind::EmptyRequired, cell);
                if (st == IntStatus::Malformed || age < 0) return fail(f, RowErrorKind::MalformedInteger, cell);
                rec.age = age;
                break;
            }
            case Field::ResidenceState:
            case Field::ReportingState: {
                int state = 0;
                auto st = parse_int(cell, state);
                if (st == IntStatus::Empty) return fail(f, RowErrorKind::EmptyRequired, cell);
                if (st == IntStatus::Malformed || state < 1 || state > kStateCount)
                    return fail(f, RowErrorKind::MalformedInteger, cell);
                if (f == Field::ResidenceState)
                    rec.residence.state_code = state;
                else
                    rec.reporting_state = state;
                break;
            }
            case Field::ResidenceMunicipality: {
                auto t = trim(cell);
                const auto& unspec = schema.municipality_unspecified_codes;
                if (t.empty() || std::find(unspec.begin(), unspec.end(), t) != unspec.end()) break;
                int m = 0;
                if (parse_int(t, m) != IntStatus::Ok || m < 1) return fail(f, RowErrorKind::MalformedInteger, cell);
                rec.residence.municipality_code = m;
                break;
            }
            case Field::PatientType:
                rec.patient_type_code = std::string(trim(cell));
                break;
            case Field::LabResult:
                if (trim(cell).empty()) return fail(f, RowErrorKind::EmptyRequired, cell);
                rec.lab_result_code = std::string(trim(cell));
                break;
            case Field::DeathDate: {
                auto d = parse_death_date(cell, schema);
                if (d.status == DateCellStatus::Malformed) return fail(f, RowErrorKind::MalformedDate, cell);
                rec.death_date = d.value();
                break;
            }
            case Field::SymptomOnsetDate: {
                if (trim(cell).empty() || schema.is_date_sentinel(cell)) break;
                auto d = parse_date(cell, schema.date_format);
                if (!d) return fail(f, RowErrorKind::MalformedDate, cell);
                rec.symptom_onset_date = d;
                break;
            }
            default:
                break;
        }
    }
    return rec;
}

// ---------------------------------------------------------------------------
// RecordStream

RecordStream::RecordStream(const std::filesystem::path& path, const SchemaConfig& schema,
                           std::optional<InputEncoding> encoding_override)
    : owned_(std::make_unique<std::ifstream>(path, std::ios::binary)), in_(owned_.get()), schema_(schema) {
    if (!*owned_) throw IoError("cannot open input file: " + path.string());
    open(encoding_override);
}

RecordStream::RecordStream(std::istream& in, const SchemaConfig& schema, std::optional<InputEncoding> encoding_override)
    : in_(&in), schema_(schema) {
    open(encoding_override);
}

void RecordStream::open(std::optional<InputEncoding> encoding_override) {
    reader_.emplace(*in_);
    auto block = reader_->peek_block();
    bool bom = block.size() >= 3 && block.substr(0, 3) == "\xEF\xBB\xBF";
    if (bom) reader_->consume(3);

    auto requested = encoding_override.value_or(schema_.encoding);
    if (requested == InputEncoding::Auto)
        encoding_ = (bom || valid_utf8_prefix(reader_->peek_block())) ? InputEncoding::Utf8 : InputEncoding::Latin1;
    else
        encoding_ = requested;

    if (!reader_->next(header_)) throw IoError("input has no header row");
    if (encoding_ == InputEncoding::Latin1)
        for (auto& h : header_) h = latin1_to_utf8(h);
    for (auto& h : header_) h = std::string(trim(h));

    for (std::size_t i = 0; i < kFieldCount; ++i) {
        const auto& name = schema_.columns[i];
        if (!name) continue;
        auto it = std::find(header_.begin(), header_.end(), *name);
        if (it == header_.end()) throw MissingColumnError(*name, static_cast<Field>(i));
        columns_[i] = static_cast<std::size_t>(it - header_.begin());
    }
}

bool RecordStream::next_raw(RawRow& row) {
    if (!reader_->next(row.cells)) return false;
    row.row_number = ++rows_read_;
    row.encoding_error = false;
    for (auto& cell : row.cells) {
        if (!has_high_bytes(cell)) continue;
        if (encoding_ == InputEncoding::Latin1) {
            cell = latin1_to_utf8(cell);
        } else if (!is_valid_utf8(cell)) {
            row.encoding_error = true;
        }
    }
    return true;
}

std::optional<RowResult> RecordStream::next() {
    if (!next_raw(scratch_)) return std::nullopt;
    return parse_row(scratch_, columns_, header_.size(), schema_);
}

std::unique_ptr<RecordStream> open_dataset(const std::filesystem::path& path, const SchemaConfig& schema,
                                           std::optional<InputEncoding> encoding_override) {
    return std::make_unique<RecordStream>(path, schema, encoding_override);
}

// ---------------------------------------------------------------------------
// Validation

void ValidationReport::note(const RowResult& result, int age_cap) {
    ++rows_total;
    if (const auto* rec = std::get_if<PatientRecord>(&result)) {
        ++rows_accepted;
        if (rec->age > age_cap) ++age_over_cap;
        return;
    }
    const auto& err = std::get<RowError>(result);
    ++rows_rejected;
    ++errors_by_kind[static_cast<std::size_t>(err.kind)];
    if (first_errors.size() < error_cap) {
        first_errors.push_back(err);
    } else if (!first_errors.empty() && err.row_number < first_errors.back().row_number) {
        first_errors.back() = err;
        std::sort(first_errors.begin(), first_errors.end(),
                  [](const RowError& a, const RowError& b) { return a.row_number < b.row_number; });
    }
}

void ValidationReport::merge(const ValidationReport& other) {
    rows_total += other.rows_total;
    rows_accepted += other.rows_accepted;
    rows_rejected += other.rows_rejected;
    for (std::size_t i = 0; i < kRowErrorKindCount; ++i) errors_by_kind[i] += other.errors_by_kind[i];
    age_over_cap += other.age_over_cap;
    duplicate_ids += other.duplicate_ids;
    first_errors.insert(first_errors.end(), other.first_errors.begin(), other.first_errors.end());
    std::sort(first_errors.begin(), first_errors.end(),
              [](const RowError& a, const RowError& b) { return a.row_number < b.row_number; });
    if (first_errors.size() > error_cap) first_errors.resize(error_cap);
}

nlohmann::ordered_json ValidationReport::to_json() const {
    nlohmann::ordered_json j;
    j["rows_total"] = rows_total;
    j["rows_accepted"] = rows_accepted;
    j["rows_rejected"] = rows_rejected;
    auto& by_kind = j["errors_by_kind"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < kRowErrorKindCount; ++i) by_kind[std::string(kRowErrorKindNames[i])] = errors_by_kind[i];
    j["warnings"] = {{"age_over_cap", age_over_cap}};
    j["duplicate_record_ids"] = duplicate_ids;
    j["encoding"] = encoding;
    auto& errs = j["first_errors"] = nlohmann::ordered_json::array();
    for (const auto& e : first_errors) {
        errs.push_back({{"row", e.row_number},
                        {"field", e.field},
                        {"kind", std::string(to_string(e.kind))},
                        {"excerpt", e.raw_excerpt}});
    }
    return j;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

ValidationReport run_validation(RecordStream& stream, const ValidationOptions& options) {
    ValidationReport report;
    report.error_cap = options.error_cap;
    report.encoding = stream.encoding() == InputEncoding::Latin1 ? "latin1" : "utf8";
    const bool track_ids = stream.schema().present(Field::RecordId);
    std::vector<std::uint64_t> id_hashes;
    while (auto result = stream.next()) {
        report.note(*result, stream.schema().age_cap);
        if (track_ids)
            if (const auto* rec = std::get_if<PatientRecord>(&*result)) id_hashes.push_back(fnv1a(rec->record_id));
    }
    std::sort(id_hashes.begin(), id_hashes.end());
    for (std::size_t i = 1; i < id_hashes.size(); ++i)
        if (id_hashes[i] == id_hashes[i - 1]) ++report.duplicate_ids;
    return report;
}

}  // namespace

ValidationReport validate_dataset(const std::filesystem::path& path, const SchemaConfig& schema,
                                  const ValidationOptions& options) {
    RecordStream stream(path, schema, options.encoding_override);
    return run_validation(stream, options);
}

ValidationReport validate_dataset(std::istream& in, const SchemaConfig& schema, const ValidationOptions& options) {
    RecordStream stream(in, schema, options.encoding_override);
    return run_validation(stream, options);
}

}  // namespace epicohort
