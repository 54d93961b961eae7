#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "epicohort/record_model.hpp"
#include "epicohort/schema_config.hpp"

namespace epicohort {

enum class RowErrorKind : std::uint8_t { MissingColumn, MalformedDate, MalformedInteger, EmptyRequired, EncodingError };
inline constexpr std::size_t kRowErrorKindCount = 5;

std::string_view to_string(RowErrorKind kind);
std::optional<RowErrorKind> parse_row_error_kind(std::string_view name);

struct RowError {
    std::uint64_t row_number = 0;  // 1-based data row, header excluded
    std::string field;             // semantic field name or "whole-row"
    RowErrorKind kind{};
    std::string raw_excerpt;       // at most 128 bytes

    friend bool operator==(const RowError&, const RowError&) = default;
};

using RowResult = std::variant<PatientRecord, RowError>;

/// Thrown at open time when a mapped column is missing from the header.
class MissingColumnError : public std::runtime_error {
public:
    MissingColumnError(std::string column, Field field)
        : std::runtime_error("input header lacks column '" + column + "' (field " + std::string(field_name(field)) + ")"),
          column_(std::move(column)) {}
    const std::string& column() const { return column_; }

private:
    std::string column_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kExcerptLimit = 128;

/// RFC-4180 record splitter over a byte stream. Reads in fixed-size blocks;
/// memory is bounded by the longest record.
class CsvReader {
public:
    explicit CsvReader(std::istream& in, std::size_t block_size = 1 << 16);

    /// Fills `cells` with the next record. Returns false at end of input.
    bool next(std::vector<std::string>& cells);

    /// Bytes available before the first record is consumed (for encoding sniffing).
    std::string_view peek_block();
    /// Drops `n` bytes of the current block (e.g. a byte-order mark).
    void consume(std::size_t n);

private:
    bool fill();

    std::istream& in_;
    std::vector<char> buf_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
    bool eof_ = false;
};

bool is_valid_utf8(std::string_view s);
std::string latin1_to_utf8(std::string_view s);

/// Header position of every present field.
using ColumnIndex = std::array<std::optional<std::size_t>, kFieldCount>;

struct RawRow {
    std::uint64_t row_number = 0;
    std::vector<std::string> cells;
    bool encoding_error = false;
};

/// Converts one row. A bad field rejects the row; the first failing field (in
/// semantic-field order) is reported.
RowResult parse_row(const RawRow& row, const ColumnIndex& columns, std::size_t header_width, const SchemaConfig& schema);

/// Sequential record stream over a CSV dataset. Open-time failures throw
/// (MissingColumnError, IoError); per-row failures come back as RowError.
class RecordStream {
public:
    RecordStream(const std::filesystem::path& path, const SchemaConfig& schema,
                 std::optional<InputEncoding> encoding_override = std::nullopt);
    RecordStream(std::istream& in, const SchemaConfig& schema, std::optional<InputEncoding> encoding_override = std::nullopt);

    RecordStream(const RecordStream&) = delete;
    RecordStream& operator=(const RecordStream&) = delete;

    /// Next raw row (split and encoding-checked, not decoded).
    bool next_raw(RawRow& row);
    std::optional<RowResult> next();

    const ColumnIndex& columns() const { return columns_; }
    std::size_t header_width() const { return header_.size(); }
    InputEncoding encoding() const { return encoding_; }
    const SchemaConfig& schema() const { return schema_; }

private:
    void open(std::optional<InputEncoding> encoding_override);

    std::unique_ptr<std::ifstream> owned_;
    std::istream* in_;
    SchemaConfig schema_;
    std::optional<CsvReader> reader_;
    std::vector<std::string> header_;
    ColumnIndex columns_{};
    InputEncoding encoding_ = InputEncoding::Utf8;
    std::uint64_t rows_read_ = 0;
    RawRow scratch_;
};

/// Opens a dataset for streaming; throws MissingColumnError / IoError.
std::unique_ptr<RecordStream> open_dataset(const std::filesystem::path& path, const SchemaConfig& schema,
                                           std::optional<InputEncoding> encoding_override = std::nullopt);

struct ValidationReport {
    std::uint64_t rows_total = 0;
    std::uint64_t rows_accepted = 0;
    std::uint64_t rows_rejected = 0;
    std::array<std::uint64_t, kRowErrorKindCount> errors_by_kind{};
    std::vector<RowError> first_errors;
    std::size_t error_cap = 20;
    std::uint64_t age_over_cap = 0;      // warnings, rows still accepted
    std::uint64_t duplicate_ids = 0;     // rows whose record_id was seen before
    std::string encoding;

    std::uint64_t errors(RowErrorKind k) const { return errors_by_kind[static_cast<std::size_t>(k)]; }
    /// Counts one row outcome; keeps the lowest-numbered errors up to error_cap.
    void note(const RowResult& result, int age_cap);
    /// Combines partial reports (e.g. from workers); first_errors stays the
    /// globally lowest row numbers.
    void merge(const ValidationReport& other);

    nlohmann::ordered_json to_json() const;
};

struct ValidationOptions {
    std::size_t error_cap = 20;
    std::optional<InputEncoding> encoding_override;
};

ValidationReport validate_dataset(const std::filesystem::path& path, const SchemaConfig& schema,
                                  const ValidationOptions& options = {});
ValidationReport validate_dataset(std::istream& in, const SchemaConfig& schema, const ValidationOptions& options = {});

}  // namespace epicohort
