#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pearl/matrix.hpp"

namespace pearl {

enum class ColumnKind { continuous, categorical };

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    double lo = 0.0, hi = 1.0;             // continuous only, lo < hi
    std::vector<std::string> categories;   // categorical only, nonempty, unique
};

// Tabular layout shared by encoding, the generator's output head and the
// evaluation metrics. Encoded feature order follows column order with the
// label's one-hot block moved to the end.
struct Schema {
    std::vector<Column> columns;
    std::optional<std::string> label_column;

    std::size_t column_index(const std::string& name) const;
    bool has_label() const { return label_column.has_value(); }
    std::size_t label_index() const;          // throws if no label
    std::size_t label_count() const;          // 0 if no label
    // Encoded width of one column (1 for continuous, cardinality for categorical).
    std::size_t column_width(std::size_t idx) const;
    // Total encoded width including the trailing label block.
    std::size_t encoded_width() const;
    // Offset of a non-label column's block in the encoded layout.
    std::size_t column_offset(std::size_t idx) const;
    // Offset of the label block (== encoded width of all non-label columns).
    std::size_t label_offset() const;

    std::uint64_t hash() const;
    void validate() const;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct EncodedDataset {
    Matrix features;  // n x encoded_width, all entries in [0,1]
    std::size_t n = 0;
    std::uint64_t schema_hash = 0;
    std::vector<std::size_t> labels;  // per-record label index; empty if no label
    std::size_t clipped = 0;          // continuous values clipped into range
};

// RFC-4180 reader/writer (quoted fields, doubled quotes, LF output).
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const CsvTable& table, const std::filesystem::path& path);

// Kind inference: a column whose every value parses as a double is continuous
// with the observed [min,max] range; anything else is categorical with the
// observed categories sorted lexicographically.
Schema infer_schema(const CsvTable& table, const std::optional<std::string>& label_column);

Schema load_schema(const std::filesystem::path& path);
void save_schema(const Schema& schema, const std::filesystem::path& path);

EncodedDataset encode(const CsvTable& table, const Schema& schema);

// One decoded record, fields in schema column order.
using DecodedRecord = std::vector<std::string>;

void write_synthetic(const std::vector<DecodedRecord>& records, const Schema& schema,
                     const std::filesystem::path& path);

// Shortest decimal that round-trips to the same 64-bit value.
std::string format_double(double v);

}  // namespace pearl
