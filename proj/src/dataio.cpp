#include "pearl/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "pearl/error.hpp"
#include "pearl/rng.hpp"

namespace pearl {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc{} && res.ptr == end && std::isfinite(out);
}

constexpr std::size_t kMaxCategories = 10000;

}  // namespace

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

std::size_t Schema::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return i;
    fail(ErrorKind::invalid_parameter, "schema has no column named '" + name + "'");
}

std::size_t Schema::label_index() const {
    require(has_label(), ErrorKind::invalid_state, "schema has no label column");
    return column_index(*label_column);
}

std::size_t Schema::label_count() const {
    if (!has_label()) return 0;
    const Column& c = columns[label_index()];
    require(c.kind == ColumnKind::categorical, ErrorKind::invalid_data,
            "label column must be categorical");
    return c.categories.size();
}

std::size_t Schema::column_width(std::size_t idx) const {
    const Column& c = columns[idx];
    return c.kind == ColumnKind::continuous ? 1 : c.categories.size();
}

std::size_t Schema::label_offset() const {
    std::size_t w = 0;
    const std::size_t label = has_label() ? label_index() : columns.size();
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (i != label) w += column_width(i);
    return w;
}

std::size_t Schema::encoded_width() const { return label_offset() + label_count(); }

std::size_t Schema::column_offset(std::size_t idx) const {
    const std::size_t label = has_label() ? label_index() : columns.size();
    require(idx != label, ErrorKind::invalid_parameter,
            "label block lives at label_offset(), not at a column offset");
    std::size_t off = 0;
    for (std::size_t i = 0; i < idx; ++i)
        if (i != label) off += column_width(i);
    return off;
}

void Schema::validate() const {
    require(!columns.empty(), ErrorKind::invalid_data, "schema has no columns");
    std::set<std::string> names;
    for (const Column& c : columns) {
        require(names.insert(c.name).second, ErrorKind::invalid_data,
                "duplicate column name '" + c.name + "'");
        if (c.kind == ColumnKind::continuous) {
            require(std::isfinite(c.lo) && std::isfinite(c.hi) && c.lo < c.hi,
                    ErrorKind::invalid_data, "column '" + c.name + "': range must have lo < hi");
        } else {
            require(!c.categories.empty(), ErrorKind::invalid_data,
                    "column '" + c.name + "': empty category list");
            require(c.categories.size() <= kMaxCategories, ErrorKind::invalid_data,
                    "column '" + c.name + "': too many categories");
            std::set<std::string> cats(c.categories.begin(), c.categories.end());
            require(cats.size() == c.categories.size(), ErrorKind::invalid_data,
                    "column '" + c.name + "': duplicate categories");
        }
    }
    if (has_label()) {
        const std::size_t li = column_index(*label_column);
        require(columns[li].kind == ColumnKind::categorical, ErrorKind::invalid_data,
                "label column must be categorical");
    }
}

namespace {

json schema_to_json(const Schema& schema) {
    json cols = json::array();
    for (const Column& c : schema.columns) {
        json jc;
        jc["name"] = c.name;
        if (c.kind == ColumnKind::continuous) {
            jc["kind"] = "continuous";
            jc["range"] = {c.lo, c.hi};
        } else {
            jc["kind"] = "categorical";
            jc["categories"] = c.categories;
        }
        cols.push_back(jc);
    }
    json j;
    j["columns"] = cols;
    if (schema.label_column) j["label_column"] = *schema.label_column;
    return j;
}

Schema schema_from_json(const json& j) {
    Schema s;
    require(j.contains("columns") && j["columns"].is_array(), ErrorKind::invalid_data,
            "schema JSON: missing columns array");
    for (const json& jc : j["columns"]) {
        Column c;
        c.name = jc.at("name").get<std::string>();
        const std::string kind = jc.at("kind").get<std::string>();
        if (kind == "continuous") {
            c.kind = ColumnKind::continuous;
            c.lo = jc.at("range")[0].get<double>();
            c.hi = jc.at("range")[1].get<double>();
        } else if (kind == "categorical") {
            c.kind = ColumnKind::categorical;
            c.categories = jc.at("categories").get<std::vector<std::string>>();
        } else {
            fail(ErrorKind::invalid_data, "schema JSON: unknown kind '" + kind + "'");
        }
        s.columns.push_back(std::move(c));
    }
    if (j.contains("label_column") && !j["label_column"].is_null())
        s.label_column = j["label_column"].get<std::string>();
    s.validate();
    return s;
}

}  // namespace

std::uint64_t Schema::hash() const {
    // Hash of the canonical JSON serialization; stable across platforms.
    const std::string bytes = schema_to_json(*this).dump();
    return fnv1a64(bytes);
}

Schema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io_error, "cannot open schema file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_data, "schema JSON parse error: " + std::string(e.what()));
    }
    return schema_from_json(j);
}

void save_schema(const Schema& schema, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io_error, "cannot write schema file " + path.string());
    out << schema_to_json(schema).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io_error, "cannot open CSV file " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(!content.empty(), ErrorKind::invalid_data, "empty CSV file " + path.string());

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_content = false;
    const auto end_field = [&] {
        row.push_back(field);
        field.clear();
        row_has_content = true;
    };
    const auto end_row = [&] {
        if (row_has_content || !row.empty()) {
            end_field();
            rows.push_back(std::move(row));
            row.clear();
            row_has_content = false;
        }
    };
    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"': in_quotes = true; row_has_content = true; break;
        case ',': end_field(); break;
        case '\r': break;
        case '\n': end_row(); break;
        default: field.push_back(c); row_has_content = true; break;
        }
    }
    if (row_has_content || !row.empty() || !field.empty()) end_row();
    require(!in_quotes, ErrorKind::invalid_data, "CSV ends inside a quoted field");
    require(rows.size() >= 1, ErrorKind::invalid_data, "CSV has no header row");

    CsvTable table;
    table.header = std::move(rows.front());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        require(rows[r].size() == table.header.size(), ErrorKind::invalid_data,
                "CSV row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                    " fields, expected " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(rows[r]));
    }
    return table;
}

namespace {

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

}  // namespace

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io_error, "cannot write CSV file " + path.string());
    const auto write_row = [&out](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << csv_quote(row[i]);
        }
        out << '\n';
    };
    write_row(table.header);
    for (const auto& row : table.rows) write_row(row);
    require(out.good(), ErrorKind::io_error, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Schema inference and encoding
// ---------------------------------------------------------------------------

Schema infer_schema(const CsvTable& table, const std::optional<std::string>& label_column) {
    require(!table.header.empty(), ErrorKind::invalid_data, "CSV has no columns");
    require(!table.rows.empty(), ErrorKind::invalid_data, "CSV has no data rows");
    Schema schema;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        Column col;
        col.name = table.header[c];
        bool numeric = true;
        double lo = 0.0, hi = 0.0;
        std::set<std::string> cats;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const std::string& v = table.rows[r][c];
            require(!v.empty(), ErrorKind::invalid_data,
                    "missing value at row " + std::to_string(r) + ", column '" + col.name + "'");
            double x;
            if (numeric && parse_double(v, x)) {
                if (r == 0) lo = hi = x;
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            } else {
                numeric = false;
            }
            cats.insert(v);
            require(cats.size() <= kMaxCategories, ErrorKind::invalid_data,
                    "column '" + col.name + "' has more than 10000 distinct values");
        }
        // The label column is categorical by contract even when its values
        // happen to be numeric (e.g. 0/1 classes).
        const bool force_categorical = label_column && col.name == *label_column;
        if (numeric && !force_categorical) {
            col.kind = ColumnKind::continuous;
            require(lo < hi, ErrorKind::invalid_data,
                    "column '" + col.name +
                        "' is constant; provide an explicit schema with its range");
            col.lo = lo;
            col.hi = hi;
        } else {
            col.kind = ColumnKind::categorical;
            col.categories.assign(cats.begin(), cats.end());  // set order = lexicographic
        }
        schema.columns.push_back(std::move(col));
    }
    if (label_column) {
        schema.label_column = *label_column;
        schema.column_index(*label_column);  // existence check
    }
    schema.validate();
    return schema;
}

EncodedDataset encode(const CsvTable& table, const Schema& schema) {
    schema.validate();
    require(table.header.size() == schema.columns.size(), ErrorKind::invalid_data,
            "CSV column count does not match schema");
    for (std::size_t c = 0; c < schema.columns.size(); ++c)
        require(table.header[c] == schema.columns[c].name, ErrorKind::invalid_data,
                "CSV column order does not match schema (got '" + table.header[c] +
                    "', expected '" + schema.columns[c].name + "')");
    require(!table.rows.empty(), ErrorKind::invalid_data, "no data rows to encode");

    const std::size_t n = table.rows.size();
    const std::size_t width = schema.encoded_width();
    const bool has_label = schema.has_label();
    const std::size_t label_col = has_label ? schema.label_index() : schema.columns.size();

    EncodedDataset out;
    out.features = Matrix(n, width);
    out.n = n;
    out.schema_hash = schema.hash();
    if (has_label) out.labels.resize(n);

    std::vector<std::size_t> offsets(schema.columns.size(), 0);
    std::vector<std::map<std::string, std::size_t>> cat_index(schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        offsets[c] = (c == label_col) ? schema.label_offset() : schema.column_offset(c);
        const Column& col = schema.columns[c];
        if (col.kind == ColumnKind::categorical)
            for (std::size_t i = 0; i < col.categories.size(); ++i)
                cat_index[c][col.categories[i]] = i;
    }

    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < schema.columns.size(); ++c) {
            const Column& col = schema.columns[c];
            const std::string& v = table.rows[r][c];
            if (col.kind == ColumnKind::continuous) {
                double x;
                require(parse_double(v, x), ErrorKind::invalid_data,
                        "row " + std::to_string(r) + ", column '" + col.name +
                            "': not a number: '" + v + "'");
                double scaled = (x - col.lo) / (col.hi - col.lo);
                if (scaled < 0.0 || scaled > 1.0) {
                    scaled = std::clamp(scaled, 0.0, 1.0);
                    ++out.clipped;
                }
                out.features(r, offsets[c]) = scaled;
            } else {
                const auto it = cat_index[c].find(v);
                require(it != cat_index[c].end(), ErrorKind::invalid_data,
                        "row " + std::to_string(r) + ", column '" + col.name +
                            "': unknown category '" + v + "'");
                const std::size_t idx = it->second;
                if (c == label_col) out.labels[r] = idx;
                out.features(r, offsets[c] + idx) = 1.0;
            }
        }
    }
    return out;
}

void write_synthetic(const std::vector<DecodedRecord>& records, const Schema& schema,
                     const std::filesystem::path& path) {
    CsvTable table;
    for (const Column& c : schema.columns) table.header.push_back(c.name);
    for (const auto& rec : records) {
        require(rec.size() == schema.columns.size(), ErrorKind::invalid_parameter,
                "decoded record width does not match schema");
        table.rows.push_back(rec);
    }
    write_csv(table, path);
}

}  // namespace pearl
