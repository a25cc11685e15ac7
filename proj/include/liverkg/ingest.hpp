#pragma once

#include <liverkg/error.hpp>
#include <liverkg/graph.hpp>
#include <liverkg/term.hpp>
#include <liverkg/vocabulary.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace liverkg::ingest {

struct RawRecord {
    std::int64_t row_id = 0;
    std::string category_raw;
    int age = 0;
    std::string sex_raw;
    std::array<std::optional<double>, 10> labs{};  // indexed like lab_names
};

struct EncodedRecord {
    rdf::Iri uid;
    std::int64_t row_id = 0;
    int category = 0;  // 0 donor, 1 suspect donor, 2 hepatitis, 3 fibrosis, 4 cirrhosis
    int age = 0;
    int sex = 0;  // 0 female, 1 male
    std::array<double, 10> labs{};

    double lab(std::string_view name) const {
        for (std::size_t i = 0; i < lab_names.size(); ++i)
            if (lab_names[i] == name) return labs[i];
        throw DataError("unknown lab attribute " + std::string(name));
    }
};

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// RFC 4180 records: comma separated, double-quote quoting with "" escapes,
// quoted fields may span lines. Each row carries its starting line number.
struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

inline std::vector<CsvRow> split_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1;
    row.line = 1;
    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        bool blank = row.fields.size() == 1 && row.fields[0].empty();
        if (!blank) rows.push_back(std::move(row));
        row = CsvRow{};
        row.line = line;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            ++line;
            end_row();
        } else if (c != '\r') {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw ParseError("unterminated quoted CSV field", row.line, 0);
    if (field_started || !row.fields.empty() || !field.empty()) end_row();
    return rows;
}

inline bool is_missing(std::string_view cell) {
    auto t = trim(cell);
    return t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "nan";
}

}  // namespace detail

// Header-keyed parsing of the HCV table. Empty and "NA" lab cells become
// missing values; Category, Age and Sex must be present.
inline std::vector<RawRecord> load_csv(std::string_view text) {
    auto rows = detail::split_csv(text);
    if (rows.empty()) throw DataError("CSV input has no header row");
    const auto& header = rows.front().fields;

    std::map<std::string, std::size_t> columns;
    std::optional<std::size_t> id_col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        auto name = detail::trim(header[i]);
        auto lname = detail::lower(name);
        if (lname.empty() || lname == "x" || lname == "id" || lname == "x/id" || lname == "unnamed: 0") {
            if (!id_col) id_col = i;
            continue;
        }
        columns.emplace(name, i);
    }
    if (!id_col) throw DataError("CSV schema error: missing required column X/ID");
    auto require = [&](const std::string& name) {
        auto it = columns.find(name);
        if (it == columns.end()) throw DataError("CSV schema error: missing required column " + name);
        return it->second;
    };
    std::size_t cat_col = require("Category");
    std::size_t age_col = require("Age");
    std::size_t sex_col = require("Sex");
    std::array<std::size_t, 10> lab_cols{};
    for (std::size_t i = 0; i < lab_names.size(); ++i) lab_cols[i] = require(std::string(lab_names[i]));

    std::vector<RawRecord> out;
    out.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto row_no = std::to_string(r);
        if (row.fields.size() != header.size())
            throw DataError("CSV row " + row_no + " (line " + std::to_string(row.line) + "): expected " +
                            std::to_string(header.size()) + " fields, found " + std::to_string(row.fields.size()));
        RawRecord rec;
        auto id_text = detail::trim(row.fields[*id_col]);
        auto id = rdf::parse_number(id_text);
        if (!id || *id != std::floor(*id))
            throw DataError("CSV row " + row_no + ": row id \"" + id_text + "\" is not an integer");
        rec.row_id = static_cast<std::int64_t>(*id);

        rec.category_raw = detail::trim(row.fields[cat_col]);
        if (rec.category_raw.empty()) throw DataError("CSV row " + row_no + ": Category is missing");
        rec.sex_raw = detail::trim(row.fields[sex_col]);
        if (rec.sex_raw.empty()) throw DataError("CSV row " + row_no + ": Sex is missing");

        auto age_text = detail::trim(row.fields[age_col]);
        auto age = rdf::parse_number(age_text);
        if (!age || *age != std::floor(*age))
            throw DataError("CSV row " + row_no + ": Age \"" + age_text + "\" is not an integer");
        rec.age = static_cast<int>(*age);

        for (std::size_t i = 0; i < lab_names.size(); ++i) {
            const auto& cell = row.fields[lab_cols[i]];
            if (detail::is_missing(cell)) continue;
            auto v = rdf::parse_number(detail::trim(cell));
            if (!v)
                throw DataError("CSV row " + row_no + ": non-numeric " + std::string(lab_names[i]) + " value \"" +
                                detail::trim(cell) + "\"");
            rec.labs[i] = *v;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

// Replaces every missing lab value with the mean of the observed values in
// its column. Age is never imputed.
inline std::vector<RawRecord> impute_means(std::vector<RawRecord> records) {
    for (std::size_t i = 0; i < lab_names.size(); ++i) {
        double sum = 0.0;
        std::size_t observed = 0;
        bool any_missing = false;
        for (const auto& r : records) {
            if (r.labs[i]) {
                sum += *r.labs[i];
                ++observed;
            } else {
                any_missing = true;
            }
        }
        if (!any_missing) continue;
        if (observed == 0) throw DataError("cannot impute column " + std::string(lab_names[i]) + ": all values missing");
        double mean = sum / static_cast<double>(observed);
        for (auto& r : records)
            if (!r.labs[i]) r.labs[i] = mean;
    }
    return records;
}

// Category codes are matched on the leading token of the label, so
// "0s=suspect Blood Donor" and "0s" both encode to 1.
inline int encode_category(std::string_view raw) {
    auto label = detail::lower(detail::trim(raw));
    auto cut = label.find_first_of("= \t");
    auto code = label.substr(0, cut);
    if (code == "0") return 0;
    if (code == "0s") return 1;
    if (code == "1") return 2;
    if (code == "2") return 3;
    if (code == "3") return 4;
    throw DataError("unknown category label \"" + std::string(raw) + "\" (expected 0, 0s, 1, 2 or 3)");
}

inline int encode_sex(std::string_view raw) {
    auto s = detail::lower(detail::trim(raw));
    if (s == "f" || s == "female") return 0;
    if (s == "m" || s == "male") return 1;
    throw DataError("unknown sex label \"" + std::string(raw) + "\" (expected f or m)");
}

inline rdf::Iri record_uid(std::string_view base, std::int64_t row_id) {
    return rdf::Iri(std::string(base) + "uid/" + std::to_string(row_id));
}

inline EncodedRecord encode(const RawRecord& record, std::string_view base = ns::records) {
    EncodedRecord out;
    out.uid = record_uid(base, record.row_id);
    out.row_id = record.row_id;
    out.category = encode_category(record.category_raw);
    out.sex = encode_sex(record.sex_raw);
    out.age = record.age;
    for (std::size_t i = 0; i < lab_names.size(); ++i) {
        if (!record.labs[i])
            throw DataError("row " + std::to_string(record.row_id) + ": " + std::string(lab_names[i]) +
                            " missing; impute before encoding");
        out.labs[i] = *record.labs[i];
    }
    return out;
}

inline std::vector<EncodedRecord> encode_all(const std::vector<RawRecord>& records, std::string_view base = ns::records) {
    std::vector<EncodedRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(encode(r, base));
    return out;
}

inline rdf::Iri schema_iri(std::string_view local) { return rdf::Iri(std::string(ns::schema) + std::string(local)); }

// Adds the record's triples. include_category=false is used for patients
// whose category is what we are trying to find out.
inline void append_record(rdf::Graph& g, const EncodedRecord& r, bool include_category = true) {
    g.insert(r.uid, rdf::Iri(std::string(rdf::rdf_ns::type)), schema_iri("MedicalRecord"));
    g.insert(r.uid, schema_iri("SNo"), rdf::Literal::integer(r.row_id));
    g.insert(r.uid, schema_iri("Age"), rdf::Literal::integer(r.age));
    g.insert(r.uid, schema_iri("Sex"), rdf::Literal::integer(r.sex));
    if (include_category) g.insert(r.uid, schema_iri("Category"), rdf::Literal::integer(r.category));
    for (std::size_t i = 0; i < lab_names.size(); ++i)
        g.insert(r.uid, schema_iri(lab_names[i]), rdf::Literal::float_value(r.labs[i]));
}

// One rdf:type MedicalRecord triple plus fourteen attribute triples per record.
inline rdf::Graph records_to_graph(const std::vector<EncodedRecord>& records) {
    rdf::Graph g;
    for (const auto& r : records) append_record(g, r);
    return g;
}

// Full pipeline: CSV text to encoded records.
inline std::vector<EncodedRecord> load_encoded(std::string_view csv_text, std::string_view base = ns::records) {
    return encode_all(impute_means(load_csv(csv_text)), base);
}

// Reads records back out of a graph produced by records_to_graph,
// ordered by SNo.
inline std::vector<EncodedRecord> decode_records(const rdf::Graph& g) {
    std::vector<EncodedRecord> out;
    auto type = rdf::Iri(std::string(rdf::rdf_ns::type));
    for (const auto& t : g.match(std::nullopt, type, rdf::Term{schema_iri("MedicalRecord")})) {
        EncodedRecord r;
        r.uid = t.subject;
        auto value = [&](std::string_view attr) -> double {
            auto found = g.match(t.subject, schema_iri(attr));
            if (found.empty()) throw DataError(t.subject.str() + " has no " + std::string(attr) + " attribute");
            auto v = rdf::numeric_value(found.front().object);
            if (!v) throw DataError(t.subject.str() + ": " + std::string(attr) + " is not numeric");
            return *v;
        };
        r.row_id = static_cast<std::int64_t>(value("SNo"));
        r.age = static_cast<int>(value("Age"));
        r.sex = static_cast<int>(value("Sex"));
        r.category = static_cast<int>(value("Category"));
        for (std::size_t i = 0; i < lab_names.size(); ++i) r.labs[i] = value(lab_names[i]);
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.row_id < b.row_id; });
    return out;
}

}  // namespace liverkg::ingest
