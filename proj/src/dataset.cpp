#include "emu/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "emu/errors.hpp"

namespace emu {

namespace {

constexpr std::array<std::string_view, kIndexCount> kNames{
    "hsr_km", "rail_km", "hsr_pass", "hsr_pkm", "rail_pass",
    "rail_pkm", "gdp", "income", "coaches"};

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double parse_real(std::string_view field, int line_no, std::string_view what) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse " +
                         std::string(what) + " from '" + std::string(field) + "'");
    return value;
}

int parse_year(std::string_view field, int line_no) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse year from '" +
                         std::string(field) + "'");
    return value;
}

void format_real(double value, std::string& out) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    out.append(buf, ptr);
}

}  // namespace

std::span<const std::string_view> feature_names() { return kNames; }

std::string_view feature_name(Feature f) {
    return kNames[static_cast<std::size_t>(f)];
}

std::string_view to_string(NormPolicy p) {
    return p == NormPolicy::all_years ? "all-years" : "train-years";
}

NormPolicy norm_policy_from_string(std::string_view name) {
    if (name == "all-years") return NormPolicy::all_years;
    if (name == "train-years") return NormPolicy::train_years_only;
    throw ParseError("unknown normalization policy: " + std::string(name));
}

std::vector<YearRecord> load_dataset(std::istream& in) {
    std::string line;
    int line_no = 1;
    if (!std::getline(in, line))
        throw ParseError("line 1: empty input, expected dataset header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kDatasetHeader)
        throw ParseError("line 1: header does not match dataset schema");

    std::vector<YearRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto fields = split_csv(line);
        if (fields.size() != 2 + kIndexCount)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(2 + kIndexCount) + " fields, got " +
                             std::to_string(fields.size()));

        YearRecord rec;
        rec.year = parse_year(fields[0], line_no);
        if (!fields[1].empty()) {
            const double fleet = parse_real(fields[1], line_no, "fleet_size");
            if (!(fleet > 0.0))
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": fleet_size must be positive");
            rec.fleet_size = fleet;
        }
        for (int i = 0; i < kIndexCount; ++i) {
            const double v = parse_real(fields[2 + i], line_no, kNames[i]);
            if (!std::isfinite(v))
                throw ValidationError("line " + std::to_string(line_no) + ": " +
                                      std::string(kNames[i]) + " is not finite");
            if (v < 0.0)
                throw ValidationError("line " + std::to_string(line_no) + ": " +
                                      std::string(kNames[i]) + " is negative");
            rec.indices[i] = v;
        }

        if (!records.empty()) {
            if (rec.year == records.back().year)
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": duplicate year " + std::to_string(rec.year));
            if (rec.year < records.back().year)
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": years not sorted ascending");
        }
        records.push_back(rec);
    }
    if (records.empty())
        throw ParseError("dataset has a header but no rows");
    return records;
}

std::vector<YearRecord> load_dataset(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in)
        throw ParseError("cannot open dataset file: " + file.string());
    return load_dataset(in);
}

void save_dataset(std::span<const YearRecord> records, std::ostream& out) {
    std::string buf;
    buf.append(kDatasetHeader);
    buf.push_back('\n');
    for (const auto& rec : records) {
        buf.append(std::to_string(rec.year));
        buf.push_back(',');
        if (rec.fleet_size) format_real(*rec.fleet_size, buf);
        for (int i = 0; i < kIndexCount; ++i) {
            buf.push_back(',');
            format_real(rec.indices[i], buf);
        }
        buf.push_back('\n');
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

NormalizationSpec fit_normalization(std::span<const YearRecord> records,
                                    NormPolicy policy) {
    if (records.size() < 2)
        throw ValidationError("fit_normalization: need at least 2 records");

    NormalizationSpec spec;
    spec.policy = policy;

    bool feature_seen = false;
    bool target_seen = false;
    for (const auto& rec : records) {
        const bool in_feature_range =
            policy == NormPolicy::all_years || rec.fleet_size.has_value();
        if (in_feature_range) {
            for (int i = 0; i < kIndexCount; ++i) {
                auto& r = spec.features[i];
                if (!feature_seen) {
                    r.min = r.max = rec.indices[i];
                } else {
                    r.min = std::min(r.min, rec.indices[i]);
                    r.max = std::max(r.max, rec.indices[i]);
                }
            }
            feature_seen = true;
        }
        if (rec.fleet_size) {
            if (!target_seen) {
                spec.target.min = spec.target.max = *rec.fleet_size;
                target_seen = true;
            } else {
                spec.target.min = std::min(spec.target.min, *rec.fleet_size);
                spec.target.max = std::max(spec.target.max, *rec.fleet_size);
            }
        }
    }
    if (!feature_seen)
        throw ValidationError("fit_normalization: no records in the policy's year range");
    if (!target_seen)
        throw ValidationError("fit_normalization: no records with a known fleet size");

    for (int i = 0; i < kIndexCount; ++i) {
        if (!(spec.features[i].max > spec.features[i].min))
            throw ValidationError("fit_normalization: feature " + std::string(kNames[i]) +
                                  " has a degenerate range");
    }
    if (!(spec.target.max > spec.target.min))
        throw ValidationError("fit_normalization: fleet_size has a degenerate range");
    return spec;
}

double normalize(double value, const ValueRange& range) {
    return (value - range.min) / (range.max - range.min);
}

double denormalize(double value, const ValueRange& range) {
    return value * (range.max - range.min) + range.min;
}

double normalize(double value, Feature f, const NormalizationSpec& spec) {
    return normalize(value, spec.features[static_cast<std::size_t>(f)]);
}

double denormalize(double value, Feature f, const NormalizationSpec& spec) {
    return denormalize(value, spec.features[static_cast<std::size_t>(f)]);
}

FeatureMap assemble_feature_map(const YearRecord& record, const NormalizationSpec& spec) {
    Grid2D map(3, 3);
    for (int i = 0; i < kIndexCount; ++i) {
        if (!std::isfinite(record.indices[i]))
            throw ValidationError("assemble_feature_map: " + std::string(kNames[i]) +
                                  " missing or not finite for year " +
                                  std::to_string(record.year));
        map.at(i / 3, i % 3) = normalize(record.indices[i], spec.features[i]);
    }
    return map;
}

}  // namespace emu
