#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "emu/grid.hpp"

namespace emu {

inline constexpr int kIndexCount = 9;

/// The nine indices in dataset column order. This is also the row-major
/// order in which assemble_feature_map places them on the 3x3 grid:
///   hsr_km   rail_km   hsr_pass
///   hsr_pkm  rail_pass rail_pkm
///   gdp      income    coaches
enum class Feature {
    hsr_km,     // length of high-speed railways in operation, thousand km
    rail_km,    // length of railways in operation, thousand km
    hsr_pass,   // passenger traffic of high-speed railways, thousand persons
    hsr_pkm,    // passenger-km of high-speed railways, billion
    rail_pass,  // passenger traffic of railways, thousand persons
    rail_pkm,   // passenger-km of railways, billion
    gdp,        // gross domestic product, billion yuan
    income,     // per capita total income of urban households, yuan
    coaches,    // national railway passenger coaches owned
};

std::span<const std::string_view> feature_names();
std::string_view feature_name(Feature f);

/// One calendar year of data. fleet_size is absent for forecast-only years.
struct YearRecord {
    int year = 0;
    std::array<double, kIndexCount> indices{};
    std::optional<double> fleet_size;

    bool operator==(const YearRecord&) const = default;
};

enum class NormPolicy {
    train_years_only,  // feature ranges over years with a known fleet size
    all_years,         // feature ranges over every year in the dataset
};

std::string_view to_string(NormPolicy p);
NormPolicy norm_policy_from_string(std::string_view name);

struct ValueRange {
    double min = 0.0;
    double max = 1.0;

    bool operator==(const ValueRange&) const = default;
};

/// Per-feature min-max ranges. The target (fleet size) range is always
/// fitted on the years where the fleet size is known, whatever the policy.
struct NormalizationSpec {
    std::array<ValueRange, kIndexCount> features{};
    ValueRange target{};
    NormPolicy policy = NormPolicy::all_years;

    bool operator==(const NormalizationSpec&) const = default;
};

inline constexpr std::string_view kDatasetHeader =
    "year,fleet_size,hsr_km,rail_km,hsr_pass,hsr_pkm,rail_pass,rail_pkm,gdp,income,coaches";

/// Parse the dataset CSV. Rows must be sorted by year with unique years,
/// all indices finite and non-negative. Errors name the offending line.
std::vector<YearRecord> load_dataset(std::istream& in);
std::vector<YearRecord> load_dataset(const std::filesystem::path& file);

/// Inverse of load_dataset; values are written in shortest round-trip form,
/// so save(load(csv)) reproduces a canonically formatted file byte for byte.
void save_dataset(std::span<const YearRecord> records, std::ostream& out);

NormalizationSpec fit_normalization(std::span<const YearRecord> records, NormPolicy policy);

/// (value - min) / (max - min)
double normalize(double value, const ValueRange& range);
/// value * (max - min) + min
double denormalize(double value, const ValueRange& range);

double normalize(double value, Feature f, const NormalizationSpec& spec);
double denormalize(double value, Feature f, const NormalizationSpec& spec);

/// 3x3 grid of the record's indices, each min-max normalized.
using FeatureMap = Grid2D;

FeatureMap assemble_feature_map(const YearRecord& record, const NormalizationSpec& spec);

}  // namespace emu
