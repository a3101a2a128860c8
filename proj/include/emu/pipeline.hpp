#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "emu/bpnn.hpp"
#include "emu/cnn.hpp"
#include "emu/dataset.hpp"
#include "emu/smoothing.hpp"

namespace emu {

/// Smoothing order used for an index when none is forced: Double for the
/// seven indices whose bundled forecasts grow linearly, Triple for the two
/// high-speed passenger series, which grow quadratically.
SmoothingOrder default_smoothing_order(Feature f);

struct ErrorRow {
    int year = 0;
    long long actual = 0;
    long long fitted = 0;
    long long error = 0;     // fitted - actual
    double error_pct = 0.0;  // 100 * error / actual

    bool operator==(const ErrorRow&) const = default;
};

/// Per-year fitting errors. All spans must have equal length and every
/// actual value must be nonzero.
std::vector<ErrorRow> error_table(std::span<const int> years,
                                  std::span<const long long> actual,
                                  std::span<const long long> fitted);

double abs_pct_sum(std::span<const ErrorRow> rows);

/// Reference results bundled with the repository for regression comparison:
/// the actual fleet sizes, the fitted values and five-year forecasts the
/// bundled reference parameters were reported to produce, and the first
/// post-training actual value, which is held out of training.
namespace reference {
inline constexpr std::array<int, 9> kTrainYears{2007, 2008, 2009, 2010, 2011,
                                                2012, 2013, 2014, 2015};
inline constexpr std::array<long long, 9> kActualFleet{105,  176,  285,
                                                       551,  849,  1083,
                                                       1308, 1712, 2206};
inline constexpr std::array<long long, 9> kCnnFitted{-2,   121,  275,
                                                     522,  865,  1106,
                                                     1371, 1793, 2229};
inline constexpr std::array<long long, 9> kBpnnFitted{-49,  38,   378,
                                                      719,  877,  1270,
                                                      1318, 1716, 1974};
inline constexpr std::array<int, 5> kForecastYears{2016, 2017, 2018, 2019, 2020};
inline constexpr std::array<long long, 5> kCnnForecast{2518, 2776, 2973, 3118, 3219};
inline constexpr std::array<long long, 5> kBpnnForecast{2204, 2543, 2676, 2675, 2650};
inline constexpr long long kFleet2016 = 2586;
inline constexpr int kHoldoutYear = 2016;
}  // namespace reference

/// Normalized training/prediction views of the dataset.
std::vector<TrainingSample> make_cnn_samples(std::span<const YearRecord> records,
                                             const NormalizationSpec& spec);
std::vector<MlpSample> make_mlp_samples(std::span<const YearRecord> records,
                                        const NormalizationSpec& spec);

struct ExperimentConfig {
    TrainConfig train;
    NormPolicy policy = NormPolicy::all_years;

    bool operator==(const ExperimentConfig&) const = default;
};

struct ExperimentReport {
    ExperimentConfig config;
    MseTrace cnn_trace;
    MseTrace bpnn_trace;
    std::vector<ErrorRow> cnn_rows;   // training years
    std::vector<ErrorRow> bpnn_rows;  // training years
    std::vector<FleetPrediction> cnn_forecast;
    std::vector<FleetPrediction> bpnn_forecast;
    double cnn_abs_pct_sum = 0.0;
    double bpnn_abs_pct_sum = 0.0;
};

/// Train both networks on the years with known fleet size, fit them on the
/// training years, forecast the remaining years, and account errors.
ExperimentReport run_experiment(std::span<const YearRecord> records,
                                const ExperimentConfig& config);

struct ReplayOutcome {
    NormPolicy policy = NormPolicy::all_years;
    std::array<long long, 9> fitted{};
    std::vector<ErrorRow> rows;            // vs actual fleet sizes
    std::array<long long, 9> deviation{};  // fitted - reference fitted
    long long abs_deviation_sum = 0;
};

/// Forward the checkpoint parameters over the training years under one
/// normalization policy and compare with a reference fitted row
/// (reference::kCnnFitted unless another row is given).
ReplayOutcome replay_checkpoint(const CnnParams& params,
                                std::span<const YearRecord> records,
                                NormPolicy policy);
ReplayOutcome replay_checkpoint(const CnnParams& params,
                                std::span<const YearRecord> records, NormPolicy policy,
                                std::span<const long long> reference_fitted);

struct ReplayReport {
    ReplayOutcome all_years;
    ReplayOutcome train_years;
    NormPolicy better_policy = NormPolicy::all_years;  // smaller total deviation
};

/// Replay under both policies and flag the better-matching one.
ReplayReport replay_checkpoint_both(const CnnParams& params,
                                    std::span<const YearRecord> records);

/// Sectioned CSV ([trace_cnn], [trace_bpnn], [table5], [table6], [forecast],
/// [summary], [reference], [config]); numeric fields round-trip through
/// read_report_csv.
void write_report_csv(const ExperimentReport& report, std::ostream& out);
ExperimentReport read_report_csv(std::istream& in);

/// Human-readable tables for the same report.
void write_report_md(const ExperimentReport& report, std::ostream& out);

void write_replay_outcome(const ReplayOutcome& outcome, std::ostream& out);
void write_replay_report(const ReplayReport& report, std::ostream& out);

}  // namespace emu
