#include "emu/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "emu/errors.hpp"

namespace emu {

namespace {

void append_real(std::string& out, double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

std::string pct2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::vector<YearRecord> with_targets(std::span<const YearRecord> records) {
    std::vector<YearRecord> out;
    for (const auto& r : records)
        if (r.fleet_size) out.push_back(r);
    return out;
}

std::vector<YearRecord> without_targets(std::span<const YearRecord> records) {
    std::vector<YearRecord> out;
    for (const auto& r : records)
        if (!r.fleet_size) out.push_back(r);
    return out;
}

}  // namespace

SmoothingOrder default_smoothing_order(Feature f) {
    switch (f) {
        case Feature::hsr_pass:
        case Feature::hsr_pkm:
            return SmoothingOrder::Triple;
        default:
            return SmoothingOrder::Double;
    }
}

std::vector<ErrorRow> error_table(std::span<const int> years,
                                  std::span<const long long> actual,
                                  std::span<const long long> fitted) {
    if (years.size() != actual.size() || actual.size() != fitted.size())
        throw ValidationError("error_table: input lengths differ");
    std::vector<ErrorRow> rows;
    rows.reserve(years.size());
    for (std::size_t i = 0; i < years.size(); ++i) {
        if (actual[i] == 0)
            throw DomainError("error_table: error percentage undefined for actual 0 (year " +
                              std::to_string(years[i]) + ")");
        ErrorRow row;
        row.year = years[i];
        row.actual = actual[i];
        row.fitted = fitted[i];
        row.error = fitted[i] - actual[i];
        row.error_pct = 100.0 * static_cast<double>(row.error) / static_cast<double>(row.actual);
        rows.push_back(row);
    }
    return rows;
}

double abs_pct_sum(std::span<const ErrorRow> rows) {
    double acc = 0.0;
    for (const auto& r : rows) acc += std::abs(r.error_pct);
    return acc;
}

std::vector<TrainingSample> make_cnn_samples(std::span<const YearRecord> records,
                                             const NormalizationSpec& spec) {
    std::vector<TrainingSample> samples;
    for (const auto& rec : records) {
        if (!rec.fleet_size) continue;
        TrainingSample s;
        s.input = assemble_feature_map(rec, spec);
        s.target = normalize(*rec.fleet_size, spec.target);
        s.year = rec.year;
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<MlpSample> make_mlp_samples(std::span<const YearRecord> records,
                                        const NormalizationSpec& spec) {
    std::vector<MlpSample> samples;
    for (const auto& rec : records) {
        if (!rec.fleet_size) continue;
        MlpSample s;
        for (int i = 0; i < kIndexCount; ++i)
            s.input[i] = normalize(rec.indices[i], spec.features[i]);
        s.target = normalize(*rec.fleet_size, spec.target);
        s.year = rec.year;
        samples.push_back(s);
    }
    return samples;
}

namespace {

std::vector<ErrorRow> rows_against_actuals(std::span<const YearRecord> train_records,
                                           std::span<const FleetPrediction> fitted) {
    std::vector<int> years;
    std::vector<long long> actual, predicted;
    for (std::size_t i = 0; i < train_records.size(); ++i) {
        years.push_back(train_records[i].year);
        actual.push_back(std::llround(*train_records[i].fleet_size));
        predicted.push_back(fitted[i].trains);
    }
    return error_table(years, actual, predicted);
}

}  // namespace

ExperimentReport run_experiment(std::span<const YearRecord> records,
                                const ExperimentConfig& config) {
    const auto train_records = with_targets(records);
    const auto predict_records = without_targets(records);
    if (train_records.empty())
        throw ValidationError("run_experiment: dataset has no years with a known fleet size");

    const NormalizationSpec spec = fit_normalization(records, config.policy);

    ExperimentReport report;
    report.config = config;

    const auto cnn_samples = make_cnn_samples(train_records, spec);
    CnnTrainResult cnn = train_cnn(cnn_samples, config.train);
    report.cnn_trace = std::move(cnn.trace);

    const auto mlp_samples = make_mlp_samples(train_records, spec);
    MlpTrainResult bpnn = train_bpnn(mlp_samples, config.train, UpdateMode::batch);
    report.bpnn_trace = std::move(bpnn.trace);

    const auto cnn_fitted = cnn_predict(cnn.params, train_records, spec);
    const auto bpnn_fitted = mlp_predict(bpnn.params, train_records, spec);
    report.cnn_rows = rows_against_actuals(train_records, cnn_fitted);
    report.bpnn_rows = rows_against_actuals(train_records, bpnn_fitted);
    report.cnn_abs_pct_sum = abs_pct_sum(report.cnn_rows);
    report.bpnn_abs_pct_sum = abs_pct_sum(report.bpnn_rows);

    report.cnn_forecast = cnn_predict(cnn.params, predict_records, spec);
    report.bpnn_forecast = mlp_predict(bpnn.params, predict_records, spec);
    return report;
}

ReplayOutcome replay_checkpoint(const CnnParams& params,
                                std::span<const YearRecord> records, NormPolicy policy,
                                std::span<const long long> reference_fitted) {
    const auto train_records = with_targets(records);
    if (train_records.size() != reference::kTrainYears.size())
        throw ValidationError("replay_checkpoint: expected " +
                              std::to_string(reference::kTrainYears.size()) +
                              " training years, got " +
                              std::to_string(train_records.size()));
    for (std::size_t i = 0; i < train_records.size(); ++i)
        if (train_records[i].year != reference::kTrainYears[i])
            throw ValidationError("replay_checkpoint: training years do not match the "
                                  "reference year range");
    if (reference_fitted.size() != train_records.size())
        throw ValidationError("replay_checkpoint: reference row length mismatch");

    const NormalizationSpec spec = fit_normalization(records, policy);
    const auto fitted = cnn_predict(params, train_records, spec);

    ReplayOutcome outcome;
    outcome.policy = policy;
    for (std::size_t i = 0; i < fitted.size(); ++i) {
        outcome.fitted[i] = fitted[i].trains;
        outcome.deviation[i] = fitted[i].trains - reference_fitted[i];
        outcome.abs_deviation_sum += std::llabs(outcome.deviation[i]);
    }
    outcome.rows = rows_against_actuals(train_records, fitted);
    return outcome;
}

ReplayOutcome replay_checkpoint(const CnnParams& params,
                                std::span<const YearRecord> records, NormPolicy policy) {
    return replay_checkpoint(params, records, policy, reference::kCnnFitted);
}

ReplayReport replay_checkpoint_both(const CnnParams& params,
                                    std::span<const YearRecord> records) {
    ReplayReport report;
    report.all_years = replay_checkpoint(params, records, NormPolicy::all_years);
    report.train_years = replay_checkpoint(params, records, NormPolicy::train_years_only);
    report.better_policy =
        report.train_years.abs_deviation_sum < report.all_years.abs_deviation_sum
            ? NormPolicy::train_years_only
            : NormPolicy::all_years;
    return report;
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
    std::string buf;

    buf.append("[config]\nkey,value\n");
    buf.append("seed,").append(std::to_string(report.config.train.seed)).push_back('\n');
    buf.append("epochs,").append(std::to_string(report.config.train.epochs)).push_back('\n');
    buf.append("learning_rate,");
    append_real(buf, report.config.train.learning_rate);
    buf.push_back('\n');
    buf.append("init_scale,");
    append_real(buf, report.config.train.init_scale);
    buf.push_back('\n');
    buf.append("sample_order,").append(to_string(report.config.train.sample_order));
    buf.push_back('\n');
    buf.append("policy,").append(to_string(report.config.policy));
    buf.push_back('\n');

    const auto write_trace = [&buf](std::string_view name, const MseTrace& trace) {
        buf.append("[").append(name).append("]\nepoch,mse\n");
        for (std::size_t i = 0; i < trace.size(); ++i) {
            buf.append(std::to_string(i + 1)).push_back(',');
            append_real(buf, trace[i]);
            buf.push_back('\n');
        }
    };
    write_trace("trace_cnn", report.cnn_trace);
    write_trace("trace_bpnn", report.bpnn_trace);

    const auto write_rows = [&buf](std::string_view name, const std::vector<ErrorRow>& rows) {
        buf.append("[").append(name).append("]\nyear,actual,fitted,error,error_pct\n");
        for (const auto& r : rows) {
            buf.append(std::to_string(r.year)).push_back(',');
            buf.append(std::to_string(r.actual)).push_back(',');
            buf.append(std::to_string(r.fitted)).push_back(',');
            buf.append(std::to_string(r.error)).push_back(',');
            append_real(buf, r.error_pct);
            buf.push_back('\n');
        }
    };
    write_rows("table5", report.cnn_rows);
    write_rows("table6", report.bpnn_rows);

    buf.append("[forecast]\nyear,cnn_trains,bpnn_trains\n");
    for (std::size_t i = 0; i < report.cnn_forecast.size(); ++i) {
        buf.append(std::to_string(report.cnn_forecast[i].year)).push_back(',');
        buf.append(std::to_string(report.cnn_forecast[i].trains)).push_back(',');
        buf.append(std::to_string(report.bpnn_forecast[i].trains));
        buf.push_back('\n');
    }

    buf.append("[summary]\nkey,value\n");
    buf.append("cnn_abs_pct_sum,");
    append_real(buf, report.cnn_abs_pct_sum);
    buf.push_back('\n');
    buf.append("bpnn_abs_pct_sum,");
    append_real(buf, report.bpnn_abs_pct_sum);
    buf.push_back('\n');
    for (const auto& p : report.cnn_forecast) {
        if (p.year != reference::kHoldoutYear) continue;
        buf.append("holdout_year,").append(std::to_string(reference::kHoldoutYear));
        buf.push_back('\n');
        buf.append("holdout_actual,").append(std::to_string(reference::kFleet2016));
        buf.push_back('\n');
        buf.append("holdout_cnn,").append(std::to_string(p.trains)).push_back('\n');
        buf.append("holdout_cnn_error,")
            .append(std::to_string(p.trains - reference::kFleet2016))
            .push_back('\n');
    }
    for (const auto& p : report.bpnn_forecast) {
        if (p.year != reference::kHoldoutYear) continue;
        buf.append("holdout_bpnn,").append(std::to_string(p.trains)).push_back('\n');
        buf.append("holdout_bpnn_error,")
            .append(std::to_string(p.trains - reference::kFleet2016))
            .push_back('\n');
    }

    buf.append("[reference]\nyear,cnn_trains,bpnn_trains\n");
    for (std::size_t i = 0; i < reference::kForecastYears.size(); ++i) {
        buf.append(std::to_string(reference::kForecastYears[i])).push_back(',');
        buf.append(std::to_string(reference::kCnnForecast[i])).push_back(',');
        buf.append(std::to_string(reference::kBpnnForecast[i]));
        buf.push_back('\n');
    }

    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

namespace {

double parse_real_field(std::string_view field, int line_no) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size())
        throw ParseError("report line " + std::to_string(line_no) +
                         ": cannot parse real '" + std::string(field) + "'");
    return v;
}

long long parse_int_field(std::string_view field, int line_no) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size())
        throw ParseError("report line " + std::to_string(line_no) +
                         ": cannot parse integer '" + std::string(field) + "'");
    return v;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

}  // namespace

ExperimentReport read_report_csv(std::istream& in) {
    ExperimentReport report;
    std::string line;
    std::string section;
    int line_no = 0;
    bool skip_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = line.substr(1, line.size() - 2);
            skip_header = true;
            continue;
        }
        if (skip_header) {  // column header row
            skip_header = false;
            continue;
        }
        const auto fields = split_fields(line);
        if (section == "config") {
            if (fields.size() != 2)
                throw ParseError("report line " + std::to_string(line_no) +
                                 ": config rows need 2 fields");
            const auto& key = fields[0];
            const auto& value = fields[1];
            if (key == "seed")
                report.config.train.seed = static_cast<std::uint64_t>(
                    parse_int_field(value, line_no));
            else if (key == "epochs")
                report.config.train.epochs = static_cast<int>(parse_int_field(value, line_no));
            else if (key == "learning_rate")
                report.config.train.learning_rate = parse_real_field(value, line_no);
            else if (key == "init_scale")
                report.config.train.init_scale = parse_real_field(value, line_no);
            else if (key == "sample_order")
                report.config.train.sample_order = sample_order_from_string(value);
            else if (key == "policy")
                report.config.policy = norm_policy_from_string(value);
        } else if (section == "trace_cnn" || section == "trace_bpnn") {
            auto& trace = section == "trace_cnn" ? report.cnn_trace : report.bpnn_trace;
            if (fields.size() != 2)
                throw ParseError("report line " + std::to_string(line_no) +
                                 ": trace rows need 2 fields");
            trace.push_back(parse_real_field(fields[1], line_no));
        } else if (section == "table5" || section == "table6") {
            auto& rows = section == "table5" ? report.cnn_rows : report.bpnn_rows;
            if (fields.size() != 5)
                throw ParseError("report line " + std::to_string(line_no) +
                                 ": error rows need 5 fields");
            ErrorRow row;
            row.year = static_cast<int>(parse_int_field(fields[0], line_no));
            row.actual = parse_int_field(fields[1], line_no);
            row.fitted = parse_int_field(fields[2], line_no);
            row.error = parse_int_field(fields[3], line_no);
            row.error_pct = parse_real_field(fields[4], line_no);
            rows.push_back(row);
        } else if (section == "forecast") {
            if (fields.size() != 3)
                throw ParseError("report line " + std::to_string(line_no) +
                                 ": forecast rows need 3 fields");
            const int year = static_cast<int>(parse_int_field(fields[0], line_no));
            report.cnn_forecast.push_back({year, parse_int_field(fields[1], line_no)});
            report.bpnn_forecast.push_back({year, parse_int_field(fields[2], line_no)});
        } else if (section == "summary") {
            if (fields.size() != 2)
                throw ParseError("report line " + std::to_string(line_no) +
                                 ": summary rows need 2 fields");
            const auto& key = fields[0];
            if (key == "cnn_abs_pct_sum")
                report.cnn_abs_pct_sum = parse_real_field(fields[1], line_no);
            else if (key == "bpnn_abs_pct_sum")
                report.bpnn_abs_pct_sum = parse_real_field(fields[1], line_no);
        }
        // reference rows are constants; nothing to read back
    }
    return report;
}

namespace {

void write_error_table_md(std::string& buf, std::string_view title,
                          const std::vector<ErrorRow>& rows, double sum,
                          std::span<const long long> reference_fitted,
                          double reference_sum) {
    buf.append("## ").append(title).append("\n\n");
    buf.append("| |");
    for (const auto& r : rows) buf.append(" ").append(std::to_string(r.year)).append(" |");
    buf.append("\n|---|");
    for (std::size_t i = 0; i < rows.size(); ++i) buf.append("---|");
    buf.push_back('\n');
    buf.append("| Actual value |");
    for (const auto& r : rows) buf.append(" ").append(std::to_string(r.actual)).append(" |");
    buf.push_back('\n');
    buf.append("| Fitted value |");
    for (const auto& r : rows) buf.append(" ").append(std::to_string(r.fitted)).append(" |");
    buf.push_back('\n');
    buf.append("| Error |");
    for (const auto& r : rows) buf.append(" ").append(std::to_string(r.error)).append(" |");
    buf.push_back('\n');
    buf.append("| Error percentage |");
    for (const auto& r : rows) buf.append(" ").append(pct2(r.error_pct)).append("% |");
    buf.push_back('\n');
    if (reference_fitted.size() == rows.size()) {
        buf.append("| Reference fitted |");
        for (std::size_t i = 0; i < rows.size(); ++i)
            buf.append(" ").append(std::to_string(reference_fitted[i])).append(" |");
        buf.push_back('\n');
    }
    buf.append("\nSum of absolute error percentages: ").append(pct2(sum));
    buf.append("% (reference run: ").append(pct2(reference_sum)).append("%)\n\n");
}

}  // namespace

void write_report_md(const ExperimentReport& report, std::ostream& out) {
    std::string buf;
    buf.append("# Fleet size experiment report\n\n");
    buf.append("Configuration: seed=").append(std::to_string(report.config.train.seed));
    buf.append(", epochs=").append(std::to_string(report.config.train.epochs));
    buf.append(", learning rate=");
    append_real(buf, report.config.train.learning_rate);
    buf.append(", init scale=");
    append_real(buf, report.config.train.init_scale);
    buf.append(", sample order=").append(to_string(report.config.train.sample_order));
    buf.append(", normalization policy=").append(to_string(report.config.policy));
    buf.append("\n\n");

    if (!report.cnn_trace.empty() && !report.bpnn_trace.empty()) {
        buf.append("Final epoch MSE: CNN=");
        append_real(buf, report.cnn_trace.back());
        buf.append(", BPNN=");
        append_real(buf, report.bpnn_trace.back());
        buf.append(" (reference run: CNN 0.000578, BPNN 0.0042606)\n\n");
    }

    // headline comparison: sum of absolute fitting-error percentages
    write_error_table_md(buf, "Fitting error (CNN)", report.cnn_rows,
                         report.cnn_abs_pct_sum, reference::kCnnFitted, 156.51);
    write_error_table_md(buf, "Fitting error (BPNN)", report.bpnn_rows,
                         report.bpnn_abs_pct_sum, reference::kBpnnFitted, 320.28);

    buf.append("## Forecast\n\n");
    buf.append("| Year | CNN | BPNN | Reference CNN | Reference BPNN |\n");
    buf.append("|---|---|---|---|---|\n");
    for (std::size_t i = 0; i < report.cnn_forecast.size(); ++i) {
        const int year = report.cnn_forecast[i].year;
        buf.append("| ").append(std::to_string(year));
        buf.append(" | ").append(std::to_string(report.cnn_forecast[i].trains));
        buf.append(" | ").append(std::to_string(report.bpnn_forecast[i].trains));
        const auto* ref_it =
            std::find(reference::kForecastYears.begin(), reference::kForecastYears.end(), year);
        if (ref_it != reference::kForecastYears.end()) {
            const std::size_t k =
                static_cast<std::size_t>(ref_it - reference::kForecastYears.begin());
            buf.append(" | ").append(std::to_string(reference::kCnnForecast[k]));
            buf.append(" | ").append(std::to_string(reference::kBpnnForecast[k]));
        } else {
            buf.append(" | - | -");
        }
        buf.append(" |\n");
    }
    buf.push_back('\n');

    for (std::size_t i = 0; i < report.cnn_forecast.size(); ++i) {
        if (report.cnn_forecast[i].year != reference::kHoldoutYear) continue;
        buf.append("## Holdout check (")
            .append(std::to_string(reference::kHoldoutYear))
            .append(")\n\n");
        buf.append("Actual fleet size ")
            .append(std::to_string(reference::kFleet2016))
            .append(" (held out of training). CNN predicted ")
            .append(std::to_string(report.cnn_forecast[i].trains))
            .append(" (error ")
            .append(std::to_string(report.cnn_forecast[i].trains - reference::kFleet2016))
            .append("), BPNN predicted ")
            .append(std::to_string(report.bpnn_forecast[i].trains))
            .append(" (error ")
            .append(std::to_string(report.bpnn_forecast[i].trains - reference::kFleet2016))
            .append(").\n");
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_replay_outcome(const ReplayOutcome& o, std::ostream& out) {
    std::string buf;
    buf.append("policy ").append(to_string(o.policy)).append(":\n");
    buf.append("  year      ");
    for (const auto& r : o.rows) buf.append(std::to_string(r.year)).append("  ");
    buf.push_back('\n');
    buf.append("  fitted    ");
    for (const auto v : o.fitted) buf.append(std::to_string(v)).append("  ");
    buf.push_back('\n');
    buf.append("  reference ");
    for (const auto v : reference::kCnnFitted) buf.append(std::to_string(v)).append("  ");
    buf.push_back('\n');
    buf.append("  deviation ");
    for (const auto v : o.deviation) buf.append(std::to_string(v)).append("  ");
    buf.push_back('\n');
    buf.append("  total |deviation| = ")
        .append(std::to_string(o.abs_deviation_sum))
        .append("\n");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_replay_report(const ReplayReport& report, std::ostream& out) {
    write_replay_outcome(report.all_years, out);
    write_replay_outcome(report.train_years, out);
    std::string buf;
    buf.append("better matching policy: ").append(to_string(report.better_policy));
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

}  // namespace emu
