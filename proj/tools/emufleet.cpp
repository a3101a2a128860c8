// Command-line frontend: dataset validation, index smoothing, network
// training, prediction, checkpoint replay and full report generation.
//
// Exit codes: 0 success, 2 invalid input or flags, 3 numeric failure.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "emu/bpnn.hpp"
#include "emu/cnn.hpp"
#include "emu/dataset.hpp"
#include "emu/errors.hpp"
#include "emu/pipeline.hpp"
#include "emu/smoothing.hpp"

namespace fs = std::filesystem;

namespace {

// Stage-then-commit file writing: content lands under the final name only
// once complete, so a failed run leaves no partial outputs behind.
class OutputStager {
public:
    void stage(const fs::path& path, std::string content) {
        staged_.push_back({path, std::move(content)});
    }

    void commit() {
        std::vector<fs::path> temps;
        try {
            for (const auto& [path, content] : staged_) {
                fs::path tmp = path;
                tmp += ".tmp";
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                if (!out)
                    throw emu::Error("cannot open " + tmp.string() + " for writing");
                out.write(content.data(), static_cast<std::streamsize>(content.size()));
                out.close();
                if (!out)
                    throw emu::Error("failed writing " + tmp.string());
                temps.push_back(tmp);
            }
            for (std::size_t i = 0; i < staged_.size(); ++i)
                fs::rename(temps[i], staged_[i].first);
        } catch (...) {
            for (const auto& tmp : temps) {
                std::error_code ec;
                fs::remove(tmp, ec);
            }
            throw;
        }
    }

private:
    std::vector<std::pair<fs::path, std::string>> staged_;
};

std::string shortest(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw emu::ParseError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

emu::TrainConfig train_config_from(std::uint64_t seed, int epochs, double lr,
                                   double init_scale, const std::string& order) {
    emu::TrainConfig config;
    config.seed = seed;
    config.epochs = epochs;
    config.learning_rate = lr;
    config.init_scale = init_scale;
    config.sample_order = emu::sample_order_from_string(order);
    return config;
}

void run_validate(const std::string& data_path) {
    const auto records = emu::load_dataset(fs::path(data_path));
    int with_fleet = 0;
    for (const auto& r : records)
        if (r.fleet_size) ++with_fleet;
    std::cout << "validate-data: " << records.size() << " years ("
              << records.front().year << "-" << records.back().year << "), "
              << with_fleet << " with a known fleet size\n";
}

void run_smooth(const std::string& data_path, const std::string& order_override,
                double alpha_override, int horizon, const std::string& out_path) {
    const auto records = emu::load_dataset(fs::path(data_path));
    std::vector<emu::YearRecord> train, rest;
    for (const auto& r : records)
        (r.fleet_size ? train : rest).push_back(r);
    if (train.size() < 3)
        throw emu::ValidationError("smooth: need at least 3 years with a known fleet size");

    std::string csv = "year,index,forecast\n";
    const int last_year = train.back().year;
    for (int i = 0; i < emu::kIndexCount; ++i) {
        const auto f = static_cast<emu::Feature>(i);
        std::vector<double> series;
        for (const auto& r : train) series.push_back(r.indices[i]);

        const emu::SmoothingOrder order =
            order_override.empty() ? emu::default_smoothing_order(f)
                                   : emu::smoothing_order_from_string(order_override);

        double alpha = alpha_override;
        if (alpha <= 0.0) {
            std::vector<double> ref;
            for (const auto& r : rest) ref.push_back(r.indices[i]);
            if (ref.empty())
                throw emu::ValidationError(
                    "smooth: no reference rows to fit alpha against; pass --alpha");
            alpha = emu::fit_alpha(series, order, ref);
        }
        const emu::SmoothingModel model = emu::fit_smoothing(series, order, alpha);
        for (int h = 1; h <= horizon; ++h) {
            csv += std::to_string(last_year + h);
            csv += ',';
            csv += emu::feature_name(f);
            csv += ',';
            csv += shortest(emu::forecast(model, h));
            csv += '\n';
        }
    }

    OutputStager stager;
    stager.stage(out_path, csv);
    stager.commit();
    std::cout << "smooth: wrote " << horizon << " forecast years for "
              << emu::kIndexCount << " indices to " << out_path << "\n";
}

std::string trace_csv(const emu::MseTrace& trace) {
    std::string csv = "epoch,mse\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        csv += std::to_string(i + 1);
        csv += ',';
        csv += shortest(trace[i]);
        csv += '\n';
    }
    return csv;
}

void run_train_cnn(const std::string& data_path, const emu::TrainConfig& config,
                   const std::string& policy, const std::string& out_path,
                   const std::string& trace_path) {
    const auto records = emu::load_dataset(fs::path(data_path));
    const auto spec =
        emu::fit_normalization(records, emu::norm_policy_from_string(policy));
    const auto samples = emu::make_cnn_samples(records, spec);
    const auto result = emu::train_cnn(samples, config);

    std::ostringstream ckpt;
    emu::save_checkpoint(result.params, ckpt);

    OutputStager stager;
    stager.stage(out_path, ckpt.str());
    if (!trace_path.empty()) stager.stage(trace_path, trace_csv(result.trace));
    stager.commit();

    std::cout << "train-cnn: " << samples.size() << " samples, " << config.epochs
              << " epochs, final MSE "
              << (result.trace.empty() ? "n/a" : shortest(result.trace.back()))
              << " -> " << out_path << "\n";
}

void run_train_bpnn(const std::string& data_path, const emu::TrainConfig& config,
                    const std::string& policy, const std::string& mode,
                    const std::string& out_path, const std::string& trace_path) {
    const auto records = emu::load_dataset(fs::path(data_path));
    const auto spec =
        emu::fit_normalization(records, emu::norm_policy_from_string(policy));
    const auto samples = emu::make_mlp_samples(records, spec);
    const emu::UpdateMode update_mode = [&] {
        if (mode == "batch") return emu::UpdateMode::batch;
        if (mode == "per-sample") return emu::UpdateMode::per_sample;
        throw emu::ParseError("unknown update mode: " + mode);
    }();
    const auto result = emu::train_bpnn(samples, config, update_mode);

    std::ostringstream ckpt;
    emu::save_checkpoint(result.params, ckpt);

    OutputStager stager;
    stager.stage(out_path, ckpt.str());
    if (!trace_path.empty()) stager.stage(trace_path, trace_csv(result.trace));
    stager.commit();

    std::cout << "train-bpnn: " << samples.size() << " samples, " << config.epochs
              << " epochs (" << mode << "), final MSE "
              << (result.trace.empty() ? "n/a" : shortest(result.trace.back()))
              << " -> " << out_path << "\n";
}

void run_predict(const std::string& ckpt_path, const std::string& data_path,
                 const std::string& policy, const std::string& out_path) {
    const auto records = emu::load_dataset(fs::path(data_path));
    const auto spec =
        emu::fit_normalization(records, emu::norm_policy_from_string(policy));

    const std::string ckpt_text = read_file(ckpt_path);
    std::istringstream ckpt(ckpt_text);
    std::vector<emu::FleetPrediction> predictions;
    if (ckpt_text.rfind("format=cnn-ckpt-v1", 0) == 0) {
        predictions = emu::cnn_predict(emu::load_cnn_checkpoint(ckpt), records, spec);
    } else if (ckpt_text.rfind("format=mlp-ckpt-v1", 0) == 0) {
        predictions = emu::mlp_predict(emu::load_mlp_checkpoint(ckpt), records, spec);
    } else {
        throw emu::ParseError("line 1: unrecognized checkpoint format in " + ckpt_path);
    }

    std::string csv = "year,trains\n";
    for (const auto& p : predictions) {
        csv += std::to_string(p.year);
        csv += ',';
        csv += std::to_string(p.trains);
        csv += '\n';
    }
    OutputStager stager;
    stager.stage(out_path, csv);
    stager.commit();
    std::cout << "predict: " << predictions.size() << " years -> " << out_path << "\n";
}

void run_replay(const std::string& ckpt_path, const std::string& data_path,
                const std::string& policy, const std::string& out_path) {
    const auto records = emu::load_dataset(fs::path(data_path));
    std::ifstream ckpt_in(ckpt_path);
    if (!ckpt_in)
        throw emu::ParseError("cannot open checkpoint: " + ckpt_path);
    const emu::CnnParams params = emu::load_cnn_checkpoint(ckpt_in);

    std::vector<emu::ReplayOutcome> outcomes;
    if (policy == "both") {
        const auto report = emu::replay_checkpoint_both(params, records);
        outcomes = {report.all_years, report.train_years};
        emu::write_replay_report(report, std::cout);
    } else {
        outcomes = {emu::replay_checkpoint(params, records,
                                           emu::norm_policy_from_string(policy))};
        emu::write_replay_outcome(outcomes.front(), std::cout);
    }

    if (!out_path.empty()) {
        std::string csv = "policy,year,fitted,reference,deviation\n";
        for (const auto& outcome : outcomes) {
            for (std::size_t i = 0; i < outcome.rows.size(); ++i) {
                csv += std::string(emu::to_string(outcome.policy)) + "," +
                       std::to_string(outcome.rows[i].year) + "," +
                       std::to_string(outcome.fitted[i]) + "," +
                       std::to_string(emu::reference::kCnnFitted[i]) + "," +
                       std::to_string(outcome.deviation[i]) + "\n";
            }
        }
        OutputStager stager;
        stager.stage(out_path, csv);
        stager.commit();
    }
}

void run_report(const std::string& data_path, const emu::TrainConfig& config,
                const std::string& policy, const std::string& csv_path,
                const std::string& md_path) {
    const auto records = emu::load_dataset(fs::path(data_path));
    emu::ExperimentConfig experiment;
    experiment.train = config;
    experiment.policy = emu::norm_policy_from_string(policy);

    const emu::ExperimentReport report = emu::run_experiment(records, experiment);

    std::ostringstream csv, md;
    emu::write_report_csv(report, csv);
    emu::write_report_md(report, md);

    OutputStager stager;
    stager.stage(csv_path, csv.str());
    stager.stage(md_path, md.str());
    stager.commit();

    std::cout << "report: cnn sum|error%|=" << shortest(report.cnn_abs_pct_sum)
              << ", bpnn sum|error%|=" << shortest(report.bpnn_abs_pct_sum) << " -> "
              << csv_path << ", " << md_path << "\n";
}

}  // namespace

namespace {

// One option set per subcommand; CLI11 defaults are applied at registration
// time, so subcommands must not share variables.
struct TrainFlags {
    std::string data_path;
    std::string policy = "all-years";
    std::string sample_order = "chronological";
    double lr = 0.5;
    double init_scale = 0.5;
    int epochs = 100;
    std::uint64_t seed = 0;

    void add_to(CLI::App* sub) {
        sub->add_option("--data", data_path, "Dataset CSV path")->required();
        sub->add_option("--epochs", epochs, "Training epochs")
            ->capture_default_str()
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--lr", lr, "Learning rate")
            ->capture_default_str()
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--seed", seed, "RNG seed for initialization")
            ->capture_default_str();
        sub->add_option("--init-scale", init_scale, "Uniform(-s,s) initialization scale")
            ->capture_default_str()
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--sample-order", sample_order,
                        "Sample order: chronological|shuffled-per-epoch")
            ->capture_default_str()
            ->check(CLI::IsMember({"chronological", "shuffled-per-epoch"}));
        sub->add_option("--policy", policy, "Normalization policy: all-years|train-years")
            ->capture_default_str()
            ->check(CLI::IsMember({"all-years", "train-years"}));
    }

    emu::TrainConfig config() const {
        return train_config_from(seed, epochs, lr, init_scale, sample_order);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EMU fleet size forecasting toolkit"};
    app.require_subcommand(1);

    struct {
        std::string data_path;
    } validate_opts;
    auto* validate = app.add_subcommand("validate-data", "Check a dataset CSV");
    validate->add_option("--data", validate_opts.data_path, "Dataset CSV path")->required();

    struct {
        std::string data_path;
        std::string order;
        std::string out_path = "smooth.csv";
        double alpha = 0.0;
        int horizon = 5;
    } smooth_opts;
    auto* smooth =
        app.add_subcommand("smooth", "Forecast the nine indices by exponential smoothing");
    smooth->add_option("--data", smooth_opts.data_path, "Dataset CSV path")->required();
    smooth->add_option("--order", smooth_opts.order, "Smoothing order: single|double|triple")
        ->check(CLI::IsMember({"single", "double", "triple"}));
    smooth->add_option("--alpha", smooth_opts.alpha, "Fixed smoothing constant in (0,1)")
        ->check([](const std::string& s) -> std::string {
            try {
                const double v = std::stod(s);
                if (v > 0.0 && v < 1.0) return {};
            } catch (const std::exception&) {
            }
            return "alpha must lie in (0,1)";
        });
    smooth->add_option("--horizon", smooth_opts.horizon, "Years to forecast")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    smooth->add_option("--out", smooth_opts.out_path, "Output CSV path")
        ->capture_default_str();

    TrainFlags cnn_opts;
    std::string cnn_out, cnn_trace;
    auto* train_cnn = app.add_subcommand("train-cnn", "Train the convolutional network");
    cnn_opts.add_to(train_cnn);
    train_cnn->add_option("--out", cnn_out, "Checkpoint output path")->required();
    train_cnn->add_option("--trace", cnn_trace, "Per-epoch MSE CSV output path");

    TrainFlags bpnn_opts;
    std::string bpnn_out, bpnn_trace, bpnn_mode = "batch";
    auto* train_bpnn = app.add_subcommand("train-bpnn", "Train the fully connected baseline");
    bpnn_opts.add_to(train_bpnn);
    train_bpnn->add_option("--mode", bpnn_mode, "Update mode: batch|per-sample")
        ->capture_default_str()
        ->check(CLI::IsMember({"batch", "per-sample"}));
    train_bpnn->add_option("--out", bpnn_out, "Checkpoint output path")->required();
    train_bpnn->add_option("--trace", bpnn_trace, "Per-epoch MSE CSV output path");

    struct {
        std::string ckpt_path;
        std::string data_path;
        std::string policy = "all-years";
        std::string out_path = "predictions.csv";
    } predict_opts;
    auto* predict = app.add_subcommand("predict", "Predict fleet sizes with a checkpoint");
    predict->add_option("--ckpt", predict_opts.ckpt_path, "Checkpoint path")->required();
    predict->add_option("--data", predict_opts.data_path, "Dataset CSV path")->required();
    predict
        ->add_option("--policy", predict_opts.policy,
                     "Normalization policy: all-years|train-years")
        ->capture_default_str()
        ->check(CLI::IsMember({"all-years", "train-years"}));
    predict->add_option("--out", predict_opts.out_path, "Output CSV path")
        ->capture_default_str();

    struct {
        std::string ckpt_path;
        std::string data_path;
        std::string policy = "both";
        std::string out_path;
    } replay_opts;
    auto* replay =
        app.add_subcommand("replay", "Compare a checkpoint's fitted values with the "
                                     "bundled reference row");
    replay->add_option("--ckpt", replay_opts.ckpt_path, "Checkpoint path")->required();
    replay->add_option("--data", replay_opts.data_path, "Dataset CSV path")->required();
    replay
        ->add_option("--policy", replay_opts.policy,
                     "Normalization policy: all-years|train-years|both")
        ->capture_default_str()
        ->check(CLI::IsMember({"all-years", "train-years", "both"}));
    replay->add_option("--out", replay_opts.out_path, "Optional deviation CSV path");

    TrainFlags report_opts;
    std::string report_csv = "report.csv", report_md = "report.md";
    auto* report = app.add_subcommand("report", "Train both networks and emit the full report");
    report_opts.add_to(report);
    report->add_option("--out-csv", report_csv, "Report CSV path")->capture_default_str();
    report->add_option("--out-md", report_md, "Report markdown path")->capture_default_str();

    try {
        app.parse(argc, argv);

        if (validate->parsed()) {
            run_validate(validate_opts.data_path);
        } else if (smooth->parsed()) {
            run_smooth(smooth_opts.data_path, smooth_opts.order, smooth_opts.alpha,
                       smooth_opts.horizon, smooth_opts.out_path);
        } else if (train_cnn->parsed()) {
            run_train_cnn(cnn_opts.data_path, cnn_opts.config(), cnn_opts.policy, cnn_out,
                          cnn_trace);
        } else if (train_bpnn->parsed()) {
            run_train_bpnn(bpnn_opts.data_path, bpnn_opts.config(), bpnn_opts.policy,
                           bpnn_mode, bpnn_out, bpnn_trace);
        } else if (predict->parsed()) {
            run_predict(predict_opts.ckpt_path, predict_opts.data_path,
                        predict_opts.policy, predict_opts.out_path);
        } else if (replay->parsed()) {
            run_replay(replay_opts.ckpt_path, replay_opts.data_path, replay_opts.policy,
                       replay_opts.out_path);
        } else if (report->parsed()) {
            run_report(report_opts.data_path, report_opts.config(), report_opts.policy,
                       report_csv, report_md);
        }
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const emu::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
