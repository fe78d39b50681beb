// semshield command-line tool: model training, experiment runs and report
// summaries for the secure semantic transmission simulator.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semshield/checkpoint.hpp"
#include "semshield/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissingArtifact = 3;
constexpr int kExitRuntime = 4;

struct TrainCliConfig {
    std::string dataset_dir;
    Eigen::Index train_images = 4000;
    semshield::TrainConfig train;
    int T = 200;
    double beta_start = 1e-4;
    double beta_end = 0.05;
    double eve_snr_db = 10.0;
};

TrainCliConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw semshield::MissingArtifactError("config file not found: " + path);
    nlohmann::json j;
    try {
        in >> j;
        TrainCliConfig c;
        c.dataset_dir = j.value("dataset_dir", std::string{});
        c.train_images = j.value("train_images", Eigen::Index{4000});
        c.train.epochs = j.value("epochs", 20);
        c.train.batch_size = j.value("batch_size", 64);
        c.train.learning_rate = j.value("learning_rate", 1e-3);
        c.train.train_snr_lo_db = j.value("train_snr_lo_db", 5.0);
        c.train.train_snr_hi_db = j.value("train_snr_hi_db", 20.0);
        c.train.seed = j.value("seed", std::uint64_t{1});
        c.T = j.value("T", 200);
        c.beta_start = j.value("beta_start", 1e-4);
        c.beta_end = j.value("beta_end", 0.05);
        c.eve_snr_db = j.value("eve_snr_db", 10.0);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw semshield::ConfigError(std::string("malformed config: ") + e.what());
    }
}

int run_guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const semshield::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const semshield::MissingArtifactError& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return kExitMissingArtifact;
    } catch (const semshield::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitMissingArtifact;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffusion-based secure semantic transmission simulator"};
    app.require_subcommand(1);

    std::string config_path, out_path, codec_path;
    std::vector<std::string> csv_paths;

    auto* train_codec = app.add_subcommand("train-codec", "train the semantic encoder/decoder");
    train_codec->add_option("--config", config_path, "training config JSON")->required();
    train_codec->add_option("--out", out_path, "output checkpoint path")->required();

    auto* train_denoiser = app.add_subcommand("train-denoiser", "train the diffusion denoiser");
    train_denoiser->add_option("--config", config_path, "training config JSON")->required();
    train_denoiser->add_option("--codec", codec_path, "trained codec checkpoint")->required();
    train_denoiser->add_option("--out", out_path, "output checkpoint path")->required();

    auto* train_eve = app.add_subcommand("train-eve", "train Eve's attribute classifier");
    train_eve->add_option("--config", config_path, "training config JSON")->required();
    train_eve->add_option("--codec", codec_path, "trained codec checkpoint")->required();
    train_eve->add_option("--out", out_path, "output checkpoint path")->required();

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("--config", config_path, "experiment config JSON")->required();
    run->add_option("--out", out_path, "output directory")->required();

    auto* report = app.add_subcommand("report", "summarize metrics CSV files");
    report->add_option("csv", csv_paths, "metrics.csv paths")->required();

    CLI11_PARSE(app, argc, argv);

    if (*train_codec) {
        return run_guarded([&] {
            const TrainCliConfig c = load_train_config(config_path);
            std::cout << "resolved seed: " << c.train.seed << "\n";
            const auto ds = semshield::load_dataset(c.dataset_dir, c.train_images, c.train.seed, true);
            semshield::TrainOutcome outcome;
            const auto model = semshield::train_codec(ds, c.train, &outcome);
            if (!outcome.converged)
                std::cerr << "warning: training did not converge (final loss "
                          << outcome.final_loss << ")\n";
            semshield::save_checkpoint(model, out_path);
            std::cout << "codec saved to " << out_path << " (final loss " << outcome.final_loss
                      << ")\n";
        });
    }
    if (*train_denoiser) {
        return run_guarded([&] {
            const TrainCliConfig c = load_train_config(config_path);
            std::cout << "resolved seed: " << c.train.seed << "\n";
            const auto codec = semshield::load_codec(codec_path);
            const auto ds = semshield::load_dataset(c.dataset_dir, c.train_images, c.train.seed, true);
            const auto sch = semshield::make_schedule(c.T, c.beta_start, c.beta_end);
            const semshield::Mat latents = codec.encode_batch(ds.images);
            semshield::TrainOutcome outcome;
            const auto model = semshield::train_denoiser(latents, sch, c.train, &outcome);
            if (!outcome.converged)
                std::cerr << "warning: denoiser validation loss did not improve\n";
            semshield::save_checkpoint(model, out_path);
            std::cout << "denoiser saved to " << out_path << " (val loss " << outcome.final_loss
                      << ")\n";
        });
    }
    if (*train_eve) {
        return run_guarded([&] {
            const TrainCliConfig c = load_train_config(config_path);
            std::cout << "resolved seed: " << c.train.seed << "\n";
            const auto codec = semshield::load_codec(codec_path);
            const auto ds = semshield::load_dataset(c.dataset_dir, c.train_images, c.train.seed, true);
            semshield::Mat latents = codec.encode_batch(ds.images);
            // Eve observes her own channel noise during training, AN excluded
            semshield::RngStream eve_rng(c.train.seed, 0xE7E);
            latents = semshield::awgn_batch(latents, c.eve_snr_db, eve_rng);
            semshield::TrainOutcome outcome;
            const auto model =
                semshield::train_attribute_classifier(latents, ds.labels, c.train, &outcome);
            if (!outcome.converged) std::cerr << "warning: Eve training did not converge\n";
            semshield::save_checkpoint(model, out_path);
            std::cout << "eve classifier saved to " << out_path << " (final CE "
                      << outcome.final_loss << ")\n";
        });
    }
    if (*run) {
        return run_guarded([&] {
            const auto cfg = semshield::load_config(config_path);
            std::cout << "resolved config:\n" << semshield::config_to_json(cfg).dump(2) << "\n";
            const auto models = semshield::load_models(cfg);
            const auto records = semshield::run_experiment(cfg, models);
            semshield::emit_report(records, out_path);
            std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
        });
    }
    if (*report) {
        return run_guarded([&] {
            std::vector<semshield::MetricsRecord> all;
            for (const auto& p : csv_paths) {
                auto recs = semshield::load_metrics_csv(p);
                all.insert(all.end(), recs.begin(), recs.end());
            }
            if (all.empty()) throw std::runtime_error("no records in the given CSV files");
            std::map<std::string, std::vector<const semshield::MetricsRecord*>> by_scen;
            for (const auto& r : all) by_scen[r.scenario].push_back(&r);
            std::cout << "scenario            rows  mean_comm_mse  mean_undefended  eve_acc_min  "
                         "percept_max\n";
            for (const auto& [scen, rows] : by_scen) {
                double comm = 0, undef = 0, acc_min = 2.0, pct_max = 0.0;
                int n_comm = 0, n_undef = 0;
                bool any_acc = false, any_pct = false;
                for (const auto* r : rows) {
                    if (!std::isnan(r->comm_mse)) comm += r->comm_mse, ++n_comm;
                    if (!std::isnan(r->comm_mse_undefended))
                        undef += r->comm_mse_undefended, ++n_undef;
                    if (!std::isnan(r->eve_accuracy))
                        acc_min = std::min(acc_min, r->eve_accuracy), any_acc = true;
                    if (!std::isnan(r->percept_mse))
                        pct_max = std::max(pct_max, r->percept_mse), any_pct = true;
                }
                std::printf("%-19s %5zu  %13s  %15s  %11s  %11s\n", scen.c_str(), rows.size(),
                            n_comm ? std::to_string(comm / n_comm).c_str() : "-",
                            n_undef ? std::to_string(undef / n_undef).c_str() : "-",
                            any_acc ? std::to_string(acc_min).c_str() : "-",
                            any_pct ? std::to_string(pct_max).c_str() : "-");
            }
        });
    }
    return 0;
}
