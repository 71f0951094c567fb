// premonn: train, classify, pose-exp, mesh, emit-plots.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "premonn/curvature_mesh.hpp"
#include "premonn/error.hpp"
#include "premonn/experiment.hpp"
#include "premonn/point_cloud.hpp"

namespace {

namespace cli = premonn::cli;
namespace fs = std::filesystem;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

cli::ExperimentConfig config_or_default(const std::string& path) {
    return path.empty() ? cli::config_from_json(cli::json::object()) : cli::load_config(path);
}

void write_json(const fs::path& path, const cli::json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw premonn::DataError("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictive modular network recognition of series, curves, textures and surfaces"};
    app.require_subcommand(0, 1);
    bool dump_defaults = false;
    app.add_flag("--dump-defaults", dump_defaults, "Print the default configuration as JSON and exit");

    std::string config_path, bundle_dir, output, report_path, cloud_path, item_path, item_label, trajectory_path;

    auto* train = app.add_subcommand("train", "Train one predictor group per class and save a bundle");
    train->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
    train->add_option("-o,--output", output, "Bundle directory (overrides output_dir)");

    auto* classify = app.add_subcommand("classify", "Run the online credit recursion on items");
    classify->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
    classify->add_option("-b,--bundle", bundle_dir, "Bundle directory written by train")->required();
    classify->add_option("-i,--item", item_path, "Single item (replaces the config's item list)");
    classify->add_option("-l,--label", item_label, "True class of --item");
    classify->add_option("-r,--report", report_path, "Report path (default <output_dir>/report.json)");
    classify->add_option("-t,--trajectory", trajectory_path, "Credit trajectory CSV of the first item");

    auto* pose = app.add_subcommand("pose-exp", "Histogram and string-of-networks pose classification");
    pose->add_option("-c,--config", config_path, "Experiment config (JSON)");
    pose->add_option("-r,--report", report_path, "Report path (default <output_dir>/pose_report.json)");

    auto* mesh = app.add_subcommand("mesh", "Build a lines-of-curvature mesh and dump it");
    mesh->add_option("-c,--config", config_path, "Experiment config (JSON)");
    mesh->add_option("--cloud", cloud_path, "Point cloud (.xyz or ASCII .ply)")->required();
    mesh->add_option("-o,--output", output, "Mesh dump path (default <output_dir>/mesh.txt)");

    auto* plots = app.add_subcommand("emit-plots", "Write plot-ready CSVs from a report");
    plots->add_option("-r,--report", report_path, "Report JSON")->required();
    plots->add_option("-o,--output", output, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (dump_defaults) {
            std::cout << cli::to_json(config_or_default("")).dump(2) << '\n';
            return kOk;
        }
        if (*train) {
            auto cfg = cli::load_config(config_path);
            if (!output.empty()) cfg.output_dir = output;
            const auto b = cli::cmd_train(cfg);
            std::size_t files = 0;
            for (const auto& g : b.groups) files += g.size();
            std::cout << "trained " << b.groups.size() << " classes, " << files << " predictor files in " << cfg.output_dir
                      << '\n';
        } else if (*classify) {
            auto cfg = cli::load_config(config_path);
            if (!item_path.empty()) cfg.items = {{item_path, item_label}};
            const auto bundle = cli::load_bundle(bundle_dir);
            const auto report = cli::cmd_classify(cfg, bundle);
            const fs::path rp = report_path.empty() ? fs::path(cfg.output_dir) / "report.json" : fs::path(report_path);
            cli::write_report(rp, report, cfg.keep_trajectories);
            if (!trajectory_path.empty()) {
                std::ofstream f(trajectory_path);
                if (!f) throw premonn::DataError("cannot write " + trajectory_path);
                premonn::core::write_trajectory(f, report.items.front().trajectory, bundle.groups.size());
            }
            for (const auto& it : report.items)
                std::cout << it.file << " -> " << it.predicted << (it.truth.empty() ? "" : " (truth " + it.truth + ")")
                          << '\n';
            if (report.labelled)
                std::cout << "success rate " << report.correct << '/' << report.labelled << " = " << report.success_rate
                          << '\n';
        } else if (*pose) {
            const auto cfg = config_or_default(config_path);
            auto run_cfg = cfg;
            run_cfg.task = cli::Task::pose;
            const auto r = cli::cmd_pose_experiment(run_cfg);
            const fs::path rp = report_path.empty() ? fs::path(cfg.output_dir) / "pose_report.json" : fs::path(report_path);
            write_json(rp, cli::pose_report_to_json(r, run_cfg));
            std::cout << "histogram " << r.histogram_rate << "  string " << r.string_rate << "  (" << r.tests.size()
                      << " tests, " << r.networks << " networks)\n";
        } else if (*mesh) {
            const auto cfg = config_or_default(config_path);
            const auto m = cli::surface_mesh(cloud_path, cfg);
            const fs::path out = output.empty() ? fs::path(cfg.output_dir) / "mesh.txt" : fs::path(output);
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            std::ofstream f(out);
            if (!f) throw premonn::DataError("cannot write " + out.string());
            premonn::geom3d::write_mesh(f, m);
            const fs::path rp = out.parent_path() / "mesh_report.json";
            write_json(rp, {{"task", "mesh"},
                            {"seed", cfg.seed},
                            {"mesh_file", out.string()},
                            {"ok_nodes", m.count(premonn::geom3d::NodeStatus::ok)},
                            {"nodes", m.nodes().size()}});
            std::cout << m.count(premonn::geom3d::NodeStatus::ok) << '/' << m.nodes().size() << " nodes ok, written to "
                      << out.string() << '\n';
        } else if (*plots) {
            for (const auto& p : cli::cmd_emit_plots(report_path, output)) std::cout << p.string() << '\n';
        } else {
            std::cerr << app.help();
            return kUsage;
        }
    } catch (const premonn::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const premonn::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const premonn::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}
