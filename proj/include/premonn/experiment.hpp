#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "premonn/credits.hpp"
#include "premonn/curvature.hpp"
#include "premonn/curvature_mesh.hpp"
#include "premonn/network_repr.hpp"
#include "premonn/predictor.hpp"
#include "premonn/raster.hpp"
#include "premonn/scan.hpp"

namespace premonn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Task { series, curve, texture, surface, pose };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct ClassData {
    std::string name;
    std::vector<std::string> files;
};

struct Item {
    std::string file;
    std::string label;  // empty when unknown
};

struct PoseOptions {
    std::string dataset;  // object/pose/image layout; empty selects the synthetic corpus
    std::size_t objects = 10;
    std::size_t poses = 8;
    std::size_t images = 5;
    bool different_start = false;
    /// Index of the test image inside each pose; < 0 draws one per pose.
    int test_image = -1;
};

struct ExperimentConfig {
    Task task = Task::series;
    std::uint64_t seed = 1;
    std::string output_dir = "premonn_out";
    std::vector<ClassData> classes;
    std::vector<Item> items;

    core::EngineConfig engine;
    std::size_t order = 3;  // AR order for series/curve tasks
    predictors::PredictorSpec predictor;
    predictors::TrainConfig train;

    curves::CurvatureConfig curvature;
    double threshold = 0.5;  // foreground intensity for silhouettes
    bool invert = false;

    int scan_m = 2;
    int scan_l = 2;
    std::string domain_file;
    scan2d::ScanOrder scan_order = scan2d::ScanOrder::boustrophedon;
    std::optional<scan2d::Anchor> scan_start;
    /// Leading fraction of the scan (or series) used online.
    double item_fraction = 1.0;

    geom3d::MeshConfig mesh;
    std::optional<geom3d::Vec3> mesh_seed;

    repr::SegmentationConfig segmentation;
    PoseOptions pose;
    bool keep_trajectories = true;

    void validate() const;
    /// Stencil from domain_file when set, else the canonical causal block.
    scan2d::ScanDomain domain() const;
};

json to_json(const ExperimentConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const fs::path& path);

/// Thread count from PREMONN_THREADS (default: hardware concurrency).
unsigned thread_count();
/// Runs body(i) for i in [0, n) on up to thread_count() threads; the first
/// exception is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// --- data ingestion --------------------------------------------------------

std::vector<double> read_series(const fs::path& path);
curves::CurvatureSequence curve_sequence(const fs::path& image, const ExperimentConfig& cfg);
geom3d::CurvatureMesh surface_mesh(const fs::path& cloud, const ExperimentConfig& cfg);

// --- bundles ---------------------------------------------------------------

/// Trained per-class predictor groups plus the settings recognition must reuse.
struct Bundle {
    Task task = Task::series;
    std::vector<std::string> classes;
    std::size_t order = 0;
    std::optional<scan2d::ScanDomain> domain;
    std::vector<predictors::PredictorGroup> groups;
    json manifest;
};

/// Trains every class and writes `manifest.json` plus `class<k>_ch<p>.pred`
/// into the output directory.
Bundle cmd_train(const ExperimentConfig& cfg);
void save_bundle(const fs::path& dir, const Bundle& b);
Bundle load_bundle(const fs::path& dir);

// --- online recognition ------------------------------------------------------

struct ItemResult {
    std::string file;
    std::string truth;
    std::string predicted;
    std::size_t winner = 0;
    std::vector<core::StepRecord> trajectory;
    std::vector<double> kappa;  // curve items
};

struct EvalReport {
    Task task = Task::series;
    std::uint64_t seed = 0;
    std::vector<std::string> classes;
    std::vector<ItemResult> items;
    std::size_t correct = 0;
    std::size_t labelled = 0;
    double success_rate = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
};

/// Per-step errors of every class predictor on one item.
std::vector<std::vector<double>> item_errors(const Bundle& bundle, const fs::path& item, const ExperimentConfig& cfg,
                                             std::vector<double>* kappa = nullptr);

EvalReport cmd_classify(const ExperimentConfig& cfg, const Bundle& bundle);
void finalize_report(EvalReport& r);
json report_to_json(const EvalReport& r, bool with_trajectories);
void write_report(const fs::path& path, const EvalReport& r, bool with_trajectories);

// --- pose experiment ----------------------------------------------------------

struct PoseImage {
    std::size_t object = 0;
    std::size_t pose = 0;
    std::size_t image = 0;
    BinaryMask mask;
};

/// Procedural silhouettes: `objects` random outlines, each seen under
/// `poses` increasing foreshortenings with `images` small offsets per pose.
std::vector<PoseImage> synthetic_pose_corpus(std::uint64_t seed, std::size_t objects, std::size_t poses,
                                             std::size_t images);
/// Reads `object/pose/image` directories of Netpbm silhouettes (sorted names).
std::vector<PoseImage> read_pose_corpus(const fs::path& root, double threshold, bool invert);

struct PoseOutcome {
    std::size_t truth = 0;
    std::size_t by_histogram = 0;
    std::size_t by_string = 0;
};

struct PoseReport {
    std::size_t classes = 0;
    std::size_t networks = 0;
    std::vector<PoseOutcome> tests;
    double histogram_rate = 0.0;
    double string_rate = 0.0;
};

PoseReport run_pose_experiment(const std::vector<PoseImage>& corpus, const ExperimentConfig& cfg);
PoseReport cmd_pose_experiment(const ExperimentConfig& cfg);
json pose_report_to_json(const PoseReport& r, const ExperimentConfig& cfg);

// --- plot data ---------------------------------------------------------------

/// From a report JSON: `trajectories.csv` (item,step,e_1..,p_1..,winner),
/// `kappa.csv` (item,index,kappa) and, for mesh reports, `mesh_field.csv`
/// (u1,u2,k1,k2,status). Returns the files written.
std::vector<fs::path> cmd_emit_plots(const fs::path& report, const fs::path& out_dir);

}  // namespace premonn::cli
