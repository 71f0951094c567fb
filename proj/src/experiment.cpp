#include "premonn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "premonn/contour.hpp"
#include "premonn/error.hpp"
#include "premonn/point_cloud.hpp"
#include "premonn/synthetic.hpp"

namespace premonn::cli {

using predictors::PredictorGroup;
using predictors::TrainingSet;

std::string to_string(Task t) {
    switch (t) {
        case Task::series: return "series";
        case Task::curve: return "curve";
        case Task::texture: return "texture";
        case Task::surface: return "surface";
        case Task::pose: return "pose";
    }
    return "series";
}

Task task_from_string(const std::string& s) {
    for (Task t : {Task::series, Task::curve, Task::texture, Task::surface, Task::pose})
        if (to_string(t) == s) return t;
    throw InvalidArgument("unknown task '" + s + "'");
}

void ExperimentConfig::validate() const {
    engine.validate();
    train.validate();
    curvature.validate();
    mesh.validate();
    if (order == 0) throw InvalidArgument("config: order must be >= 1");
    if (!(item_fraction > 0.0 && item_fraction <= 1.0)) throw InvalidArgument("config: item_fraction must be in (0, 1]");
    if (task == Task::pose) segmentation.validate(order);
    if (task == Task::texture || task == Task::surface) (void)domain();
}

scan2d::ScanDomain ExperimentConfig::domain() const {
    if (!domain_file.empty()) return scan2d::read_domain(fs::path(domain_file));
    return scan2d::canonical_domain(scan_m, scan_l);
}

// --- config serialization ----------------------------------------------------

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw DataError("config: '" + where + "' must be an object");
    for (const auto& [k, v] : j.items()) {
        (void)v;
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
            throw DataError("config: unknown key '" + k + "' in " + where);
    }
}

template <class T>
void get(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::string order_name(scan2d::ScanOrder o) { return o == scan2d::ScanOrder::raster ? "raster" : "boustrophedon"; }

}  // namespace

json to_json(const ExperimentConfig& c) {
    json j;
    j["task"] = to_string(c.task);
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["classes"] = json::array();
    for (const auto& cl : c.classes) j["classes"].push_back({{"name", cl.name}, {"files", cl.files}});
    j["items"] = json::array();
    for (const auto& it : c.items) j["items"].push_back({{"file", it.file}, {"label", it.label}});
    j["item_fraction"] = c.item_fraction;
    j["engine"] = {{"sigma", c.engine.sigma}, {"credit_floor", c.engine.credit_floor}};
    j["predictor"] = {{"order", c.order},
                      {"hidden_units", c.predictor.hidden_units},
                      {"activation", predictors::to_string(c.predictor.activation)},
                      {"seed", c.predictor.seed}};
    j["train"] = {{"epochs", c.train.epochs},
                  {"learning_rate", c.train.learning_rate},
                  {"batch_size", c.train.batch_size},
                  {"l2", c.train.l2},
                  {"early_stop_tol", c.train.early_stop_tol}};
    j["curvature"] = {{"ds", c.curvature.ds},
                      {"window_half_width", c.curvature.window_half_width},
                      {"degree", c.curvature.degree},
                      {"filter_width", c.curvature.filter_width},
                      {"threshold", c.threshold},
                      {"invert", c.invert}};
    j["scan"] = {{"m", c.scan_m}, {"l", c.scan_l}, {"domain_file", c.domain_file}, {"order", order_name(c.scan_order)}};
    j["scan"]["start"] = c.scan_start ? json::array({c.scan_start->i, c.scan_start->j}) : json(nullptr);
    j["mesh"] = {{"ds", c.mesh.ds},
                 {"extent_u1", c.mesh.extent_u1},
                 {"extent_u2", c.mesh.extent_u2},
                 {"fit_radius", c.mesh.fit_radius},
                 {"umbilic_tol", c.mesh.umbilic_tol},
                 {"agree_tol", c.mesh.agree_tol}};
    j["mesh"]["seed_point"] = c.mesh_seed ? json::array({c.mesh_seed->x(), c.mesh_seed->y(), c.mesh_seed->z()}) : json(nullptr);
    j["segmentation"] = {{"error_threshold", c.segmentation.error_threshold},
                         {"min_segment_len", c.segmentation.min_segment_len}};
    j["pose"] = {{"dataset", c.pose.dataset},
                 {"objects", c.pose.objects},
                 {"poses", c.pose.poses},
                 {"images", c.pose.images},
                 {"different_start", c.pose.different_start},
                 {"test_image", c.pose.test_image}};
    j["report"] = {{"keep_trajectories", c.keep_trajectories}};
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        check_keys(j, {"task", "seed", "output_dir", "classes", "items", "item_fraction", "engine", "predictor", "train",
                       "curvature", "scan", "mesh", "segmentation", "pose", "report"},
                   "config");
        if (j.contains("task")) c.task = task_from_string(j.at("task").get<std::string>());
        get(j, "seed", c.seed);
        get(j, "output_dir", c.output_dir);
        get(j, "item_fraction", c.item_fraction);
        if (j.contains("classes"))
            for (const auto& cl : j.at("classes")) {
                check_keys(cl, {"name", "files"}, "classes[]");
                c.classes.push_back({cl.at("name").get<std::string>(), cl.at("files").get<std::vector<std::string>>()});
            }
        if (j.contains("items"))
            for (const auto& it : j.at("items")) {
                check_keys(it, {"file", "label"}, "items[]");
                Item item{it.at("file").get<std::string>(), ""};
                get(it, "label", item.label);
                c.items.push_back(item);
            }
        if (j.contains("engine")) {
            const auto& e = j.at("engine");
            check_keys(e, {"sigma", "credit_floor"}, "engine");
            get(e, "sigma", c.engine.sigma);
            get(e, "credit_floor", c.engine.credit_floor);
        }
        if (j.contains("predictor")) {
            const auto& p = j.at("predictor");
            check_keys(p, {"order", "hidden_units", "activation", "seed"}, "predictor");
            get(p, "order", c.order);
            get(p, "hidden_units", c.predictor.hidden_units);
            get(p, "seed", c.predictor.seed);
            if (p.contains("activation")) c.predictor.activation = predictors::activation_from_string(p.at("activation").get<std::string>());
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            check_keys(t, {"epochs", "learning_rate", "batch_size", "l2", "early_stop_tol"}, "train");
            get(t, "epochs", c.train.epochs);
            get(t, "learning_rate", c.train.learning_rate);
            get(t, "batch_size", c.train.batch_size);
            get(t, "l2", c.train.l2);
            get(t, "early_stop_tol", c.train.early_stop_tol);
        }
        if (j.contains("curvature")) {
            const auto& k = j.at("curvature");
            check_keys(k, {"ds", "window_half_width", "degree", "filter_width", "threshold", "invert"}, "curvature");
            get(k, "ds", c.curvature.ds);
            get(k, "window_half_width", c.curvature.window_half_width);
            get(k, "degree", c.curvature.degree);
            get(k, "filter_width", c.curvature.filter_width);
            get(k, "threshold", c.threshold);
            get(k, "invert", c.invert);
        }
        if (j.contains("scan")) {
            const auto& s = j.at("scan");
            check_keys(s, {"m", "l", "domain_file", "order", "start"}, "scan");
            get(s, "m", c.scan_m);
            get(s, "l", c.scan_l);
            get(s, "domain_file", c.domain_file);
            if (s.contains("order")) {
                const auto o = s.at("order").get<std::string>();
                if (o == "raster") c.scan_order = scan2d::ScanOrder::raster;
                else if (o == "boustrophedon") c.scan_order = scan2d::ScanOrder::boustrophedon;
                else throw InvalidArgument("config: scan.order must be raster or boustrophedon");
            }
            if (s.contains("start") && !s.at("start").is_null()) {
                const auto v = s.at("start").get<std::vector<int>>();
                if (v.size() != 2) throw InvalidArgument("config: scan.start must be [i, j]");
                c.scan_start = scan2d::Anchor{v[0], v[1]};
            }
        }
        if (j.contains("mesh")) {
            const auto& m = j.at("mesh");
            check_keys(m, {"ds", "extent_u1", "extent_u2", "fit_radius", "umbilic_tol", "agree_tol", "seed_point"}, "mesh");
            get(m, "ds", c.mesh.ds);
            get(m, "extent_u1", c.mesh.extent_u1);
            get(m, "extent_u2", c.mesh.extent_u2);
            get(m, "fit_radius", c.mesh.fit_radius);
            get(m, "umbilic_tol", c.mesh.umbilic_tol);
            get(m, "agree_tol", c.mesh.agree_tol);
            if (m.contains("seed_point") && !m.at("seed_point").is_null()) {
                const auto v = m.at("seed_point").get<std::vector<double>>();
                if (v.size() != 3) throw InvalidArgument("config: mesh.seed_point must be [x, y, z]");
                c.mesh_seed = geom3d::Vec3(v[0], v[1], v[2]);
            }
        }
        if (j.contains("segmentation")) {
            const auto& s = j.at("segmentation");
            check_keys(s, {"error_threshold", "min_segment_len"}, "segmentation");
            get(s, "error_threshold", c.segmentation.error_threshold);
            get(s, "min_segment_len", c.segmentation.min_segment_len);
        }
        if (j.contains("pose")) {
            const auto& p = j.at("pose");
            check_keys(p, {"dataset", "objects", "poses", "images", "different_start", "test_image"}, "pose");
            get(p, "dataset", c.pose.dataset);
            get(p, "objects", c.pose.objects);
            get(p, "poses", c.pose.poses);
            get(p, "images", c.pose.images);
            get(p, "different_start", c.pose.different_start);
            get(p, "test_image", c.pose.test_image);
        }
        if (j.contains("report")) {
            const auto& r = j.at("report");
            check_keys(r, {"keep_trajectories"}, "report");
            get(r, "keep_trajectories", c.keep_trajectories);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    c.segmentation.spec = c.predictor;
    c.segmentation.train = c.train;
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open config " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

// --- threading ---------------------------------------------------------------

unsigned thread_count() {
    if (const char* env = std::getenv("PREMONN_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!first) first = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

// --- ingestion -----------------------------------------------------------------

std::vector<double> read_series(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open series " + path.string());
    std::vector<double> v;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double x;
        while (ss >> x) {
            if (!std::isfinite(x)) throw DataError(path.string() + ": non-finite value on line " + std::to_string(lineno));
            v.push_back(x);
        }
        if (!ss.eof()) throw DataError(path.string() + ": malformed number on line " + std::to_string(lineno));
    }
    if (v.empty()) throw DataError(path.string() + ": empty series");
    return v;
}

curves::CurvatureSequence curve_sequence(const fs::path& image, const ExperimentConfig& cfg) {
    const RasterField f = read_netpbm(image);
    const BinaryMask m = BinaryMask::threshold(f, cfg.threshold, cfg.invert);
    if (m.count() == 0) throw DataError(image.string() + ": silhouette is empty at the configured threshold");
    return curves::curvature_sequence(m, cfg.curvature);
}

geom3d::CurvatureMesh surface_mesh(const fs::path& cloud_path, const ExperimentConfig& cfg) {
    const geom3d::PointCloud cloud = geom3d::read_point_cloud(cloud_path);
    geom3d::Vec3 seed;
    if (cfg.mesh_seed) {
        seed = *cfg.mesh_seed;
    } else {
        geom3d::Vec3 c = geom3d::Vec3::Zero();
        for (const auto& p : cloud.points()) c += p;
        seed = cloud.points()[cloud.nearest(c / static_cast<double>(cloud.size()))];
    }
    return geom3d::build_curvature_mesh(cloud, seed, cfg.mesh);
}

// --- bundles ---------------------------------------------------------------------

namespace {

predictors::PredictorSpec scalar_spec(const ExperimentConfig& cfg) {
    predictors::PredictorSpec s = cfg.predictor;
    s.input_dim = cfg.order;
    s.output_dim = 1;
    return s;
}

TrainingSet curve_pairs(const curves::CurvatureSequence& seq, std::size_t order) {
    return repr::sequence_pairs(seq.kappa_filtered, seq.closed, order);
}

PredictorGroup train_class(const ClassData& cl, std::size_t k, const ExperimentConfig& cfg,
                           const scan2d::ScanDomain& domain) {
    if (cl.files.empty()) throw DataError("class '" + cl.name + "' has no files");
    predictors::PredictorSpec base = cfg.predictor;
    base.seed = cfg.predictor.seed + 1000 * k;
    switch (cfg.task) {
        case Task::series:
        case Task::curve: {
            TrainingSet pairs;
            for (const auto& f : cl.files) {
                TrainingSet part;
                if (cfg.task == Task::series) part = predictors::make_training_pairs(read_series(f), cfg.order);
                else part = curve_pairs(curve_sequence(f, cfg), cfg.order);
                pairs.insert(pairs.end(), part.begin(), part.end());
            }
            if (pairs.size() < cfg.order + 1)
                throw DataError("class '" + cl.name + "' has too few samples for order " + std::to_string(cfg.order));
            auto spec = scalar_spec(cfg);
            spec.seed = base.seed;
            return PredictorGroup{{predictors::train(pairs, spec, cfg.train)}};
        }
        case Task::texture: {
            if (cl.files.size() != 1) throw DataError("texture class '" + cl.name + "' needs exactly one sample image");
            const RasterField field = read_netpbm(fs::path(cl.files.front()));
            try {
                return scan2d::train_group(field, domain, base, cfg.train);
            } catch (const InvalidArgument& e) {
                throw DataError("class '" + cl.name + "': " + e.what());
            }
        }
        case Task::surface: {
            if (cl.files.size() != 1) throw DataError("surface class '" + cl.name + "' needs exactly one point cloud");
            const auto mesh = surface_mesh(cl.files.front(), cfg);
            try {
                return geom3d::train_surface_group(mesh, domain, base, cfg.train);
            } catch (const InvalidArgument& e) {
                throw DataError("class '" + cl.name + "': " + e.what());
            }
        }
        case Task::pose: break;
    }
    throw InvalidArgument("train: the pose task is run with pose-exp");
}

std::string pred_name(std::size_t k, std::size_t c) {
    return "class" + std::to_string(k) + "_ch" + std::to_string(c) + ".pred";
}

json domain_json(const scan2d::ScanDomain& d) {
    json a = json::array();
    for (const auto& o : d.in_offsets) a.push_back({o.di, o.dj, "in"});
    for (const auto& o : d.out_offsets) a.push_back({o.di, o.dj, "out"});
    return a;
}

scan2d::ScanDomain domain_from_json(const json& a) {
    std::vector<scan2d::Offset> in, out;
    for (const auto& e : a) {
        const scan2d::Offset o{e.at(0).get<int>(), e.at(1).get<int>()};
        (e.at(2).get<std::string>() == "out" ? out : in).push_back(o);
    }
    return scan2d::ScanDomain(std::move(in), std::move(out));
}

}  // namespace

Bundle cmd_train(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.task == Task::pose) throw InvalidArgument("train: the pose task is run with pose-exp");
    if (cfg.classes.empty()) throw InvalidArgument("train: no classes configured");
    for (const auto& cl : cfg.classes)
        for (const auto& f : cl.files)
            if (!fs::exists(f)) throw DataError("missing data file: " + f);

    Bundle b;
    b.task = cfg.task;
    b.order = cfg.order;
    const bool scans = cfg.task == Task::texture || cfg.task == Task::surface;
    const scan2d::ScanDomain domain = scans ? cfg.domain() : scan2d::ScanDomain();
    if (scans) b.domain = domain;
    for (const auto& cl : cfg.classes) b.classes.push_back(cl.name);
    b.groups.resize(cfg.classes.size());
    parallel_for(cfg.classes.size(), [&](std::size_t k) { b.groups[k] = train_class(cfg.classes[k], k, cfg, domain); });

    b.manifest = {{"format", "premonn-bundle v1"}, {"task", to_string(cfg.task)}, {"seed", cfg.seed},
                  {"classes", b.classes},        {"order", b.order},             {"config", to_json(cfg)}};
    if (b.domain) b.manifest["domain"] = domain_json(*b.domain);
    save_bundle(cfg.output_dir, b);
    return b;
}

void save_bundle(const fs::path& dir, const Bundle& b) {
    fs::create_directories(dir);
    json m = b.manifest;
    m["files"] = json::array();
    for (std::size_t k = 0; k < b.groups.size(); ++k) {
        json files = json::array();
        for (std::size_t c = 0; c < b.groups[k].size(); ++c) {
            predictors::save_predictor(dir / pred_name(k, c), b.groups[k].channels[c]);
            files.push_back(pred_name(k, c));
        }
        m["files"].push_back(files);
    }
    std::ofstream f(dir / "manifest.json");
    if (!f) throw DataError("cannot write manifest in " + dir.string());
    f << m.dump(2) << '\n';
}

Bundle load_bundle(const fs::path& dir) {
    std::ifstream f(dir / "manifest.json");
    if (!f) throw DataError("cannot open bundle manifest " + (dir / "manifest.json").string());
    Bundle b;
    try {
        f >> b.manifest;
        const json& m = b.manifest;
        if (m.at("format").get<std::string>() != "premonn-bundle v1") throw DataError("bundle: unsupported format");
        b.task = task_from_string(m.at("task").get<std::string>());
        b.classes = m.at("classes").get<std::vector<std::string>>();
        b.order = m.at("order").get<std::size_t>();
        if (m.contains("domain")) b.domain = domain_from_json(m.at("domain"));
        for (const auto& files : m.at("files")) {
            PredictorGroup g;
            for (const auto& name : files) g.channels.push_back(predictors::load_predictor(dir / name.get<std::string>()));
            b.groups.push_back(std::move(g));
        }
    } catch (const json::exception& e) {
        throw DataError("bundle manifest: " + std::string(e.what()));
    } catch (const InvalidArgument& e) {
        throw DataError("bundle: " + std::string(e.what()));
    }
    if (b.groups.size() != b.classes.size()) throw DataError("bundle: class and predictor counts differ");
    return b;
}

// --- recognition -------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> scalar_errors(const Bundle& bundle, const TrainingSet& pairs) {
    std::vector<std::vector<double>> errors;
    errors.reserve(pairs.size());
    for (const auto& p : pairs) {
        std::vector<double> e(bundle.groups.size());
        for (std::size_t n = 0; n < e.size(); ++n)
            e[n] = std::abs(p.target[0] - bundle.groups[n].channels.at(0).predict_scalar(p.input));
        errors.push_back(std::move(e));
    }
    return errors;
}

}  // namespace

std::vector<std::vector<double>> item_errors(const Bundle& bundle, const fs::path& item, const ExperimentConfig& cfg,
                                             std::vector<double>* kappa) {
    if (!fs::exists(item)) throw DataError("missing item file: " + item.string());
    if (bundle.task != cfg.task)
        throw DataError("bundle was trained for task " + to_string(bundle.task) + ", config asks for " + to_string(cfg.task));
    std::vector<std::vector<double>> errors;
    switch (cfg.task) {
        case Task::series:
        case Task::curve: {
            if (cfg.order != bundle.order) throw DataError("item order differs from the bundle's predictor order");
            if (cfg.task == Task::series) {
                const auto v = read_series(item);
                if (v.size() <= cfg.order) throw DataError(item.string() + ": series shorter than the predictor order");
                errors = scalar_errors(bundle, predictors::make_training_pairs(v, cfg.order));
            } else {
                const auto seq = curve_sequence(item, cfg);
                if (kappa) *kappa = seq.kappa_filtered;
                errors = scalar_errors(bundle, curve_pairs(seq, cfg.order));
            }
            break;
        }
        case Task::texture:
        case Task::surface: {
            const scan2d::ScanDomain d = cfg.domain();
            if (!bundle.domain || !(*bundle.domain == d))
                throw DataError("scanning stencil differs from the one the bundle was trained with");
            const scan2d::ScanModel model{d, bundle.groups};
            if (cfg.task == Task::texture) {
                const RasterField field = read_netpbm(item);
                const auto r = scan2d::admissible_region(field.width(), field.height(), d);
                if (r.empty()) throw DataError(item.string() + ": image smaller than the stencil");
                const auto path = scan2d::make_scan_path(field.width(), field.height(), d,
                                                         cfg.scan_start.value_or(scan2d::Anchor{r.i0, r.j0}), cfg.scan_order);
                errors = scan2d::scan_errors(field, d, path, model);
            } else {
                const auto mesh = surface_mesh(item, cfg);
                const auto path = geom3d::mesh_scan_path(mesh, d, cfg.scan_start, cfg.scan_order);
                errors = geom3d::surface_scan_errors(mesh, d, path, model);
            }
            break;
        }
        case Task::pose: throw InvalidArgument("classify: the pose task is run with pose-exp");
    }
    if (errors.empty()) throw DataError(item.string() + ": no recognition steps");
    const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.item_fraction * static_cast<double>(errors.size()))));
    errors.resize(std::min(keep, errors.size()));
    return errors;
}

EvalReport cmd_classify(const ExperimentConfig& cfg, const Bundle& bundle) {
    cfg.validate();
    if (cfg.items.empty()) throw InvalidArgument("classify: no items configured");
    core::EngineConfig engine = cfg.engine;
    engine.n_sources = bundle.groups.size();

    EvalReport r;
    r.task = cfg.task;
    r.seed = cfg.seed;
    r.classes = bundle.classes;
    r.items.resize(cfg.items.size());
    parallel_for(cfg.items.size(), [&](std::size_t k) {
        ItemResult& out = r.items[k];
        out.file = cfg.items[k].file;
        out.truth = cfg.items[k].label;
        const auto errors = item_errors(bundle, cfg.items[k].file, cfg, &out.kappa);
        out.trajectory = core::run_stream(errors, engine);
        out.winner = out.trajectory.back().winner;
        out.predicted = bundle.classes[out.winner];
    });
    finalize_report(r);
    return r;
}

void finalize_report(EvalReport& r) {
    const std::size_t n = r.classes.size();
    r.confusion.assign(n, std::vector<std::size_t>(n, 0));
    r.correct = r.labelled = 0;
    for (const auto& it : r.items) {
        if (it.truth.empty()) continue;
        const auto t = std::find(r.classes.begin(), r.classes.end(), it.truth);
        if (t == r.classes.end()) throw DataError("item label '" + it.truth + "' is not a bundle class");
        ++r.labelled;
        ++r.confusion[static_cast<std::size_t>(t - r.classes.begin())][it.winner];
        if (it.predicted == it.truth) ++r.correct;
    }
    r.success_rate = r.labelled ? static_cast<double>(r.correct) / static_cast<double>(r.labelled) : 0.0;
}

json report_to_json(const EvalReport& r, bool with_trajectories) {
    json j;
    j["task"] = to_string(r.task);
    j["seed"] = r.seed;
    j["classes"] = r.classes;
    j["correct"] = r.correct;
    j["labelled"] = r.labelled;
    j["success_rate"] = r.success_rate;
    j["confusion"] = r.confusion;
    j["items"] = json::array();
    for (const auto& it : r.items) {
        json e = {{"file", it.file}, {"truth", it.truth}, {"predicted", it.predicted}, {"winner", it.winner},
                  {"steps", it.trajectory.size()}};
        if (with_trajectories) {
            json errs = json::array(), credits = json::array(), winners = json::array();
            for (const auto& s : it.trajectory) {
                errs.push_back(s.errors);
                credits.push_back(s.credits_after.values());
                winners.push_back(s.winner);
            }
            e["trajectory"] = {{"errors", errs}, {"credits", credits}, {"winner", winners}};
        }
        if (!it.kappa.empty()) e["kappa"] = it.kappa;
        j["items"].push_back(e);
    }
    return j;
}

void write_report(const fs::path& path, const EvalReport& r, bool with_trajectories) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw DataError("cannot write report " + path.string());
    f << report_to_json(r, with_trajectories).dump(2) << '\n';
}

// --- pose experiment -------------------------------------------------------------------

std::vector<PoseImage> synthetic_pose_corpus(std::uint64_t seed, std::size_t objects, std::size_t poses, std::size_t images) {
    if (objects == 0 || poses == 0 || images < 2) throw InvalidArgument("pose corpus: need objects, poses and >= 2 images");
    synthetic::Rng rng(seed);
    std::vector<PoseImage> out;
    // Pose coordinate t in [0, poses) maps to a foreshortening from 1 down to
    // 0.4; views of one pose spread over a third of the pose spacing.
    const double spread = 1.0 / 3.0;
    for (std::size_t o = 0; o < objects; ++o) {
        const auto shape = synthetic::random_outline(rng, 38.0, 4, 0.2);
        for (std::size_t p = 0; p < poses; ++p)
            for (std::size_t i = 0; i < images; ++i) {
                const double t = static_cast<double>(p) + spread * (static_cast<double>(i) / static_cast<double>(images - 1) - 0.5);
                const double squash = 1.0 - 0.6 * t / static_cast<double>(poses);
                out.push_back({o, p, i, synthetic::render_slanted(shape, squash, 0.0)});
            }
    }
    return out;
}

std::vector<PoseImage> read_pose_corpus(const fs::path& root, double threshold, bool invert) {
    if (!fs::is_directory(root)) throw DataError("pose dataset is not a directory: " + root.string());
    auto sorted_entries = [](const fs::path& dir, bool dirs) {
        std::vector<fs::path> v;
        for (const auto& e : fs::directory_iterator(dir))
            if (dirs ? e.is_directory() : e.is_regular_file()) v.push_back(e.path());
        std::sort(v.begin(), v.end());
        return v;
    };
    std::vector<PoseImage> out;
    const auto objects = sorted_entries(root, true);
    if (objects.empty()) throw DataError("pose dataset: expected object/pose/image directories under " + root.string());
    std::size_t n_poses = 0;
    for (std::size_t o = 0; o < objects.size(); ++o) {
        const auto poses = sorted_entries(objects[o], true);
        if (poses.empty() || (n_poses && poses.size() != n_poses))
            throw DataError("pose dataset: object " + objects[o].string() + " has an inconsistent pose count");
        n_poses = poses.size();
        for (std::size_t p = 0; p < poses.size(); ++p) {
            const auto imgs = sorted_entries(poses[p], false);
            if (imgs.size() < 2) throw DataError("pose dataset: " + poses[p].string() + " needs at least two images");
            for (std::size_t i = 0; i < imgs.size(); ++i)
                out.push_back({o, p, i, BinaryMask::threshold(read_netpbm(imgs[i]), threshold, invert)});
        }
    }
    return out;
}

PoseReport run_pose_experiment(const std::vector<PoseImage>& corpus, const ExperimentConfig& cfg) {
    cfg.segmentation.validate(cfg.order);
    if (corpus.empty()) throw InvalidArgument("pose experiment: empty corpus");
    std::size_t n_obj = 0, n_pose = 0;
    for (const auto& im : corpus) {
        n_obj = std::max(n_obj, im.object + 1);
        n_pose = std::max(n_pose, im.pose + 1);
    }
    const std::size_t n_classes = n_obj * n_pose;
    auto class_of = [&](const PoseImage& im) { return im.object * n_pose + im.pose; };

    // Test image per class.
    std::vector<std::vector<std::size_t>> members(n_classes);
    for (std::size_t k = 0; k < corpus.size(); ++k) members[class_of(corpus[k])].push_back(k);
    synthetic::Rng rng(cfg.seed);
    std::vector<bool> is_test(corpus.size(), false);
    for (const auto& m : members) {
        if (m.size() < 2) throw DataError("pose experiment: every pose needs at least two images");
        const std::size_t pick = cfg.pose.test_image >= 0 ? static_cast<std::size_t>(cfg.pose.test_image) : rng.index(m.size());
        if (pick >= m.size()) throw InvalidArgument("pose experiment: test_image beyond the images of a pose");
        is_test[m[pick]] = true;
    }
    // Random tracing starts for the different-start mode, drawn up front.
    std::vector<double> start_frac(corpus.size());
    for (double& s : start_frac) s = rng.uniform();

    std::vector<curves::CurvatureSequence> seqs(corpus.size());
    parallel_for(corpus.size(), [&](std::size_t k) {
        std::optional<curves::Pixel> start;
        if (is_test[k] && cfg.pose.different_start) {
            const auto c = curves::trace_contour(corpus[k].mask);
            start = c.points[static_cast<std::size_t>(start_frac[k] * static_cast<double>(c.points.size())) % c.points.size()];
        }
        seqs[k] = curves::curvature_sequence(corpus[k].mask, cfg.curvature, start);
    });

    repr::NetworkLibrary library(cfg.order);
    for (std::size_t k = 0; k < corpus.size(); ++k)
        if (!is_test[k]) repr::segment_and_train(seqs[k].kappa_filtered, seqs[k].closed, cfg.segmentation, library);

    std::vector<repr::Labeling> labels(corpus.size());
    parallel_for(corpus.size(), [&](std::size_t k) {
        labels[k] = repr::label_sequence(seqs[k].kappa_filtered, seqs[k].closed, library, cfg.segmentation.min_segment_len,
                                         cfg.segmentation.error_threshold);
    });

    std::vector<std::vector<repr::NetworkHistogram>> train_hists(n_classes);
    std::vector<std::vector<const repr::NetworkString*>> train_strings(n_classes);
    for (std::size_t k = 0; k < corpus.size(); ++k)
        if (!is_test[k]) {
            train_hists[class_of(corpus[k])].push_back(repr::histogram(labels[k].windows));
            train_strings[class_of(corpus[k])].push_back(&labels[k].string);
        }
    std::vector<repr::NetworkHistogram> class_hist(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) class_hist[c] = repr::mean_histogram(train_hists[c]);

    PoseReport rep;
    rep.classes = n_classes;
    rep.networks = library.size();
    std::size_t hist_ok = 0, str_ok = 0;
    for (std::size_t k = 0; k < corpus.size(); ++k) {
        if (!is_test[k]) continue;
        PoseOutcome o;
        o.truth = class_of(corpus[k]);
        const auto h = repr::histogram(labels[k].windows);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double d = repr::histogram_distance(h, class_hist[c]);
            if (d < best) {
                best = d;
                o.by_histogram = c;
            }
        }
        // Nearest training string under cyclic shifts; ties go to the class
        // whose strings are closer on average, then to the lower class.
        std::pair<std::size_t, double> best_s{std::numeric_limits<std::size_t>::max(), 0.0};
        for (std::size_t c = 0; c < n_classes; ++c) {
            std::size_t lo = std::numeric_limits<std::size_t>::max();
            double sum = 0.0;
            for (const auto* s : train_strings[c]) {
                const auto d = repr::shift_min_levenshtein(labels[k].string.symbols, s->symbols);
                lo = std::min(lo, d);
                sum += static_cast<double>(d);
            }
            const std::pair<std::size_t, double> score{lo, sum / static_cast<double>(train_strings[c].size())};
            if (score < best_s) {
                best_s = score;
                o.by_string = c;
            }
        }
        hist_ok += o.by_histogram == o.truth;
        str_ok += o.by_string == o.truth;
        rep.tests.push_back(o);
    }
    rep.histogram_rate = static_cast<double>(hist_ok) / static_cast<double>(rep.tests.size());
    rep.string_rate = static_cast<double>(str_ok) / static_cast<double>(rep.tests.size());
    return rep;
}

PoseReport cmd_pose_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto corpus = cfg.pose.dataset.empty()
                            ? synthetic_pose_corpus(cfg.seed, cfg.pose.objects, cfg.pose.poses, cfg.pose.images)
                            : read_pose_corpus(cfg.pose.dataset, cfg.threshold, cfg.invert);
    return run_pose_experiment(corpus, cfg);
}

json pose_report_to_json(const PoseReport& r, const ExperimentConfig& cfg) {
    json j;
    j["task"] = "pose";
    j["seed"] = cfg.seed;
    j["different_start"] = cfg.pose.different_start;
    j["classes"] = r.classes;
    j["networks"] = r.networks;
    j["histogram_rate"] = r.histogram_rate;
    j["string_rate"] = r.string_rate;
    j["tests"] = json::array();
    for (const auto& t : r.tests)
        j["tests"].push_back({{"truth", t.truth}, {"histogram", t.by_histogram}, {"string", t.by_string}});
    return j;
}

// --- plot data ---------------------------------------------------------------------------

namespace {

std::string g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

std::vector<fs::path> cmd_emit_plots(const fs::path& report, const fs::path& out_dir) {
    std::ifstream f(report);
    if (!f) throw DataError("cannot open report " + report.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw DataError(report.string() + ": " + e.what());
    }
    fs::create_directories(out_dir);
    std::vector<fs::path> written;
    try {
        const std::size_t n = j.contains("classes") && j.at("classes").is_array() ? j.at("classes").size() : 0;
        const json items = j.contains("items") ? j.at("items") : json::array();

        const fs::path traj = out_dir / "trajectories.csv";
        std::ofstream t(traj);
        t << "item,step";
        for (std::size_t k = 1; k <= n; ++k) t << ",e_" << k;
        for (std::size_t k = 1; k <= n; ++k) t << ",p_" << k;
        t << ",winner\n";
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (!items[i].contains("trajectory")) continue;
            const auto& tr = items[i].at("trajectory");
            for (std::size_t s = 0; s < tr.at("winner").size(); ++s) {
                t << i << ',' << s + 1;
                for (const auto& e : tr.at("errors").at(s)) t << ',' << g17(e.get<double>());
                for (const auto& p : tr.at("credits").at(s)) t << ',' << g17(p.get<double>());
                t << ',' << tr.at("winner").at(s).get<std::size_t>() + 1 << '\n';
            }
        }
        written.push_back(traj);

        const fs::path kap = out_dir / "kappa.csv";
        std::ofstream kf(kap);
        kf << "item,index,kappa\n";
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (!items[i].contains("kappa")) continue;
            const auto& kv = items[i].at("kappa");
            for (std::size_t s = 0; s < kv.size(); ++s) kf << i << ',' << s << ',' << g17(kv[s].get<double>()) << '\n';
        }
        written.push_back(kap);

        if (j.contains("mesh_file")) {
            const fs::path mesh_in = j.at("mesh_file").get<std::string>();
            std::ifstream mf(mesh_in);
            if (!mf) throw DataError("cannot open mesh dump " + mesh_in.string());
            const fs::path field = out_dir / "mesh_field.csv";
            std::ofstream of(field);
            of << "u1,u2,k1,k2,status\n";
            std::string line;
            while (std::getline(mf, line)) {
                std::istringstream ss(line);
                int u1, u2;
                double x, y, z;
                std::string k1, k2, status;
                if (!(ss >> u1 >> u2 >> x >> y >> z >> k1 >> k2 >> status)) throw DataError("malformed mesh dump line: " + line);
                of << u1 << ',' << u2 << ',' << k1 << ',' << k2 << ',' << status << '\n';
            }
            written.push_back(field);
        }
    } catch (const json::exception& e) {
        throw DataError(report.string() + ": " + e.what());
    }
    return written;
}

}  // namespace premonn::cli
