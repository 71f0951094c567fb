#include <doctest.h>

#include <sys/wait.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "premonn/error.hpp"
#include "premonn/experiment.hpp"
#include "premonn/synthetic.hpp"

using namespace premonn;
using namespace premonn::cli;

namespace {

// Fresh scratch directory per test case, removed afterwards.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& tag) {
        dir = fs::temp_directory_path() / ("premonn_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string file(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_series(const std::string& path, const std::vector<double>& v) {
    std::ofstream f(path);
    for (double x : v) f << x << '\n';
}

ExperimentConfig series_config(const Scratch& s) {
    ExperimentConfig c;
    c.task = Task::series;
    c.output_dir = s.file("bundle");
    c.train.epochs = 200;
    for (std::size_t k = 0; k < 2; ++k) {
        synthetic::Rng rng(10 + k);
        const std::string train = s.file("train" + std::to_string(k) + ".txt");
        const std::string test = s.file("test" + std::to_string(k) + ".txt");
        write_series(train, synthetic::nar_series(k, 600, 0.05, rng));
        write_series(test, synthetic::nar_series(k, 200, 0.05, rng));
        c.classes.push_back({"src" + std::to_string(k), {train}});
        c.items.push_back({test, "src" + std::to_string(k)});
    }
    return c;
}

int run_cli(const std::string& args) {
    const int rc = std::system((std::string(PREMONN_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config JSON round trip and unknown keys") {
    ExperimentConfig c;
    c.task = Task::texture;
    c.seed = 42;
    c.classes = {{"a", {"x.ppm"}}, {"b", {"y.ppm", "z.ppm"}}};
    c.items = {{"q.ppm", "a"}};
    c.scan_start = scan2d::Anchor{3, 4};
    c.mesh_seed = geom3d::Vec3(1, 2, 3);
    c.engine.sigma = 0.2;
    c.segmentation.min_segment_len = 20;
    const json j = to_json(c);
    CHECK(to_json(config_from_json(j)) == j);
    CHECK(to_json(config_from_json(json::object())) == to_json(ExperimentConfig{}));

    json bad = j;
    bad["engine"]["temperature"] = 1.0;
    CHECK_THROWS_AS(config_from_json(bad), DataError);
    json top = j;
    top["extra"] = 1;
    CHECK_THROWS_AS(config_from_json(top), DataError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), DataError);

    const auto desk = load_config(PREMONN_SOURCE_DIR "/configs/pose_desk.json");
    CHECK(desk.task == Task::pose);
}

TEST_CASE("train writes one file per class and channel") {
    Scratch s("train");
    const auto cfg = series_config(s);
    const auto b = cmd_train(cfg);
    CHECK(b.groups.size() == 2);
    CHECK(fs::exists(s.file("bundle/manifest.json")));
    CHECK(fs::exists(s.file("bundle/class0_ch0.pred")));
    CHECK(fs::exists(s.file("bundle/class1_ch0.pred")));
    const auto back = load_bundle(cfg.output_dir);
    CHECK(back.classes == b.classes);
    const std::vector<double> x{0.1, -0.2, 0.3};
    CHECK(back.groups[1].channels[0].predict(x) == b.groups[1].channels[0].predict(x));

    ExperimentConfig missing = cfg;
    missing.classes[0].files = {s.file("nope.txt")};
    CHECK_THROWS_AS(cmd_train(missing), DataError);
    CHECK_THROWS_AS(load_bundle(s.file("nothing")), DataError);
}

TEST_CASE("colour textures: three classes, three channels") {
    Scratch s("tex");
    ExperimentConfig c;
    c.task = Task::texture;
    c.output_dir = s.file("bundle");
    c.scan_m = c.scan_l = 1;
    synthetic::Rng rng(5);
    for (std::size_t k = 0; k < 3; ++k) {
        const std::string f = s.file("t" + std::to_string(k) + ".ppm");
        write_netpbm(fs::path(f), synthetic::texture(static_cast<synthetic::TextureKind>(k), 24, 24, true, rng));
        c.classes.push_back({"t" + std::to_string(k), {f}});
        c.items.push_back({f, "t" + std::to_string(k)});
    }
    const auto b = cmd_train(c);
    std::size_t preds = 0;
    for (const auto& e : fs::directory_iterator(c.output_dir)) preds += e.path().extension() == ".pred";
    CHECK(preds == 9);
    CHECK(b.domain.has_value());
    const auto r = cmd_classify(c, load_bundle(c.output_dir));
    CHECK(r.correct == 3);
}

TEST_CASE("classify: self-consistency, truncation and reports") {
    Scratch s("classify");
    auto cfg = series_config(s);
    const auto bundle = cmd_train(cfg);

    ExperimentConfig self = cfg;
    self.items.clear();
    for (const auto& cl : cfg.classes) self.items.push_back({cl.files[0], cl.name});
    const auto r = cmd_classify(self, bundle);
    CHECK(r.success_rate == 1.0);
    CHECK(r.confusion == std::vector<std::vector<std::size_t>>{{1, 0}, {0, 1}});

    const auto full = cmd_classify(cfg, bundle);
    REQUIRE(full.items.size() == 2);
    CHECK(full.items[0].trajectory.size() == 197);
    ExperimentConfig quarter = cfg;
    quarter.item_fraction = 0.25;
    const auto q = cmd_classify(quarter, bundle);
    CHECK(q.items[0].trajectory.size() == 50);

    ExperimentConfig gone = cfg;
    gone.items = {{s.file("absent.txt"), ""}};
    CHECK_THROWS_AS(cmd_classify(gone, bundle), DataError);

    // Reports are byte-identical across runs and thread counts.
    ::setenv("PREMONN_THREADS", "1", 1);
    write_report(s.file("r1.json"), cmd_classify(cfg, bundle), true);
    ::setenv("PREMONN_THREADS", "4", 1);
    write_report(s.file("r2.json"), cmd_classify(cfg, bundle), true);
    ::unsetenv("PREMONN_THREADS");
    CHECK(slurp(s.file("r1.json")) == slurp(s.file("r2.json")));

    const auto files = cmd_emit_plots(s.file("r1.json"), s.file("plots"));
    CHECK(files.size() >= 2);
    std::ifstream t(s.file("plots/trajectories.csv"));
    std::string header;
    std::getline(t, header);
    CHECK(header == "item,step,e_1,e_2,p_1,p_2,winner");
    std::size_t rows = 0;
    for (std::string line; std::getline(t, line);) ++rows;
    CHECK(rows == 2 * 197);
    const std::string first = slurp(s.file("plots/trajectories.csv"));
    cmd_emit_plots(s.file("r1.json"), s.file("plots"));
    CHECK(slurp(s.file("plots/trajectories.csv")) == first);
}

TEST_CASE("pose experiment on identical images is perfect") {
    ExperimentConfig cfg = load_config(PREMONN_SOURCE_DIR "/configs/pose_desk.json");
    cfg.pose.test_image = 0;
    std::vector<PoseImage> corpus;
    const BinaryMask shapes[] = {synthetic::disk_mask(128, 128, 64, 64, 30),
                                 synthetic::rectangle_mask(128, 128, 30, 40, 100, 90)};
    for (std::size_t o = 0; o < 2; ++o)
        for (std::size_t i = 0; i < 3; ++i) corpus.push_back({o, 0, i, shapes[o]});
    const auto r = run_pose_experiment(corpus, cfg);
    CHECK(r.classes == 2);
    CHECK(r.tests.size() == 2);
    CHECK(r.histogram_rate == 1.0);
    CHECK(r.string_rate == 1.0);

    corpus.pop_back();
    corpus.pop_back();
    CHECK_THROWS_AS(run_pose_experiment(corpus, cfg), DataError);
    CHECK_THROWS_AS(run_pose_experiment({}, cfg), InvalidArgument);
}

TEST_CASE("parallel_for covers every index and rethrows") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(50, [](std::size_t i) {
                        if (i == 17) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}

TEST_CASE("command line exit codes") {
    Scratch s("exe");
    auto cfg = series_config(s);
    std::ofstream(s.file("cfg.json")) << to_json(cfg).dump(2);
    CHECK(run_cli("") == 1);
    CHECK(run_cli("frobnicate") == 1);
    CHECK(run_cli("train") == 1);
    CHECK(run_cli("train -c " + s.file("missing.json")) == 2);
    CHECK(run_cli("train -c " + s.file("cfg.json")) == 0);
    CHECK(run_cli("classify -c " + s.file("cfg.json") + " -b " + cfg.output_dir + " -t " + s.file("traj.csv")) == 0);
    std::ifstream t(s.file("traj.csv"));
    std::string header;
    std::getline(t, header);
    CHECK(header == "step,e_1,e_2,p_1,p_2,winner");
    std::size_t rows = 0;
    for (std::string line; std::getline(t, line);) ++rows;
    CHECK(rows == 197);
    CHECK(run_cli("classify -c " + s.file("cfg.json") + " -b " + s.file("nobundle")) == 2);
    CHECK(run_cli("--dump-defaults") == 0);
}

}  // TEST_SUITE
