#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "sdgan/config.hpp"
#include "sdgan/metrics.hpp"
#include "sdgan/png_io.hpp"

namespace fs = std::filesystem;
using namespace sdgan;

namespace {

struct FixturesArgs {
    std::string out;
    std::uint64_t seed = 7;
    int n = 4;
    int size = 64;
};

struct TrainArgs {
    std::string config;
    std::string resume;
    std::string out_root = "runs";
    bool print_config = false;
};

struct InferArgs {
    std::string checkpoint;
    std::string input_dir;
    std::string out_dir;
    std::string labels = "canonical";
};

struct EvalArgs {
    std::string pred_dir;
    std::string target_dir;
    std::string layout_dir;
    std::string report;
    std::string geometry = "native";
    std::string labels = "canonical";
};

int run_fixtures(const FixturesArgs& a) {
    auto samples = data::make_fixture(a.seed, a.n, a.size);
    data::write_dataset(samples, a.out, "train");
    std::printf("wrote %d samples under %s/train\n", a.n, a.out.c_str());
    return 0;
}

std::string timestamp_now() {
    char buf[32];
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    localtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return buf;
}

loss::FeatureExtractor make_extractor(const cfg::ConfigFile& c) {
    const std::string& p = c.gets("oracle.extractor_path");
    return p.empty() ? loss::FeatureExtractor::make_seeded(1001) : loss::FeatureExtractor::load(p);
}

loss::ParsingOracle make_oracle(const cfg::ConfigFile& c) {
    const std::string& p = c.gets("oracle.parser_path");
    return p.empty() ? loss::ParsingOracle::make_seeded(1002) : loss::ParsingOracle::load(p);
}

int run_train(const TrainArgs& a) {
    cfg::ConfigFile c = a.config.empty() ? cfg::default_config() : cfg::load_config(a.config);
    if (a.print_config) {
        std::fputs(cfg::canonical_text(c).c_str(), stdout);
        return 0;
    }
    if (a.config.empty()) {
        std::fprintf(stderr, "error: --config is required\n");
        return 1;
    }
    train::TrainConfig tc = cfg::to_train_config(c);

    char digesthex[20];
    std::snprintf(digesthex, sizeof digesthex, "%016llx",
                  static_cast<unsigned long long>(tc.config_digest));
    std::string run_dir = a.out_root + "/run-" + digesthex + "-" + timestamp_now();
    fs::create_directories(run_dir);
    std::printf("run_dir=%s\n", run_dir.c_str());
    std::fflush(stdout);
    {
        std::ofstream cf(run_dir + "/config.txt", std::ios::binary | std::ios::trunc);
        cf << cfg::canonical_text(c);
    }

    loss::FeatureExtractor ex = make_extractor(c);
    loss::ParsingOracle oracle = make_oracle(c);

    data::DatasetManifest manifest = data::load_manifest(c.gets("data.root"), "train");

    std::ofstream log(run_dir + "/loss.log", std::ios::binary | std::ios::app);
    if (!log) throw Error("cannot open " + run_dir + "/loss.log");
    train::FitSink sink;
    sink.loss_log = &log;
    sink.checkpoint_dir = run_dir;

    if (!a.resume.empty()) {
        train::LoadResult lr =
            train::load_checkpoint(a.resume, tc.config_digest, tc.beta1, tc.beta2);
        if (lr.digest_mismatch)
            std::fprintf(stderr,
                         "warning: checkpoint %s was written under a different config digest\n",
                         a.resume.c_str());
        train::fit(lr.state, manifest, tc, ex, oracle, sink);
    } else {
        train::ModelState state = train::make_model_state(tc);
        train::fit(state, manifest, tc, ex, oracle, sink);
    }
    std::printf("done epoch=%d\n", tc.epochs);
    return 0;
}

int run_infer(const InferArgs& a) {
    data::LabelTable table = data::parse_label_table(a.labels);
    train::LoadResult lr = train::load_checkpoint(a.checkpoint, 0);
    const gen::Generator& g = lr.state.g;
    data::DatasetManifest manifest = data::load_infer_manifest(a.input_dir);
    fs::create_directories(a.out_dir);
    ad::NoGradGuard ng;
    for (const auto& e : manifest.entries) {
        data::PairedSample raw = data::load_sample(e, table, false);
        bool was_scan = data::needs_preprocess(raw.photo.dim(1), raw.photo.dim(2));
        data::PairedSample s = data::prepare_sample(raw);
        Tensor fake =
            g.generate(ad::constant(s.photo), ad::constant(s.saliency), s.layout).value();
        if (was_scan) fake = data::invert_preprocess(fake);
        io::write_png(a.out_dir + "/" + e.id + ".png", io::grid_to_png(fake));
    }
    std::printf("wrote %zu sketches to %s\n", manifest.entries.size(), a.out_dir.c_str());
    return 0;
}

int run_eval(const EvalArgs& a) {
    data::LabelTable table = data::parse_label_table(a.labels);
    metrics::EvalGeometry geom;
    if (a.geometry == "native")
        geom = metrics::EvalGeometry::native;
    else if (a.geometry == "padded256")
        geom = metrics::EvalGeometry::padded256;
    else
        throw ConfigError("--geometry must be native or padded256, got '" + a.geometry + "'");
    metrics::EvalReport rep =
        metrics::evaluate_dirs(a.pred_dir, a.target_dir, a.layout_dir, geom, table);
    metrics::write_report(rep, a.report);
    std::printf("samples=%zu ssim_mean=%.9g mae_mean=%.9g report=%s\n", rep.samples.size(),
                rep.mean.ssim, rep.mean.mae, a.report.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"face photo to sketch synthesis"};
    app.require_subcommand(1);

    FixturesArgs fa;
    CLI::App* fix = app.add_subcommand("fixtures", "write a synthetic paired dataset");
    fix->add_option("--out", fa.out, "dataset root to create")->required();
    fix->add_option("--seed", fa.seed, "fixture rng seed");
    fix->add_option("--n", fa.n, "number of samples");
    fix->add_option("--size", fa.size, "square image size, power of two >= 32");

    TrainArgs ta;
    CLI::App* tr = app.add_subcommand("train", "train a model from a config file");
    tr->add_option("--config", ta.config, "key = value config file");
    tr->add_option("--resume", ta.resume, "checkpoint to continue from");
    tr->add_option("--out-root", ta.out_root, "directory that receives run dirs");
    tr->add_flag("--print-config", ta.print_config, "print the effective config and exit");

    InferArgs ia;
    CLI::App* in = app.add_subcommand("infer", "synthesize sketches from a checkpoint");
    in->add_option("--checkpoint", ia.checkpoint, "trained checkpoint file")->required();
    in->add_option("--input-dir", ia.input_dir, "directory with photos/saliency/parsing")
        ->required();
    in->add_option("--out-dir", ia.out_dir, "directory for synthesized sketches")->required();
    in->add_option("--labels", ia.labels, "parsing label table: canonical or celebamask");

    EvalArgs ea;
    CLI::App* ev = app.add_subcommand("eval", "score predictions against targets");
    ev->add_option("--pred-dir", ea.pred_dir, "predicted sketches")->required();
    ev->add_option("--target-dir", ea.target_dir, "ground-truth sketches")->required();
    ev->add_option("--layout-dir", ea.layout_dir, "parsing maps for the per-class errors")
        ->required();
    ev->add_option("--report", ea.report, "csv report path")->required();
    ev->add_option("--geometry", ea.geometry, "native or padded256");
    ev->add_option("--labels", ea.labels, "parsing label table: canonical or celebamask");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (fix->parsed()) return run_fixtures(fa);
        if (tr->parsed()) return run_train(ta);
        if (in->parsed()) return run_infer(ia);
        if (ev->parsed()) return run_eval(ea);
    } catch (const NonFinite& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
