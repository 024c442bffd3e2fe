#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdgan/arweight.hpp"
#include "sdgan/dataio.hpp"
#include "sdgan/discriminator.hpp"
#include "sdgan/generator.hpp"
#include "sdgan/losses.hpp"

namespace sdgan::train {

struct TrainConfig {
    int epochs = 200;
    double lr0 = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    int batch = 1;  // the training loop is written for batch 1
    loss::LossWeights weights;
    std::uint64_t seed = 1;
    bool use_saliency = true;
    bool use_layout = true;
    bool use_arloss = true;
    bool use_perceptual = true;
    bool use_bce = true;
    bool adv_literal = false;
    ar::VarianceForm ar_form = ar::VarianceForm::intra;
    int checkpoint_every = 10;
    data::LabelTable labels = data::LabelTable::canonical;
    gen::GeneratorConfig gcfg;
    gen::DiscriminatorConfig dcfg;
    std::uint64_t config_digest = 0;
};

// constant for the first 100 epochs, then linear decay reaching lr0/101 on the
// last epoch of a 200-epoch run; short runs never decay
double lr_schedule(int epoch, const TrainConfig& cfg);

struct AdamState {
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t t = 0;
    std::vector<Tensor> m, v;  // parallel to the parameter registration order

    void init(const nn::ParamMap& params, double b1, double b2);
    void step(const nn::ParamMap& params, double lr);
};

struct ModelState {
    ModelState(const gen::GeneratorConfig& gcfg, const gen::DiscriminatorConfig& dcfg,
               std::uint64_t seed, double beta1, double beta2);

    Rng rng;  // seeds the parameter draws, then drives the epoch shuffles
    gen::Generator g;
    gen::Discriminator d;
    AdamState opt_g, opt_d;
    int epoch = 0;  // completed epochs
};

// builds generator then discriminator from one seeded stream; the ablation
// flags in cfg override the per-network configs so they cannot disagree
ModelState make_model_state(const TrainConfig& cfg);

struct StepLosses {
    double adv_d = 0.0;
    loss::LossTerms g;
};

// one discriminator update on (real, detached fake), then one generator update
// on the flag-gated total loss
StepLosses train_step(ModelState& state, const data::PairedSample& sample,
                      const TrainConfig& cfg, const loss::FeatureExtractor& ex,
                      const loss::ParsingOracle& oracle);

struct FitSink {
    std::ostream* loss_log = nullptr;  // lines "epoch step adv_d=... total=..."
    std::string checkpoint_dir;        // empty disables checkpoints
};

// trains epochs state.epoch+1 .. cfg.epochs over the per-epoch shuffled
// manifest; samples go through prepare_sample once up front
void fit(ModelState& state, const data::DatasetManifest& manifest, const TrainConfig& cfg,
         const loss::FeatureExtractor& ex, const loss::ParsingOracle& oracle,
         const FitSink& sink);

void save_checkpoint(const ModelState& state, const std::string& path,
                     std::uint64_t config_digest);

struct LoadResult {
    ModelState state;
    std::uint64_t file_digest = 0;
    bool digest_mismatch = false;  // loading proceeds anyway, caller may warn
};

// expected_digest 0 skips the digest comparison
LoadResult load_checkpoint(const std::string& path, std::uint64_t expected_digest,
                           double beta1 = 0.5, double beta2 = 0.999);

}  // namespace sdgan::train
