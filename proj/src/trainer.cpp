#include "sdgan/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include "sdgan/tensor_file.hpp"

namespace sdgan::train {

namespace {

constexpr std::uint32_t kCkptMagic = 0x4b434453;  // "SDCK"
constexpr std::uint32_t kCkptVersion = 1;

}  // namespace

double lr_schedule(int epoch, const TrainConfig& cfg) {
    if (epoch < 1 || epoch > cfg.epochs)
        throw BadEpoch("epoch " + std::to_string(epoch) + " outside [1," +
                       std::to_string(cfg.epochs) + "]");
    if (epoch <= 100 || cfg.epochs <= 100) return cfg.lr0;
    return cfg.lr0 * static_cast<double>(cfg.epochs - epoch + 1) /
           static_cast<double>(cfg.epochs - 100 + 1);
}

void AdamState::init(const nn::ParamMap& params, double b1, double b2) {
    beta1 = b1;
    beta2 = b2;
    t = 0;
    m.clear();
    v.clear();
    m.reserve(params.items.size());
    v.reserve(params.items.size());
    for (const auto& it : params.items) {
        m.emplace_back(Tensor(it.second.value().shape()));
        v.emplace_back(Tensor(it.second.value().shape()));
    }
}

void AdamState::step(const nn::ParamMap& params, double lr) {
    if (m.size() != params.items.size())
        throw Error("optimizer state does not match the parameter list");
    ++t;
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.items.size(); ++i) {
        ad::Var var = params.items[i].second;
        Tensor& val = var.node->value;
        const Tensor& g = var.node->grad;  // empty means no gradient reached it
        double* mp = m[i].data();
        double* vp = v[i].data();
        double* pp = val.data();
        std::int64_t n = val.numel();
        for (std::int64_t j = 0; j < n; ++j) {
            double gj = g.empty() ? 0.0 : g[j];
            mp[j] = beta1 * mp[j] + (1.0 - beta1) * gj;
            vp[j] = beta2 * vp[j] + (1.0 - beta2) * gj * gj;
            pp[j] -= lr * (mp[j] / c1) / (std::sqrt(vp[j] / c2) + eps);
        }
    }
}

ModelState::ModelState(const gen::GeneratorConfig& gcfg, const gen::DiscriminatorConfig& dcfg,
                       std::uint64_t seed, double beta1, double beta2)
    : rng(seed), g(gcfg, rng), d(dcfg, rng) {
    opt_g.init(g.params(), beta1, beta2);
    opt_d.init(d.params(), beta1, beta2);
}

ModelState make_model_state(const TrainConfig& cfg) {
    gen::GeneratorConfig gc = cfg.gcfg;
    gc.use_saliency = cfg.use_saliency;
    gc.use_layout = cfg.use_layout;
    gen::DiscriminatorConfig dc = cfg.dcfg;
    dc.image_size = gc.image_size;
    dc.use_saliency = cfg.use_saliency;
    return ModelState(gc, dc, cfg.seed, cfg.beta1, cfg.beta2);
}

StepLosses train_step(ModelState& state, const data::PairedSample& sample,
                      const TrainConfig& cfg, const loss::FeatureExtractor& ex,
                      const loss::ParsingOracle& oracle) {
    data::validate_sample(sample, true);
    int ep = state.epoch + 1;
    if (ep > cfg.epochs) ep = cfg.epochs;
    double lr = lr_schedule(ep, cfg);

    ad::Var photo = ad::constant(sample.photo);
    ad::Var sal = ad::constant(sample.saliency);
    StepLosses out;

    Tensor fake_detached;
    {
        ad::NoGradGuard ng;
        fake_detached = state.g.generate(photo, sal, sample.layout).value();
    }
    ad::Var real_logits = state.d.discriminate(photo, sal, ad::constant(sample.sketch));
    ad::Var fake_logits = state.d.discriminate(photo, sal, ad::constant(fake_detached));
    ad::Var d_loss = loss::adversarial_d(real_logits, fake_logits);
    out.adv_d = d_loss.scalar();
    if (!std::isfinite(out.adv_d))
        throw NonFinite("discriminator adversarial loss is not finite");
    nn::ParamMap dp = state.d.params();
    for (auto& it : dp.items) ad::zero_grad(it.second);
    ad::backward(d_loss);
    state.opt_d.step(dp, lr);

    ad::Var fake = state.g.generate(photo, sal, sample.layout);
    ad::Var adv_g =
        loss::adversarial_g(state.d.discriminate(photo, sal, fake), cfg.adv_literal);
    ad::Var content = loss::content_loss(sample.sketch, fake);
    ad::Var arv, perc, bce;
    if (cfg.use_arloss) arv = ar::ar_loss_var(sample.sketch, fake, sample.layout, cfg.ar_form);
    if (cfg.use_perceptual) perc = loss::perceptual_loss(sample.sketch, fake, ex);
    if (cfg.use_bce) bce = loss::bce_parsing_loss(sample.sketch, fake, oracle);
    ad::Var total = loss::total_generator_loss(adv_g, content, arv, perc, bce, cfg.weights, &out.g);
    nn::ParamMap gp = state.g.params();
    for (auto& it : gp.items) ad::zero_grad(it.second);
    ad::backward(total);
    state.opt_g.step(gp, lr);
    return out;
}

void fit(ModelState& state, const data::DatasetManifest& manifest, const TrainConfig& cfg,
         const loss::FeatureExtractor& ex, const loss::ParsingOracle& oracle,
         const FitSink& sink) {
    if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (state.epoch >= cfg.epochs)
        throw InterruptedResume("resume state is at epoch " + std::to_string(state.epoch) +
                                " of " + std::to_string(cfg.epochs) + ", nothing left to train");
    if (manifest.entries.empty()) throw EmptyDataset("no samples under " + manifest.root);
    if (!sink.checkpoint_dir.empty()) std::filesystem::create_directories(sink.checkpoint_dir);

    std::vector<data::PairedSample> samples;
    samples.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries)
        samples.push_back(data::prepare_sample(data::load_sample(e, cfg.labels, true)));

    long long step =
        static_cast<long long>(state.epoch) * static_cast<long long>(samples.size());
    char line[512];
    for (int e = state.epoch + 1; e <= cfg.epochs; ++e) {
        std::vector<int> order(samples.size());
        std::iota(order.begin(), order.end(), 0);
        state.rng.shuffle(order);
        for (int idx : order) {
            ++step;
            StepLosses L = train_step(state, samples[static_cast<std::size_t>(idx)], cfg, ex,
                                      oracle);
            if (sink.loss_log) {
                std::snprintf(line, sizeof line,
                              "%d %lld adv_d=%.9g adv_g=%.9g content=%.9g ar=%.9g "
                              "perceptual=%.9g bce=%.9g total=%.9g\n",
                              e, step, L.adv_d, L.g.adv, L.g.content, L.g.ar, L.g.perceptual,
                              L.g.bce, L.g.total);
                (*sink.loss_log) << line;
                sink.loss_log->flush();
            }
        }
        state.epoch = e;
        if (!sink.checkpoint_dir.empty()) {
            if (cfg.checkpoint_every > 0 && e % cfg.checkpoint_every == 0 && e != cfg.epochs) {
                char name[64];
                std::snprintf(name, sizeof name, "ckpt-%03d.bin", e);
                save_checkpoint(state, sink.checkpoint_dir + "/" + name, cfg.config_digest);
            }
            if (e == cfg.epochs)
                save_checkpoint(state, sink.checkpoint_dir + "/ckpt-final.bin",
                                cfg.config_digest);
        }
    }
}

void save_checkpoint(const ModelState& state, const std::string& path,
                     std::uint64_t config_digest) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open for writing: " + path);
    io::write_u32(os, kCkptMagic);
    io::write_u32(os, kCkptVersion);
    io::write_u64(os, config_digest);
    const gen::GeneratorConfig& gc = state.g.config();
    const gen::DiscriminatorConfig& dc = state.d.config();
    io::write_u32(os, static_cast<std::uint32_t>(gc.image_size));
    io::write_u32(os, static_cast<std::uint32_t>(gc.base_width));
    io::write_u32(os, static_cast<std::uint32_t>(gc.max_width));
    io::write_u32(os, static_cast<std::uint32_t>(gc.si_hidden));
    io::write_u32(os, static_cast<std::uint32_t>(dc.base_width));
    std::uint32_t flags = 0;
    if (gc.use_saliency) flags |= 1u;
    if (gc.use_layout) flags |= 2u;
    if (gc.use_skip) flags |= 4u;
    if (gc.bilinear_upsample) flags |= 8u;
    io::write_u32(os, flags);
    io::write_u32(os, static_cast<std::uint32_t>(state.epoch));
    for (std::uint64_t w : state.rng.state()) io::write_u64(os, w);
    io::write_u64(os, state.opt_g.t);
    io::write_u64(os, state.opt_d.t);

    nn::ParamMap gp = state.g.params();
    nn::ParamMap dp = state.d.params();
    io::write_u32(os, static_cast<std::uint32_t>(3 * (gp.items.size() + dp.items.size())));
    for (const auto& it : gp.items) {
        io::write_string(os, "g." + it.first);
        io::write_tensor(os, it.second.value());
    }
    for (const auto& it : dp.items) {
        io::write_string(os, "d." + it.first);
        io::write_tensor(os, it.second.value());
    }
    for (std::size_t i = 0; i < gp.items.size(); ++i) {
        io::write_string(os, "g." + gp.items[i].first + ".m");
        io::write_tensor(os, state.opt_g.m[i]);
        io::write_string(os, "g." + gp.items[i].first + ".v");
        io::write_tensor(os, state.opt_g.v[i]);
    }
    for (std::size_t i = 0; i < dp.items.size(); ++i) {
        io::write_string(os, "d." + dp.items[i].first + ".m");
        io::write_tensor(os, state.opt_d.m[i]);
        io::write_string(os, "d." + dp.items[i].first + ".v");
        io::write_tensor(os, state.opt_d.v[i]);
    }
    os.flush();
    if (!os.good()) throw Error("write failed: " + path);
}

LoadResult load_checkpoint(const std::string& path, std::uint64_t expected_digest, double beta1,
                           double beta2) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFile("cannot open: " + path);
    if (io::read_u32(is) != kCkptMagic) throw CorruptFile("bad magic in " + path);
    std::uint32_t version = io::read_u32(is);
    if (version != kCkptVersion)
        throw VersionMismatch("checkpoint version " + std::to_string(version) + " in " + path +
                              ", expected " + std::to_string(kCkptVersion));
    std::uint64_t digest = io::read_u64(is);

    gen::GeneratorConfig gc;
    gc.image_size = static_cast<int>(io::read_u32(is));
    gc.base_width = static_cast<int>(io::read_u32(is));
    gc.max_width = static_cast<int>(io::read_u32(is));
    gc.si_hidden = static_cast<int>(io::read_u32(is));
    gen::DiscriminatorConfig dc;
    dc.base_width = static_cast<int>(io::read_u32(is));
    std::uint32_t flags = io::read_u32(is);
    gc.use_saliency = (flags & 1u) != 0;
    gc.use_layout = (flags & 2u) != 0;
    gc.use_skip = (flags & 4u) != 0;
    gc.bilinear_upsample = (flags & 8u) != 0;
    dc.image_size = gc.image_size;
    dc.use_saliency = gc.use_saliency;
    int epoch = static_cast<int>(io::read_u32(is));
    std::array<std::uint64_t, 4> rs{};
    for (auto& w : rs) w = io::read_u64(is);
    std::uint64_t tg = io::read_u64(is);
    std::uint64_t td = io::read_u64(is);

    LoadResult r{ModelState(gc, dc, 0, beta1, beta2), digest,
                 expected_digest != 0 && digest != expected_digest};
    r.state.epoch = epoch;
    r.state.rng.set_state(rs);
    r.state.opt_g.t = tg;
    r.state.opt_d.t = td;

    std::uint32_t count = io::read_u32(is);
    if (count > (1u << 20)) throw CorruptFile("implausible block count in " + path);
    std::map<std::string, Tensor> blocks;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = io::read_string(is);
        Tensor t = io::read_tensor(is);
        if (!blocks.emplace(name, std::move(t)).second)
            throw CorruptFile("duplicate block '" + name + "' in " + path);
    }
    auto take = [&](const std::string& name, Tensor& into) {
        auto it = blocks.find(name);
        if (it == blocks.end()) throw CorruptFile("missing block '" + name + "' in " + path);
        if (!it->second.same_shape(into))
            throw CorruptFile("block '" + name + "' has shape " + it->second.shape_str() +
                              ", expected " + into.shape_str());
        into = std::move(it->second);
    };
    nn::ParamMap gp = r.state.g.params();
    nn::ParamMap dp = r.state.d.params();
    if (count != 3 * (gp.items.size() + dp.items.size()))
        throw CorruptFile("unexpected block count in " + path);
    for (std::size_t i = 0; i < gp.items.size(); ++i) {
        take("g." + gp.items[i].first, gp.items[i].second.node->value);
        take("g." + gp.items[i].first + ".m", r.state.opt_g.m[i]);
        take("g." + gp.items[i].first + ".v", r.state.opt_g.v[i]);
    }
    for (std::size_t i = 0; i < dp.items.size(); ++i) {
        take("d." + dp.items[i].first, dp.items[i].second.node->value);
        take("d." + dp.items[i].first + ".m", r.state.opt_d.m[i]);
        take("d." + dp.items[i].first + ".v", r.state.opt_d.v[i]);
    }
    return r;
}

}  // namespace sdgan::train
