#include "sdgan/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace sdgan::cfg {

namespace {

enum class Kind { str, integer, real, boolean, unsigned64 };

struct KeySpec {
    const char* key;
    Kind kind;
    const char* def;
};

const std::vector<KeySpec>& registry() {
    static const std::vector<KeySpec> specs = {
        {"data.root", Kind::str, "data"},
        {"data.labels", Kind::str, "canonical"},
        {"train.epochs", Kind::integer, "200"},
        {"train.lr0", Kind::real, "0.0002"},
        {"train.beta1", Kind::real, "0.5"},
        {"train.beta2", Kind::real, "0.999"},
        {"train.batch", Kind::integer, "1"},
        {"train.seed", Kind::unsigned64, "1"},
        {"train.checkpoint_every", Kind::integer, "10"},
        {"loss.alpha", Kind::real, "100"},
        {"loss.lambda", Kind::real, "100"},
        {"loss.delta", Kind::real, "1"},
        {"loss.eta", Kind::real, "10"},
        {"loss.adv_mode", Kind::str, "nonsat"},
        {"loss.ar_variance", Kind::str, "intra"},
        {"ablation.use_saliency", Kind::boolean, "true"},
        {"ablation.use_layout", Kind::boolean, "true"},
        {"ablation.use_arloss", Kind::boolean, "true"},
        {"ablation.use_perceptual", Kind::boolean, "true"},
        {"ablation.use_bce", Kind::boolean, "true"},
        {"model.image_size", Kind::integer, "256"},
        {"model.base_width", Kind::integer, "64"},
        {"model.max_width", Kind::integer, "512"},
        {"model.si_hidden", Kind::integer, "128"},
        {"model.d_base", Kind::integer, "64"},
        {"model.use_skip", Kind::boolean, "false"},
        {"model.upsample", Kind::str, "nearest"},
        {"oracle.extractor_path", Kind::str, ""},
        {"oracle.parser_path", Kind::str, ""},
    };
    return specs;
}

const KeySpec* find_spec(const std::string& key) {
    for (const auto& s : registry())
        if (key == s.key) return &s;
    return nullptr;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void check_value(const KeySpec& spec, const std::string& v) {
    const char* s = v.c_str();
    char* end = nullptr;
    switch (spec.kind) {
        case Kind::str:
            return;
        case Kind::integer:
            std::strtoll(s, &end, 10);
            break;
        case Kind::real:
            std::strtod(s, &end);
            break;
        case Kind::unsigned64:
            std::strtoull(s, &end, 10);
            break;
        case Kind::boolean:
            if (v != "true" && v != "false" && v != "1" && v != "0")
                throw ConfigError(std::string(spec.key) + " must be true or false, got '" + v +
                                  "'");
            return;
    }
    if (v.empty() || end != s + v.size())
        throw ConfigError(std::string(spec.key) + " has a malformed value '" + v + "'");
}

}  // namespace

const std::string& ConfigFile::gets(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

long long ConfigFile::geti(const std::string& key) const {
    return std::strtoll(gets(key).c_str(), nullptr, 10);
}

double ConfigFile::getd(const std::string& key) const {
    return std::strtod(gets(key).c_str(), nullptr);
}

bool ConfigFile::getb(const std::string& key) const {
    const std::string& v = gets(key);
    return v == "true" || v == "1";
}

std::uint64_t ConfigFile::getu(const std::string& key) const {
    return std::strtoull(gets(key).c_str(), nullptr, 10);
}

ConfigFile default_config() {
    ConfigFile c;
    for (const auto& s : registry()) c.values[s.key] = s.def;
    return c;
}

ConfigFile parse_config_text(const std::string& text) {
    ConfigFile c = default_config();
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + " is not key = value: '" + t +
                              "'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        const KeySpec* spec = find_spec(key);
        if (!spec) throw ConfigError("unknown config key '" + key + "'");
        check_value(*spec, value);
        c.values[key] = value;
    }
    return c;
}

ConfigFile load_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingFile("cannot open config: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

std::string canonical_text(const ConfigFile& c) {
    std::string out;
    for (const auto& [k, v] : c.values) out += k + " = " + v + "\n";
    return out;
}

std::uint64_t config_digest(const ConfigFile& c) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : canonical_text(c)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

train::TrainConfig to_train_config(const ConfigFile& c) {
    train::TrainConfig t;
    t.epochs = static_cast<int>(c.geti("train.epochs"));
    if (t.epochs < 1) throw ConfigError("train.epochs must be >= 1");
    t.lr0 = c.getd("train.lr0");
    if (!(t.lr0 > 0)) throw ConfigError("train.lr0 must be > 0");
    t.beta1 = c.getd("train.beta1");
    t.beta2 = c.getd("train.beta2");
    if (t.beta1 < 0 || t.beta1 >= 1 || t.beta2 < 0 || t.beta2 >= 1)
        throw ConfigError("adam betas must lie in [0,1)");
    t.batch = static_cast<int>(c.geti("train.batch"));
    if (t.batch != 1) throw ConfigError("train.batch must be 1, the loop is written for it");
    t.seed = c.getu("train.seed");
    t.checkpoint_every = static_cast<int>(c.geti("train.checkpoint_every"));
    if (t.checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");

    t.weights.alpha = c.getd("loss.alpha");
    t.weights.lambda = c.getd("loss.lambda");
    t.weights.delta = c.getd("loss.delta");
    t.weights.eta = c.getd("loss.eta");
    if (t.weights.alpha < 0 || t.weights.lambda < 0 || t.weights.delta < 0 || t.weights.eta < 0)
        throw ConfigError("loss weights must be non-negative");

    const std::string& adv = c.gets("loss.adv_mode");
    if (adv == "nonsat")
        t.adv_literal = false;
    else if (adv == "literal")
        t.adv_literal = true;
    else
        throw ConfigError("loss.adv_mode must be nonsat or literal, got '" + adv + "'");
    const std::string& arv = c.gets("loss.ar_variance");
    if (arv == "intra")
        t.ar_form = ar::VarianceForm::intra;
    else if (arv == "literal")
        t.ar_form = ar::VarianceForm::literal;
    else
        throw ConfigError("loss.ar_variance must be intra or literal, got '" + arv + "'");

    t.use_saliency = c.getb("ablation.use_saliency");
    t.use_layout = c.getb("ablation.use_layout");
    t.use_arloss = c.getb("ablation.use_arloss");
    t.use_perceptual = c.getb("ablation.use_perceptual");
    t.use_bce = c.getb("ablation.use_bce");
    t.labels = data::parse_label_table(c.gets("data.labels"));

    t.gcfg.image_size = static_cast<int>(c.geti("model.image_size"));
    if (t.gcfg.image_size < 8 || (t.gcfg.image_size & (t.gcfg.image_size - 1)) != 0)
        throw ConfigError("model.image_size must be a power of two >= 8");
    t.gcfg.base_width = static_cast<int>(c.geti("model.base_width"));
    t.gcfg.max_width = static_cast<int>(c.geti("model.max_width"));
    t.gcfg.si_hidden = static_cast<int>(c.geti("model.si_hidden"));
    if (t.gcfg.base_width < 1 || t.gcfg.si_hidden < 1 ||
        t.gcfg.max_width < t.gcfg.base_width)
        throw ConfigError("model widths must be positive and max_width >= base_width");
    t.gcfg.use_skip = c.getb("model.use_skip");
    const std::string& up = c.gets("model.upsample");
    if (up == "nearest")
        t.gcfg.bilinear_upsample = false;
    else if (up == "bilinear")
        t.gcfg.bilinear_upsample = true;
    else
        throw ConfigError("model.upsample must be nearest or bilinear, got '" + up + "'");
    t.dcfg.base_width = static_cast<int>(c.geti("model.d_base"));
    if (t.dcfg.base_width < 1) throw ConfigError("model.d_base must be >= 1");
    t.dcfg.image_size = t.gcfg.image_size;

    // keep the per-network configs in agreement with the ablation flags even
    // before make_model_state normalizes them
    t.gcfg.use_saliency = t.use_saliency;
    t.gcfg.use_layout = t.use_layout;
    t.dcfg.use_saliency = t.use_saliency;

    t.config_digest = config_digest(c);
    return t;
}

}  // namespace sdgan::cfg
