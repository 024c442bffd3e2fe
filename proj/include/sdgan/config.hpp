#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sdgan/trainer.hpp"

namespace sdgan::cfg {

// flat key = value store; every known key is present after parsing, unknown
// keys are rejected
struct ConfigFile {
    std::map<std::string, std::string> values;

    const std::string& gets(const std::string& key) const;
    long long geti(const std::string& key) const;
    double getd(const std::string& key) const;
    bool getb(const std::string& key) const;
    std::uint64_t getu(const std::string& key) const;
};

ConfigFile default_config();
// '#' starts a comment, blank lines are skipped, everything else is key = value
ConfigFile parse_config_text(const std::string& text);
ConfigFile load_config(const std::string& path);

// sorted "key = value" lines; digests and run naming hang off this form
std::string canonical_text(const ConfigFile& c);
std::uint64_t config_digest(const ConfigFile& c);

// cross-field validation happens here (batch must stay 1, widths positive...)
train::TrainConfig to_train_config(const ConfigFile& c);

}  // namespace sdgan::cfg
