#pragma once

#include "esp/npt.hpp"
#include "esp/solver.hpp"

#include <json.hpp>

#include <string>

namespace esp {

/// Flat key-value run configuration.  Every key has a typed default; a config
/// file (a flat JSON object) and command-line overrides may only touch known
/// keys with values of the default's type.
class RunConfig {
public:
    RunConfig();

    void merge(const nlohmann::json& obj);
    void merge_file(const std::string& path);
    // Value given as text, converted to the key's type.
    void set(const std::string& key, const std::string& value);

    // Fill derived defaults: delta_spread, P, r_in, threads.
    RunConfig resolved() const;

    bool has(const std::string& key) const { return values_.contains(key); }
    double number(const std::string& key) const;
    long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::string str(const std::string& key) const;

    EspParams esp_params() const;
    NptConfig npt_config() const;

    // Compact, key-sorted JSON; identical configs dump identically.
    std::string dump() const { return values_.dump(); }
    const nlohmann::json& values() const { return values_; }

private:
    const nlohmann::json& at(const std::string& key) const;
    nlohmann::json values_;
};

} // namespace esp
