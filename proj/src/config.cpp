#include "esp/config.hpp"

#include "esp/errors.hpp"
#include "esp/oracle.hpp"

#include <cmath>
#include <fstream>
#include <thread>

namespace esp {

using nlohmann::json;

RunConfig::RunConfig() {
    values_ = {
        {"subcommand", ""},
        {"input", ""},
        {"output", ""},
        {"delta_split", 1e-4},
        {"delta_spread", 0.0},
        {"P", 0},
        {"r_c", 0.0},
        {"oversampling", 1.0},
        {"mode", "analytic"},
        {"coupling", "isotropic"},
        {"prefactor", 1.0},
        {"table_tol", 1e-13},
        {"pair_table", true},
        {"r_in", 0.0},
        {"table_resolution", 4096},
        {"seed", 1},
        {"threads", 0},
        {"npt.dt", 0.002},
        {"npt.n_steps", 1000},
        {"npt.target_T", 1.0},
        {"npt.target_P0", 1.0},
        {"npt.tau_P", 1.0},
        {"npt.beta_T", 0.1},
        {"npt.barostat_noise", true},
        {"npt.thermostat_period", 10},
        {"npt.kB", 1.0},
        {"npt.softcore_A", 1.0},
        {"npt.skin", 0.3},
        {"npt.force_ceiling", 1e6},
        {"npt.volume_floor", 0.0},
        {"npt.replan_threshold", 0.02},
        {"npt.record_every", 100},
        {"npt.burn_in", 0},
        {"tune.quantity", "diag-pressure"},
        {"tune.target", 1e-4},
        {"tune.calibration", ""},
        {"bench.kind", "scaling"},
        {"bench.n_min", 1000},
        {"bench.doublings", 5},
        {"bench.density", 0.3},
        {"bench.repeats", 3},
    };
}

namespace {

bool same_kind(const json& def, const json& v) {
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_string()) return v.is_string();
    if (def.is_number_integer())
        return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    if (def.is_number()) return v.is_number();
    return false;
}

} // namespace

void RunConfig::merge(const json& obj) {
    if (!obj.is_object()) throw ParameterError("config must be a flat JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!values_.contains(it.key())) throw ParameterError("unknown config key '" + it.key() + "'");
        json& def = values_[it.key()];
        if (!same_kind(def, it.value()))
            throw ParameterError("config key '" + it.key() + "' expects a " + std::string(def.type_name()));
        if (def.is_number_integer())
            def = static_cast<long>(it.value().get<double>());
        else if (def.is_number_float())
            def = it.value().get<double>();
        else
            def = it.value();
    }
}

void RunConfig::merge_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open config file '" + path + "'");
    json obj;
    try {
        obj = json::parse(f);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config file '") + path + "': " + e.what());
    }
    merge(obj);
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!values_.contains(key)) throw ParameterError("unknown config key '" + key + "'");
    const json& def = values_[key];
    json v;
    if (def.is_string()) {
        v = value;
    } else {
        try {
            v = json::parse(value);
        } catch (const json::parse_error&) {
            throw ParameterError("config key '" + key + "': cannot parse '" + value + "'");
        }
    }
    merge(json{{key, v}});
}

const json& RunConfig::at(const std::string& key) const {
    if (!values_.contains(key)) throw ParameterError("unknown config key '" + key + "'");
    return values_.at(key);
}

double RunConfig::number(const std::string& key) const { return at(key).get<double>(); }
long RunConfig::integer(const std::string& key) const { return at(key).get<long>(); }
bool RunConfig::flag(const std::string& key) const { return at(key).get<bool>(); }
std::string RunConfig::str(const std::string& key) const { return at(key).get<std::string>(); }

RunConfig RunConfig::resolved() const {
    RunConfig r = *this;
    json& v = r.values_;
    if (!(v["delta_split"].get<double>() > 0.0)) throw ParameterError("delta_split must be positive");
    if (v["delta_spread"].get<double>() <= 0.0) v["delta_spread"] = v["delta_split"].get<double>();
    if (v["P"].get<long>() <= 0) v["P"] = static_cast<long>(default_order(v["delta_spread"].get<double>()));
    if (v["r_in"].get<double>() <= 0.0 && v["r_c"].get<double>() > 0.0) v["r_in"] = 0.1 * v["r_c"].get<double>();
    if (v["threads"].get<long>() <= 0) {
        const bool bench = v["subcommand"].get<std::string>() == "bench";
        v["threads"] = bench ? static_cast<long>(std::max(1u, std::thread::hardware_concurrency())) : 1L;
    }
    parse_force_mode(v["mode"].get<std::string>());
    parse_coupling(v["coupling"].get<std::string>());
    return r;
}

EspParams RunConfig::esp_params() const {
    EspParams p;
    p.delta_split = number("delta_split");
    p.delta_spread = number("delta_spread");
    p.P = static_cast<int>(integer("P"));
    p.r_c = number("r_c");
    p.oversampling = number("oversampling");
    p.mode = parse_force_mode(str("mode"));
    p.prefactor = number("prefactor");
    p.table_tol = number("table_tol");
    p.use_pair_table = flag("pair_table");
    p.r_in = number("r_in");
    p.table_resolution = static_cast<int>(integer("table_resolution"));
    return p;
}

NptConfig RunConfig::npt_config() const {
    NptConfig c;
    c.dt = number("npt.dt");
    c.n_steps = integer("npt.n_steps");
    c.target_T = number("npt.target_T");
    c.target_P0 = number("npt.target_P0");
    c.tau_P = number("npt.tau_P");
    c.beta_T = number("npt.beta_T");
    c.barostat_noise = flag("npt.barostat_noise");
    c.thermostat_period = static_cast<int>(integer("npt.thermostat_period"));
    c.kB = number("npt.kB");
    c.seed = static_cast<std::uint64_t>(integer("seed"));
    c.softcore_A = number("npt.softcore_A");
    c.skin = number("npt.skin");
    c.force_ceiling = number("npt.force_ceiling");
    c.volume_floor = number("npt.volume_floor");
    c.replan_threshold = number("npt.replan_threshold");
    c.record_every = integer("npt.record_every");
    c.burn_in = integer("npt.burn_in");
    c.esp = esp_params();
    return c;
}

} // namespace esp
