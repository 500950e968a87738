#include "esp/tune.hpp"

#include "esp/errors.hpp"
#include "esp/solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace esp {

TuneQuantity parse_tune_quantity(const std::string& s) {
    if (s == "diag-pressure") return TuneQuantity::diag_pressure;
    if (s == "offdiag-pressure") return TuneQuantity::offdiag_pressure;
    if (s == "force") return TuneQuantity::force;
    throw ParameterError("unknown tune quantity '" + s + "' (expected diag-pressure, offdiag-pressure or force)");
}

const char* to_string(TuneQuantity q) {
    switch (q) {
    case TuneQuantity::diag_pressure: return "diag-pressure";
    case TuneQuantity::offdiag_pressure: return "offdiag-pressure";
    case TuneQuantity::force: return "force";
    }
    return "?";
}

const TuneAnchors& TuneTable::anchors(TuneQuantity q) const {
    switch (q) {
    case TuneQuantity::diag_pressure: return diag;
    case TuneQuantity::offdiag_pressure: return offdiag;
    case TuneQuantity::force: return force;
    }
    return diag;
}

TuneTable default_tune_table() {
    TuneTable t;
    t.diag.points = {{1e-5, 2e-4}, {1e-4, 1e-3}, {1e-3, 2e-2}};
    t.offdiag.points = {{1e-5, 2e-6}, {1e-4, 2e-5}, {1e-3, 2e-4}};
    t.force.points = {{2e-5, 2e-5}, {4e-4, 4e-4}};
    return t;
}

namespace {

double fit_slope(const std::vector<CalibrationRow>& rows, double CalibrationRow::*field) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& r : rows) {
        const double e = r.*field;
        if (!(e > 1e-13) || !(r.delta > 0.0)) continue;
        const double x = std::log(r.delta), y = std::log(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return 0.0;
    const double d = n * sxx - sx * sx;
    return d > 0.0 ? (n * sxy - sx * sy) / d : 0.0;
}

} // namespace

void apply_calibration(TuneTable& table, const std::vector<CalibrationRow>& rows) {
    table.calibration = rows;
    const double sd = fit_slope(rows, &CalibrationRow::diag);
    const double so = fit_slope(rows, &CalibrationRow::offdiag);
    const double sf = fit_slope(rows, &CalibrationRow::force);
    if (sd > 0.0) table.diag.tail_slope = sd;
    if (so > 0.0) table.offdiag.tail_slope = so;
    if (sf > 0.0) table.force.tail_slope = sf;
}

TuneTable load_tune_table(const std::string& path) {
    TuneTable t = default_tune_table();
    std::ifstream f(path);
    if (!f) throw InputError("cannot open calibration file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("calibration file: ") + e.what());
    }
    std::vector<CalibrationRow> rows;
    for (const auto& r : j.at("rows"))
        rows.push_back({r.at("delta").get<double>(), r.at("diag").get<double>(), r.at("offdiag").get<double>(),
                        r.at("force").get<double>()});
    apply_calibration(t, rows);
    return t;
}

void save_calibration(const std::string& path, const std::vector<CalibrationRow>& rows) {
    nlohmann::json j;
    j["description"] =
        "relative L2 errors of ESP against classical Ewald on static random configurations, P = ceil(-log10 delta)+1";
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows)
        j["rows"].push_back({{"delta", r.delta}, {"diag", r.diag}, {"offdiag", r.offdiag}, {"force", r.force}});
    std::ofstream f(path);
    if (!f) throw InputError("cannot write calibration file '" + path + "'");
    f << j.dump(2) << '\n';
}

TuneResult tune(TuneQuantity q, double target, const TuneTable& table, double r_c, const Cell* cell,
                double oversampling) {
    if (!(target >= 1e-8 && target <= 1e-2))
        throw TuningError("target error must lie in [1e-8, 1e-2]");
    const TuneAnchors& a = table.anchors(q);
    if (a.points.empty()) throw TuningError("no anchors for this quantity");
    const auto& p = a.points;
    const double lt = std::log(target);
    double ld;
    if (p.size() == 1 || lt <= std::log(p.front().first)) {
        ld = std::log(p.front().second) + (lt - std::log(p.front().first)) / a.tail_slope;
    } else if (lt >= std::log(p.back().first)) {
        ld = std::log(p.back().second) + (lt - std::log(p.back().first)) / a.tail_slope;
    } else {
        std::size_t k = 1;
        while (lt > std::log(p[k].first)) ++k;
        const double x0 = std::log(p[k - 1].first), x1 = std::log(p[k].first);
        const double y0 = std::log(p[k - 1].second), y1 = std::log(p[k].second);
        ld = y0 + (y1 - y0) * (lt - x0) / (x1 - x0);
    }
    TuneResult r;
    r.quantity = q;
    r.target = target;
    r.delta = std::exp(ld);
    // snap anchors exactly so published pairs reproduce bitwise
    for (const auto& [e, d] : p)
        if (std::abs(lt - std::log(e)) < 1e-12) r.delta = d;
    if (!(r.delta >= 1e-14 && r.delta <= 1e-1))
        throw TuningError("target requires delta = " + std::to_string(r.delta) + ", outside [1e-14, 1e-1]");
    r.c_split = r.c_spread = solve_bandwidth(r.delta);
    r.P = default_order(r.delta);
    if (r_c > 0.0) {
        r.spacing = M_PI * r_c / r.c_split / oversampling;
        if (cell) {
            if (!(r_c < 0.5 * cell->min_width()))
                throw TuningError("r_c must be below half the minimum cell width");
            try {
                SplitKernel kern(build_pswf(r.c_split), r_c);
                r.grid = plan_grid(*cell, kern, r.delta, r.P, oversampling);
            } catch (const PlanningError& e) {
                throw TuningError(std::string("geometry constraints cannot be met: ") + e.what());
            }
        }
    }
    return r;
}

} // namespace esp
