#pragma once

#include "esp/mesh.hpp"

#include <optional>
#include <string>
#include <vector>

namespace esp {

enum class TuneQuantity { diag_pressure, offdiag_pressure, force };

TuneQuantity parse_tune_quantity(const std::string& s);
const char* to_string(TuneQuantity q);

// (target relative error, delta) pairs, sorted by error.
struct TuneAnchors {
    std::vector<std::pair<double, double>> points;
    double tail_slope = 1.0;  // d log(error) / d log(delta) beyond the anchors
};

struct CalibrationRow {
    double delta = 0.0;
    double diag = 0.0, offdiag = 0.0, force = 0.0;  // measured relative L2 errors
};

struct TuneTable {
    TuneAnchors diag, offdiag, force;
    std::vector<CalibrationRow> calibration;

    const TuneAnchors& anchors(TuneQuantity q) const;
};

// Mapping seeded with the published target-error/delta pairs.
TuneTable default_tune_table();
// Reads calibration rows (JSON) and replaces the tail slopes with least-squares fits.
TuneTable load_tune_table(const std::string& path);
void save_calibration(const std::string& path, const std::vector<CalibrationRow>& rows);
void apply_calibration(TuneTable& table, const std::vector<CalibrationRow>& rows);

struct TuneResult {
    TuneQuantity quantity = TuneQuantity::diag_pressure;
    double target = 0.0;
    double delta = 0.0;
    double c_split = 0.0, c_spread = 0.0;
    int P = 0;
    double spacing = 0.0;  // pi / kmax / oversampling, when r_c is given
    std::optional<GridSpec> grid;
};

// Log-log interpolation through the anchors; r_c <= 0 skips the spacing, a null cell
// skips grid planning.  Unattainable targets raise TuningError.
TuneResult tune(TuneQuantity q, double target, const TuneTable& table, double r_c = 0.0, const Cell* cell = nullptr,
                double oversampling = 1.0);

} // namespace esp
