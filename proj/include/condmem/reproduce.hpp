#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "condmem/types.hpp"

namespace condmem {

/// Built-in experiment parameters; configs/measured.cfg carries the same values.
RunConfig measured_config();

/// Trials of the full-scale fig2/figA2 runs.
inline constexpr double kMeasuredTrials = 3.36e9;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// One pass/fail line. Range checks use [lo, hi]; others |value - target| <= tolerance.
struct Check {
    std::string name;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    bool range = false;
    double lo = 0.0;
    double hi = 0.0;
    bool pass = false;
    std::string note;

    static Check near(std::string name, double value, double target, double tolerance,
                      std::string note = {});
    static Check within(std::string name, double value, double lo, double hi, std::string note = {});
    static Check truth(std::string name, bool ok, std::string note = {});
};

std::string format_check(const Check& check);

struct FigureReport {
    std::string figure;
    double scale = 1.0;
    std::vector<RunConfig> configs;
    std::vector<Table> tables;
    std::vector<Check> checks;
    std::vector<std::string> fits;  ///< FitResult JSON documents
    double elapsed_seconds = 0.0;

    bool passed() const;
};

const std::vector<std::string>& figure_ids();

/// Tolerance quoted at ref_scale, widened as sqrt(ref_scale / scale) for smaller runs.
double widen(double tolerance, double ref_scale, double scale);

/*!
 * Runs the documented configuration of one figure at `scale` times its
 * full-scale trial count and checks the results against their oracles.
 * `base` supplies seed and physical parameters; `threads` is passed to the engine.
 * Throws InvalidParameter for an unknown figure or scale outside (0, 1].
 */
FigureReport reproduce(const std::string& figure, double scale, const RunConfig& base,
                       unsigned threads = 0);

/// The configurations reproduce() would run, without running them.
std::vector<RunConfig> figure_configs(const std::string& figure, double scale, const RunConfig& base);

/// Writes every table as <dir>/<name>.csv plus <dir>/<figure>_report.txt and
/// <dir>/<figure>_fits.json. Throws IoError.
void write_report(const std::filesystem::path& dir, const FigureReport& report);

std::string format_report(const FigureReport& report);

/// CSV with the shared header line, then column names, then rows.
void write_csv(const std::filesystem::path& path, const Table& table, const RunConfig& config);

/// Estimator-versus-oracle sweep over a 3x3x3 grid of (p1, pc, Nc).
struct SelfcheckReport {
    std::vector<Check> checks;
    double elapsed_seconds = 0.0;
    bool passed() const;
};

SelfcheckReport selfcheck(std::uint64_t seed = 1, unsigned threads = 0);

}  // namespace condmem
