#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sparsect {

struct Quartiles {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

/// Quantile of sorted data by linear interpolation between closest ranks
/// (position q*(n-1)).
double quantile_sorted(std::span<const double> sorted, double q);

/// Median and quartiles; throws ParameterError on empty input.
Quartiles median_iqr(std::span<const double> samples);

/// Product-moment correlation. Throws ParameterError on length mismatch or
/// fewer than two points and UndefinedCorrelationError on zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

enum class PValueMethod {
    Auto,   ///< exact when |a|+|b| <= 12 and there are no ties, otherwise normal
    Exact,  ///< enumeration of all rank splits (midranks under ties)
    Normal  ///< tie-corrected normal approximation with continuity correction
};

struct MannWhitneyResult {
    double u = 0.0;  ///< statistic of the first sample: R_a - |a|(|a|+1)/2
    double p_two_sided = 1.0;
    bool exact = false;
};

inline constexpr std::size_t kExactMannWhitneyLimit = 12;

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 PValueMethod method = PValueMethod::Auto);

/// Midranks (1-based) of the samples.
std::vector<double> midranks(std::span<const double> values);

/// One measurement. Whole-volume metrics use structure and category "volume".
struct MetricRecord {
    std::string scan_id;
    std::string method;
    int views = 0;
    std::string structure;
    std::string category;
    std::string metric;
    double value = 0.0;

    bool operator==(const MetricRecord&) const = default;
};

inline constexpr const char* kVolumeScope = "volume";

/// Median/IQR over scans of one (method, views, category, metric) group.
struct CategorySummary {
    std::string method;
    int views = 0;
    std::string category;
    std::string metric;
    Quartiles q;
    std::size_t n = 0;
    /// Per-scan values (sorted by scan id) the quartiles were taken from.
    std::vector<std::pair<std::string, double>> per_scan;
};

/// Within each scan, structures of a category are averaged (unweighted);
/// then median and quartiles are taken across scans. Output is ordered by
/// (method, views, category, metric).
std::vector<CategorySummary> aggregate_category(const std::vector<MetricRecord>& records);

std::string records_csv_header();
void write_records_csv(const std::vector<MetricRecord>& records, const std::filesystem::path& path);
/// Throws IoError when unreadable and FormatError on malformed rows.
std::vector<MetricRecord> read_records_csv(const std::filesystem::path& path);
/// Shortest text that round-trips the double; "inf"/"-inf"/"nan" for non-finite values.
std::string format_value(double v);

/// Summary column: a metric evaluated over one category.
struct SummaryColumn {
    std::string title;
    std::string category;
    std::string metric;
};

/// SSIM, PSNR, NSD_large, NSD_small, clDice_intestine, clDice_vessel.
std::vector<SummaryColumn> table_columns();

/// "median (q1,q3)" with four decimals.
std::string format_cell(const Quartiles& q);

/// Summary layout: one row per (method, views) with a "median (q1,q3)" cell
/// per column. When `compare` names two methods, p-value columns compare the
/// per-scan values of the second against the first at equal view counts
/// (filled on the second method's rows; '*' marks p < 0.05). Significance is
/// left blank, with `warning` set, when fewer than two scans are available.
struct SummaryTable {
    std::string csv;
    std::vector<std::string> warnings;
};

SummaryTable summary_table(const std::vector<CategorySummary>& summaries,
                           const std::optional<std::pair<std::string, std::string>>& compare);

}  // namespace sparsect
