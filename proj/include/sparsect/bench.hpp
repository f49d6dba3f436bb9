#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sparsect/geometry.hpp"
#include "sparsect/metrics.hpp"
#include "sparsect/phantom.hpp"
#include "sparsect/recon.hpp"
#include "sparsect/segment.hpp"
#include "sparsect/stats.hpp"

namespace sparsect {

inline const std::vector<std::string> kMethods{"fdk", "sart", "asdpocs"};

struct PitfallConfig {
    int views = 360;
    std::string method = "fdk";
    /// Structure name, "smallest:<Category>", "largest:<Category>" or "none".
    std::string target = "smallest:SmallOrgan";
};

/// Benchmark configuration. Scan s uses phantom seed `spec.seed + seed + s`.
struct BenchConfig {
    std::optional<std::filesystem::path> phantom_spec;  ///< default spec when unset
    std::filesystem::path out_dir = "bench_out";
    std::uint64_t seed = 0;
    int scans = 3;
    std::vector<int> views{50, 100, 200, 360};
    std::vector<std::string> methods{"fdk", "sart", "asdpocs"};
    ConeBeamGeometry geometry;  ///< angles are generated per view count
    double noise_sigma = 0.0;
    std::uint64_t noise_seed = 1;
    Apodization fdk_apodization = Apodization::Hann;
    SartParams sart;
    AsdPocsParams asd_pocs;
    MetricParams metrics;
    double window_lo = kDefaultWindowLo;
    double window_hi = kDefaultWindowHi;
    SegmenterParams segmenter;
    std::optional<std::pair<std::string, std::string>> compare{{"fdk", "asdpocs"}};
    PitfallConfig pitfall;

    /// Throws ParameterError listing the offending field.
    void validate() const;
};

nlohmann::json to_json(const BenchConfig& c);
/// Missing keys keep their defaults; relative paths resolve against `base_dir`.
BenchConfig bench_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
BenchConfig load_bench_config(const std::filesystem::path& path);

/// Throws ParameterError naming the valid methods.
void require_method(const std::string& method);

/// Paths of the staged artifacts below the output directory.
struct BenchLayout {
    std::filesystem::path root;

    std::string scan_id(int scan) const;
    std::filesystem::path scan_dir(int scan) const;
    std::filesystem::path ground_truth(int scan) const;
    std::filesystem::path labels(int scan) const;
    std::filesystem::path projections(int scan, int views) const;
    std::filesystem::path reconstruction(int scan, const std::string& method, int views) const;
    std::filesystem::path diagnostics(int scan, const std::string& method, int views) const;
    std::filesystem::path records() const { return root / "records.csv"; }
    std::filesystem::path summary() const { return root / "summary.csv"; }
    std::filesystem::path scatter() const { return root / "scatter.json"; }
    std::filesystem::path pitfall() const { return root / "pitfall.csv"; }
};

PhantomSpec scan_spec(const BenchConfig& c, int scan);
ConeBeamGeometry view_geometry(const BenchConfig& c, int views);
/// Adds zero-mean Gaussian noise with the configured sigma, seeded per (scan, views).
void add_projection_noise(ProjectionStack& p, double sigma, std::uint64_t seed);
Volume3 reconstruct(const BenchConfig& c, const std::string& method, const ProjectionStack& p, const Grid3& grid,
                    ReconDiagnostics* diagnostics = nullptr);

/// All metric records of one reconstruction against the ground truth: psnr
/// and ssim on the windowed volume, dsc for every structure, nsd for organs
/// and cldice for intestine and vessel.
std::vector<MetricRecord> evaluate_volume(const BenchConfig& c, const std::string& scan_id, const std::string& method,
                                          int views, const Volume3& test, const Volume3& reference,
                                          const LabelVolume& labels);

/// The structure metric of a category: "nsd" for organs, "cldice" otherwise.
const char* structure_metric(Category category);

std::vector<std::filesystem::path> cmd_phantom(const BenchConfig& c);
std::vector<std::filesystem::path> cmd_project(const BenchConfig& c);
std::vector<std::filesystem::path> cmd_reconstruct(const BenchConfig& c);
std::vector<std::filesystem::path> cmd_evaluate(const BenchConfig& c);
std::vector<std::filesystem::path> cmd_report(const BenchConfig& c);

/// Scatter data: per (scan, method, views) the mean of the four category
/// groups against SSIM and PSNR, with Pearson r (null when undefined).
nlohmann::json scatter_json(const std::vector<MetricRecord>& records, std::vector<std::string>* warnings = nullptr);

struct PitfallRow {
    std::string variant;  ///< "intact" or "ablated"
    std::string target;   ///< ablated structure name (empty for none)
    double psnr = 0.0;
    double ssim = 0.0;
    double target_dsc = 1.0;
    double target_nsd = 1.0;
    std::map<std::string, double> groups;  ///< anatomy summary columns
};

struct PitfallResult {
    std::vector<PitfallRow> rows;
    std::filesystem::path csv;
};

/// Reconstructs the intact and the target-ablated phantom of scan 0 and
/// scores both against the intact ground truth.
PitfallResult cmd_pitfall(const BenchConfig& c);

/// phantom, project, reconstruct, evaluate, report.
std::vector<std::filesystem::path> cmd_run(const BenchConfig& c);

}  // namespace sparsect
