#include "sparsect/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "sparsect/error.hpp"
#include "sparsect/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sparsect {

namespace {

const char* to_string(ViewOrder o) { return o == ViewOrder::GoldenAngle ? "golden" : "sequential"; }

ViewOrder view_order_from_string(const std::string& s)
{
    if (s == "sequential")
        return ViewOrder::Sequential;
    if (s == "golden")
        return ViewOrder::GoldenAngle;
    throw ParameterError("unknown view order '" + s + "' (valid: sequential, golden)");
}

std::string join(const std::vector<std::string>& v, const char* sep)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? sep : "") + v[i];
    return out;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void require_file(const fs::path& p, const char* stage)
{
    if (!fs::exists(p))
        throw PipelineError("missing upstream artifact " + p.string() + " (run the '" + stage + "' stage first)");
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void log_line(const std::string& stage, const std::string& msg) { std::clog << "[" << stage << "] " << msg << '\n'; }

}  // namespace

void require_method(const std::string& method)
{
    if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end())
        throw ParameterError("unknown reconstruction method '" + method + "' (valid: " + join(kMethods, ", ") + ")");
}

void BenchConfig::validate() const
{
    if (scans < 1)
        throw ParameterError("scans must be at least 1");
    if (views.empty())
        throw ParameterError("views must not be empty");
    for (int v : views)
        if (v < 2)
            throw ParameterError("every view count must be at least 2, got " + std::to_string(v));
    if (std::set<int>(views.begin(), views.end()).size() != views.size())
        throw ParameterError("views contains duplicates");
    if (methods.empty())
        throw ParameterError("methods must not be empty (valid: " + join(kMethods, ", ") + ")");
    for (const auto& m : methods)
        require_method(m);
    if (std::set<std::string>(methods.begin(), methods.end()).size() != methods.size())
        throw ParameterError("methods contains duplicates");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw ParameterError("noise sigma must be finite and non-negative");
    if (!(window_hi > window_lo))
        throw ParameterError("window upper bound must exceed the lower bound");
    if (compare) {
        require_method(compare->first);
        require_method(compare->second);
        if (compare->first == compare->second)
            throw ParameterError("compare needs two different methods");
    }
    if (pitfall.views < 2)
        throw ParameterError("pitfall views must be at least 2");
    require_method(pitfall.method);
    metrics.validate();
    segmenter.validate();
    sart.validate();
    asd_pocs.validate();
    view_geometry(*this, views.front()).validate();
}

json to_json(const BenchConfig& c)
{
    json j;
    j["phantom"] = c.phantom_spec ? json(c.phantom_spec->string()) : json(nullptr);
    j["out"] = c.out_dir.string();
    j["seed"] = c.seed;
    j["scans"] = c.scans;
    j["views"] = c.views;
    j["methods"] = c.methods;
    j["geometry"] = {{"sod_mm", c.geometry.sod_mm}, {"sdd_mm", c.geometry.sdd_mm}, {"nu", c.geometry.nu},
                     {"nv", c.geometry.nv},         {"du_mm", c.geometry.du_mm},   {"dv_mm", c.geometry.dv_mm},
                     {"u0_mm", c.geometry.u0_mm},   {"v0_mm", c.geometry.v0_mm}};
    j["noise"] = {{"sigma", c.noise_sigma}, {"seed", c.noise_seed}};
    j["fdk"] = {{"apodization", to_string(c.fdk_apodization)}};
    j["sart"] = {{"iterations", c.sart.iterations},
                 {"relaxation", c.sart.relaxation},
                 {"view_order", to_string(c.sart.view_order)},
                 {"order_seed", c.sart.order_seed},
                 {"nonneg_clip", c.sart.nonneg_clip}};
    j["asdpocs"] = {{"iterations", c.asd_pocs.iterations},
                    {"tv_steps", c.asd_pocs.tv_steps_per_iter},
                    {"alpha", c.asd_pocs.alpha},
                    {"alpha_red", c.asd_pocs.alpha_red},
                    {"r_max", c.asd_pocs.r_max},
                    {"data_tolerance", c.asd_pocs.data_tolerance},
                    {"relaxation", c.asd_pocs.sart_inner.relaxation}};
    j["metrics"] = {{"nsd_tau_mm", c.metrics.nsd_tau_mm},
                    {"window", {c.window_lo, c.window_hi}},
                    {"segment_margin_mm", c.segmenter.margin_mm},
                    {"ssim",
                     {{"window", c.metrics.ssim.window},
                      {"sigma", c.metrics.ssim.sigma},
                      {"k1", c.metrics.ssim.k1},
                      {"k2", c.metrics.ssim.k2}}}};
    j["compare"] = c.compare ? json{c.compare->first, c.compare->second} : json(nullptr);
    j["pitfall"] = {{"views", c.pitfall.views}, {"method", c.pitfall.method}, {"target", c.pitfall.target}};
    return j;
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out)
{
    if (j.contains(key) && !j.at(key).is_null())
        out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where)
{
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            ok = ok || key == k;
        if (!ok)
            throw ParameterError("unknown config key '" + where + key + "'");
    }
}

}  // namespace

BenchConfig bench_config_from_json(const json& j, const fs::path& base_dir)
{
    if (!j.is_object())
        throw FormatError("config must be a JSON object");
    BenchConfig c;
    try {
        reject_unknown(j,
                       {"phantom", "out", "seed", "scans", "views", "methods", "geometry", "noise", "fdk", "sart",
                        "asdpocs", "metrics", "compare", "pitfall"},
                       "");
        if (j.contains("phantom") && !j["phantom"].is_null()) {
            fs::path p = j["phantom"].get<std::string>();
            c.phantom_spec = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        }
        if (j.contains("out"))
            c.out_dir = j["out"].get<std::string>();
        read_opt(j, "seed", c.seed);
        read_opt(j, "scans", c.scans);
        read_opt(j, "views", c.views);
        read_opt(j, "methods", c.methods);
        if (j.contains("geometry")) {
            const auto& g = j["geometry"];
            reject_unknown(g, {"sod_mm", "sdd_mm", "nu", "nv", "du_mm", "dv_mm", "u0_mm", "v0_mm"}, "geometry.");
            read_opt(g, "sod_mm", c.geometry.sod_mm);
            read_opt(g, "sdd_mm", c.geometry.sdd_mm);
            read_opt(g, "nu", c.geometry.nu);
            read_opt(g, "nv", c.geometry.nv);
            read_opt(g, "du_mm", c.geometry.du_mm);
            read_opt(g, "dv_mm", c.geometry.dv_mm);
            read_opt(g, "u0_mm", c.geometry.u0_mm);
            read_opt(g, "v0_mm", c.geometry.v0_mm);
        }
        if (j.contains("noise")) {
            reject_unknown(j["noise"], {"sigma", "seed"}, "noise.");
            read_opt(j["noise"], "sigma", c.noise_sigma);
            read_opt(j["noise"], "seed", c.noise_seed);
        }
        if (j.contains("fdk")) {
            reject_unknown(j["fdk"], {"apodization"}, "fdk.");
            if (j["fdk"].contains("apodization"))
                c.fdk_apodization = apodization_from_string(j["fdk"]["apodization"].get<std::string>());
        }
        if (j.contains("sart")) {
            const auto& s = j["sart"];
            reject_unknown(s, {"iterations", "relaxation", "view_order", "order_seed", "nonneg_clip"}, "sart.");
            read_opt(s, "iterations", c.sart.iterations);
            read_opt(s, "relaxation", c.sart.relaxation);
            if (s.contains("view_order"))
                c.sart.view_order = view_order_from_string(s["view_order"].get<std::string>());
            read_opt(s, "order_seed", c.sart.order_seed);
            read_opt(s, "nonneg_clip", c.sart.nonneg_clip);
        }
        if (j.contains("asdpocs")) {
            const auto& a = j["asdpocs"];
            reject_unknown(a,
                           {"iterations", "tv_steps", "alpha", "alpha_red", "r_max", "data_tolerance", "relaxation"},
                           "asdpocs.");
            read_opt(a, "iterations", c.asd_pocs.iterations);
            read_opt(a, "tv_steps", c.asd_pocs.tv_steps_per_iter);
            read_opt(a, "alpha", c.asd_pocs.alpha);
            read_opt(a, "alpha_red", c.asd_pocs.alpha_red);
            read_opt(a, "r_max", c.asd_pocs.r_max);
            read_opt(a, "data_tolerance", c.asd_pocs.data_tolerance);
            read_opt(a, "relaxation", c.asd_pocs.sart_inner.relaxation);
        }
        if (j.contains("metrics")) {
            const auto& m = j["metrics"];
            reject_unknown(m, {"nsd_tau_mm", "window", "segment_margin_mm", "ssim"}, "metrics.");
            read_opt(m, "nsd_tau_mm", c.metrics.nsd_tau_mm);
            if (m.contains("window")) {
                const auto w = m["window"].get<std::vector<double>>();
                if (w.size() != 2)
                    throw ParameterError("metrics.window needs two values");
                c.window_lo = w[0];
                c.window_hi = w[1];
            }
            read_opt(m, "segment_margin_mm", c.segmenter.margin_mm);
            if (m.contains("ssim")) {
                const auto& s = m["ssim"];
                reject_unknown(s, {"window", "sigma", "k1", "k2"}, "metrics.ssim.");
                read_opt(s, "window", c.metrics.ssim.window);
                read_opt(s, "sigma", c.metrics.ssim.sigma);
                read_opt(s, "k1", c.metrics.ssim.k1);
                read_opt(s, "k2", c.metrics.ssim.k2);
            }
        }
        if (j.contains("compare")) {
            if (j["compare"].is_null()) {
                c.compare.reset();
            } else {
                const auto pair = j["compare"].get<std::vector<std::string>>();
                if (pair.size() != 2)
                    throw ParameterError("compare needs exactly two method names");
                c.compare = std::make_pair(pair[0], pair[1]);
            }
        }
        if (j.contains("pitfall")) {
            const auto& p = j["pitfall"];
            reject_unknown(p, {"views", "method", "target"}, "pitfall.");
            read_opt(p, "views", c.pitfall.views);
            read_opt(p, "method", c.pitfall.method);
            read_opt(p, "target", c.pitfall.target);
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    return c;
}

BenchConfig load_bench_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("config " + path.string() + ": " + e.what());
    }
    return bench_config_from_json(j, path.parent_path());
}

std::string BenchLayout::scan_id(int scan) const
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "scan%02d", scan);
    return buf;
}

fs::path BenchLayout::scan_dir(int scan) const { return root / scan_id(scan); }
fs::path BenchLayout::ground_truth(int scan) const { return scan_dir(scan) / "gt.f32"; }
fs::path BenchLayout::labels(int scan) const { return scan_dir(scan) / "labels.u16"; }

fs::path BenchLayout::projections(int scan, int views) const
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "proj_v%03d.f32", views);
    return scan_dir(scan) / buf;
}

fs::path BenchLayout::reconstruction(int scan, const std::string& method, int views) const
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "recon_%s_v%03d.f32", method.c_str(), views);
    return scan_dir(scan) / buf;
}

fs::path BenchLayout::diagnostics(int scan, const std::string& method, int views) const
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "recon_%s_v%03d_diag.csv", method.c_str(), views);
    return scan_dir(scan) / buf;
}

PhantomSpec scan_spec(const BenchConfig& c, int scan)
{
    PhantomSpec spec = c.phantom_spec ? load_phantom_spec(*c.phantom_spec) : PhantomSpec::default_spec();
    spec.seed += c.seed + static_cast<std::uint64_t>(scan);
    return spec;
}

ConeBeamGeometry view_geometry(const BenchConfig& c, int views)
{
    ConeBeamGeometry g = c.geometry;
    g.angles_rad = ConeBeamGeometry::equispaced_angles(views);
    return g;
}

void add_projection_noise(ProjectionStack& p, double sigma, std::uint64_t seed)
{
    if (sigma == 0.0)
        return;
    // Box-Muller on a fixed engine keeps the noise identical across standard libraries.
    std::mt19937_64 rng(seed);
    auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    constexpr double kTwoPi = 6.283185307179586476925;
    for (std::size_t i = 0; i < p.data.size(); i += 2) {
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = kTwoPi * uniform();
        p.data[i] = static_cast<float>(p.data[i] + sigma * r * std::cos(phi));
        if (i + 1 < p.data.size())
            p.data[i + 1] = static_cast<float>(p.data[i + 1] + sigma * r * std::sin(phi));
    }
}

Volume3 reconstruct(const BenchConfig& c, const std::string& method, const ProjectionStack& p, const Grid3& grid,
                    ReconDiagnostics* diagnostics)
{
    require_method(method);
    if (method == "fdk")
        return fdk(p, grid, c.fdk_apodization);
    if (method == "sart")
        return sart(p, grid, c.sart, std::nullopt, diagnostics);
    auto r = asd_pocs(p, grid, c.asd_pocs);
    if (diagnostics)
        *diagnostics = std::move(r.diagnostics);
    return std::move(r.volume);
}

const char* structure_metric(Category category)
{
    return category == Category::LargeOrgan || category == Category::SmallOrgan ? "nsd" : "cldice";
}

std::vector<MetricRecord> evaluate_volume(const BenchConfig& c, const std::string& scan_id, const std::string& method,
                                          int views, const Volume3& test, const Volume3& reference,
                                          const LabelVolume& labels)
{
    if (!(test.grid() == reference.grid()) || !(test.grid() == labels.grid()))
        throw EvaluationError("reconstruction and ground truth of " + scan_id + " are on different grids");
    std::vector<MetricRecord> out;
    auto add = [&](const std::string& structure, const std::string& category, const char* metric, double value) {
        out.push_back({scan_id, method, views, structure, category, metric, value});
    };
    const Volume3 ref_n = window_normalize(reference, c.window_lo, c.window_hi);
    const Volume3 test_n = window_normalize(test, c.window_lo, c.window_hi);
    add(kVolumeScope, kVolumeScope, "psnr", psnr(ref_n, test_n, 1.0));
    add(kVolumeScope, kVolumeScope, "ssim", ssim(ref_n, test_n, c.metrics.ssim));

    for (const auto& [label, info] : labels.table()) {
        const Mask3 gt = binary_mask(labels, label);
        const Mask3 pred = segment_structure(test, reference, labels, label, c.segmenter);
        const std::string category = to_string(info.category);
        add(info.name, category, "dsc", dsc(pred, gt, c.metrics.empty_policy));
        const char* metric = structure_metric(info.category);
        const double v = std::string(metric) == "nsd" ? nsd(pred, gt, c.metrics.nsd_tau_mm, c.metrics.empty_policy)
                                                      : cl_dice(pred, gt, c.metrics.empty_policy);
        add(info.name, category, metric, v);
    }
    return out;
}

std::vector<fs::path> cmd_phantom(const BenchConfig& c)
{
    c.validate();
    const BenchLayout layout{c.out_dir};
    std::vector<fs::path> written;
    for (int s = 0; s < c.scans; ++s) {
        fs::create_directories(layout.scan_dir(s));
        const Phantom ph = make_phantom(scan_spec(c, s));
        save_volume(ph.volume, layout.ground_truth(s));
        save_labels(ph.labels, layout.labels(s));
        written.push_back(layout.ground_truth(s));
        written.push_back(layout.labels(s));
        log_line("phantom", layout.scan_id(s) + ": " + std::to_string(ph.labels.table().size()) + " structures");
    }
    return written;
}

std::vector<fs::path> cmd_project(const BenchConfig& c)
{
    c.validate();
    const BenchLayout layout{c.out_dir};
    std::vector<fs::path> written;
    for (int s = 0; s < c.scans; ++s) {
        require_file(layout.ground_truth(s), "phantom");
        const Volume3 gt = load_volume(layout.ground_truth(s));
        for (int v : c.views) {
            ProjectionStack p = forward_project(gt, view_geometry(c, v));
            const std::uint64_t seed = splitmix64(c.noise_seed ^ splitmix64(static_cast<std::uint64_t>(s) << 32 |
                                                                            static_cast<std::uint64_t>(v)));
            add_projection_noise(p, c.noise_sigma, seed);
            save_projections(p, layout.projections(s, v));
            written.push_back(layout.projections(s, v));
            log_line("project", layout.scan_id(s) + " " + std::to_string(v) + " views");
        }
    }
    return written;
}

std::vector<fs::path> cmd_reconstruct(const BenchConfig& c)
{
    c.validate();
    const BenchLayout layout{c.out_dir};
    std::vector<fs::path> written;
    for (int s = 0; s < c.scans; ++s) {
        require_file(layout.ground_truth(s), "phantom");
        const Grid3 grid = load_volume(layout.ground_truth(s)).grid();
        for (int v : c.views) {
            require_file(layout.projections(s, v), "project");
            const ProjectionStack p = load_projections(layout.projections(s, v));
            for (const auto& m : c.methods) {
                const auto t0 = std::chrono::steady_clock::now();
                ReconDiagnostics diag;
                const Volume3 r = reconstruct(c, m, p, grid, &diag);
                save_volume(r, layout.reconstruction(s, m, v));
                written.push_back(layout.reconstruction(s, m, v));
                if (m != "fdk") {
                    write_diagnostics_csv(diag, layout.diagnostics(s, m, v).string());
                    written.push_back(layout.diagnostics(s, m, v));
                }
                char buf[128];
                std::snprintf(buf, sizeof buf, "%s %s@%d (%.1f s)", layout.scan_id(s).c_str(), m.c_str(), v,
                              seconds_since(t0));
                log_line("reconstruct", buf);
            }
        }
    }
    return written;
}

std::vector<fs::path> cmd_evaluate(const BenchConfig& c)
{
    c.validate();
    const BenchLayout layout{c.out_dir};
    std::vector<MetricRecord> records;
    for (int s = 0; s < c.scans; ++s) {
        require_file(layout.ground_truth(s), "phantom");
        require_file(layout.labels(s), "phantom");
        const Volume3 gt = load_volume(layout.ground_truth(s));
        const LabelVolume labels = load_labels(layout.labels(s));
        for (const auto& m : c.methods)
            for (int v : c.views) {
                require_file(layout.reconstruction(s, m, v), "reconstruct");
                const Volume3 r = load_volume(layout.reconstruction(s, m, v));
                auto rec = evaluate_volume(c, layout.scan_id(s), m, v, r, gt, labels);
                records.insert(records.end(), rec.begin(), rec.end());
                log_line("evaluate", layout.scan_id(s) + " " + m + "@" + std::to_string(v));
            }
    }
    write_records_csv(records, layout.records());
    return {layout.records()};
}

json scatter_json(const std::vector<MetricRecord>& records, std::vector<std::string>* warnings)
{
    struct Point {
        double ssim = std::nan("");
        double psnr = std::nan("");
        std::map<std::string, std::pair<double, int>> groups;  // column -> (sum, count)
    };
    std::map<std::tuple<std::string, int, std::string>, Point> points;
    const auto columns = table_columns();
    for (const auto& r : records) {
        Point& p = points[{r.method, r.views, r.scan_id}];
        if (r.category == kVolumeScope) {
            if (r.metric == "ssim")
                p.ssim = r.value;
            else if (r.metric == "psnr")
                p.psnr = r.value;
            continue;
        }
        for (const auto& col : columns)
            if (col.category == r.category && col.metric == r.metric) {
                p.groups[col.title].first += r.value;
                ++p.groups[col.title].second;
            }
    }
    json pts = json::array();
    std::vector<double> anat_s, ssim_s, anat_p, psnr_p;
    for (const auto& [key, p] : points) {
        if (p.groups.empty())
            continue;
        double sum = 0.0;
        json groups = json::object();
        for (const auto& [title, acc] : p.groups) {
            const double mean = acc.first / acc.second;
            groups[title] = mean;
            sum += mean;
        }
        const double anatomy = sum / static_cast<double>(p.groups.size());
        json pt = {{"method", std::get<0>(key)}, {"views", std::get<1>(key)}, {"scan_id", std::get<2>(key)},
                   {"anatomy", anatomy},         {"groups", groups}};
        pt["ssim"] = std::isfinite(p.ssim) ? json(p.ssim) : json(nullptr);
        pt["psnr"] = std::isfinite(p.psnr) ? json(p.psnr) : json(nullptr);
        pts.push_back(pt);
        if (std::isfinite(p.ssim)) {
            anat_s.push_back(anatomy);
            ssim_s.push_back(p.ssim);
        }
        if (std::isfinite(p.psnr)) {
            anat_p.push_back(anatomy);
            psnr_p.push_back(p.psnr);
        }
    }
    auto r_or_null = [&](const std::vector<double>& x, const std::vector<double>& y, const char* name) -> json {
        try {
            return pearson(x, y);
        } catch (const Error& e) {
            if (warnings)
                warnings->push_back(std::string(name) + ": correlation undefined (" + e.what() + ")");
            return nullptr;
        }
    };
    json out;
    out["points"] = pts;
    out["pearson"] = {{"anatomy_vs_ssim", r_or_null(anat_s, ssim_s, "anatomy_vs_ssim")},
                      {"anatomy_vs_psnr", r_or_null(anat_p, psnr_p, "anatomy_vs_psnr")}};
    out["n_points"] = pts.size();
    return out;
}

std::vector<fs::path> cmd_report(const BenchConfig& c)
{
    c.validate();
    const BenchLayout layout{c.out_dir};
    require_file(layout.records(), "evaluate");
    const auto records = read_records_csv(layout.records());
    const auto table = summary_table(aggregate_category(records), c.compare);
    for (const auto& w : table.warnings)
        log_line("report", "warning: " + w);
    {
        std::ofstream out(layout.summary(), std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + layout.summary().string());
        out << table.csv;
    }
    std::vector<std::string> warnings;
    const json scatter = scatter_json(records, &warnings);
    for (const auto& w : warnings)
        log_line("report", "warning: " + w);
    {
        std::ofstream out(layout.scatter(), std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + layout.scatter().string());
        out << scatter.dump(2) << '\n';
    }
    return {layout.summary(), layout.scatter()};
}

namespace {

std::optional<std::uint16_t> resolve_target(const std::string& target, const LabelVolume& lv)
{
    if (target == "none")
        return std::nullopt;
    auto by_size = [&](const std::string& prefix, bool smallest) -> std::optional<std::optional<std::uint16_t>> {
        if (target.rfind(prefix, 0) != 0)
            return std::nullopt;
        const Category cat = category_from_string(target.substr(prefix.size()));
        auto l = smallest ? smallest_structure(lv, cat) : largest_structure(lv, cat);
        if (!l)
            throw LookupError("no structure of category " + target.substr(prefix.size()));
        return l;
    };
    if (auto l = by_size("smallest:", true))
        return *l;
    if (auto l = by_size("largest:", false))
        return *l;
    if (auto l = lv.find(target))
        return *l;
    throw LookupError("unknown pitfall target '" + target + "'");
}

}  // namespace

PitfallResult cmd_pitfall(const BenchConfig& c)
{
    c.validate();
    const BenchLayout layout{c.out_dir};
    fs::create_directories(layout.root);
    const Phantom ph = make_phantom(scan_spec(c, 0));
    const auto target = resolve_target(c.pitfall.target, ph.labels);
    const Volume3 ablated = target ? ablate_structure(ph.volume, ph.labels, *target) : ph.volume;
    const ConeBeamGeometry geo = view_geometry(c, c.pitfall.views);
    const std::uint64_t noise_seed = splitmix64(c.noise_seed ^ 0x5049544641ULL);

    PitfallResult result;
    const auto columns = table_columns();
    for (const auto& [variant, volume] : {std::pair<std::string, const Volume3*>{"intact", &ph.volume},
                                          std::pair<std::string, const Volume3*>{"ablated", &ablated}}) {
        const auto t0 = std::chrono::steady_clock::now();
        ProjectionStack p = forward_project(*volume, geo);
        add_projection_noise(p, c.noise_sigma, noise_seed);
        const Volume3 r = reconstruct(c, c.pitfall.method, p, ph.volume.grid());
        const auto records = evaluate_volume(c, layout.scan_id(0), c.pitfall.method, c.pitfall.views, r, ph.volume,
                                             ph.labels);
        PitfallRow row;
        row.variant = variant;
        row.target = target ? ph.labels.info(*target).name : "none";
        std::map<std::string, std::pair<double, int>> groups;
        for (const auto& rec : records) {
            if (rec.metric == "psnr")
                row.psnr = rec.value;
            else if (rec.metric == "ssim")
                row.ssim = rec.value;
            if (target && rec.structure == row.target && rec.metric == "dsc")
                row.target_dsc = rec.value;
            for (const auto& col : columns)
                if (col.category == rec.category && col.metric == rec.metric && col.category != kVolumeScope) {
                    groups[col.title].first += rec.value;
                    ++groups[col.title].second;
                }
        }
        for (const auto& [title, acc] : groups)
            row.groups[title] = acc.first / acc.second;
        if (target) {
            const Mask3 pred = segment_structure(r, ph.volume, ph.labels, *target, c.segmenter);
            row.target_nsd = nsd(pred, binary_mask(ph.labels, *target), c.metrics.nsd_tau_mm, c.metrics.empty_policy);
        } else {
            row.target_dsc = row.target_nsd = std::nan("");
        }
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: psnr %.3f dB, ssim %.5f, target nsd %.3f (%.1f s)", variant.c_str(),
                      row.psnr, row.ssim, row.target_nsd, seconds_since(t0));
        log_line("pitfall", buf);
        result.rows.push_back(std::move(row));
    }

    result.csv = layout.pitfall();
    std::ofstream out(result.csv, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + result.csv.string());
    out << "variant,target,method,views,psnr,ssim,target_dsc,target_nsd";
    for (const auto& col : columns)
        if (col.category != kVolumeScope)
            out << ',' << col.title;
    out << '\n';
    for (const auto& row : result.rows) {
        out << row.variant << ',' << row.target << ',' << c.pitfall.method << ',' << c.pitfall.views << ','
            << format_value(row.psnr) << ',' << format_value(row.ssim) << ',' << format_value(row.target_dsc) << ','
            << format_value(row.target_nsd);
        for (const auto& col : columns) {
            if (col.category == kVolumeScope)
                continue;
            auto it = row.groups.find(col.title);
            out << ',' << (it == row.groups.end() ? std::string("-") : format_value(it->second));
        }
        out << '\n';
    }
    return result;
}

std::vector<fs::path> cmd_run(const BenchConfig& c)
{
    std::vector<fs::path> all;
    for (auto stage : {cmd_phantom, cmd_project, cmd_reconstruct, cmd_evaluate, cmd_report}) {
        auto w = stage(c);
        all.insert(all.end(), w.begin(), w.end());
    }
    return all;
}

}  // namespace sparsect
