#include "sparsect/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "sparsect/error.hpp"

namespace sparsect {

double quantile_sorted(std::span<const double> sorted, double q)
{
    if (sorted.empty())
        throw ParameterError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0))
        throw ParameterError("quantile level must lie in [0, 1]");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Quartiles median_iqr(std::span<const double> samples)
{
    if (samples.empty())
        throw ParameterError("median_iqr needs at least one sample");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    return {quantile_sorted(s, 0.5), quantile_sorted(s, 0.25), quantile_sorted(s, 0.75)};
}

double pearson(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw ParameterError("pearson: samples differ in length");
    if (x.size() < 2)
        throw ParameterError("pearson: at least two points are required");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw UndefinedCorrelationError("pearson: a sample has zero variance");
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

std::vector<double> midranks(std::span<const double> values)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]])
            ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace {

// Two-sided p from the full permutation distribution of U: every way of
// choosing which |a| of the pooled ranks belong to the first sample.
double exact_p(const std::vector<double>& ranks, std::size_t na, double u_obs)
{
    const std::size_t n = ranks.size();
    const double offset = static_cast<double>(na) * static_cast<double>(na + 1) / 2.0;
    std::vector<std::size_t> pick(na);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    std::size_t total = 0, le = 0, ge = 0;
    constexpr double kTol = 1e-9;
    while (true) {
        double rsum = 0.0;
        for (std::size_t k : pick)
            rsum += ranks[k];
        const double u = rsum - offset;
        ++total;
        le += u <= u_obs + kTol;
        ge += u >= u_obs - kTol;
        // Next combination in lexicographic order.
        std::size_t k = na;
        while (k > 0 && pick[k - 1] == n - na + (k - 1))
            --k;
        if (k == 0)
            break;
        ++pick[k - 1];
        for (std::size_t m = k; m < na; ++m)
            pick[m] = pick[m - 1] + 1;
    }
    const double tail = static_cast<double>(std::min(le, ge)) / static_cast<double>(total);
    return std::min(1.0, 2.0 * tail);
}

double normal_p(std::span<const double> pooled, std::size_t na, std::size_t nb, double u)
{
    const double n1 = static_cast<double>(na), n2 = static_cast<double>(nb);
    const double n = n1 + n2;
    std::map<double, std::size_t> counts;
    for (double v : pooled)
        ++counts[v];
    double tie = 0.0;
    for (const auto& [v, t] : counts) {
        const double td = static_cast<double>(t);
        tie += td * td * td - td;
    }
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie / (n * (n - 1.0)));
    if (!(var > 0.0))
        return 1.0;
    const double mu = n1 * n2 / 2.0;
    const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b, PValueMethod method)
{
    if (a.empty() || b.empty())
        throw ParameterError("mann_whitney_u: both samples must be nonempty");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    for (double v : pooled)
        if (!std::isfinite(v))
            throw ParameterError("mann_whitney_u: samples must be finite");
    const auto ranks = midranks(pooled);
    double ra = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        ra += ranks[i];
    MannWhitneyResult r;
    r.u = ra - static_cast<double>(a.size()) * static_cast<double>(a.size() + 1) / 2.0;

    const bool ties = std::set<double>(pooled.begin(), pooled.end()).size() != pooled.size();
    bool use_exact = method == PValueMethod::Exact;
    if (method == PValueMethod::Auto)
        use_exact = pooled.size() <= kExactMannWhitneyLimit && !ties;
    if (use_exact) {
        r.exact = true;
        r.p_two_sided = exact_p(ranks, a.size(), r.u);
    } else {
        r.p_two_sided = normal_p(pooled, a.size(), b.size(), r.u);
    }
    return r;
}

std::vector<CategorySummary> aggregate_category(const std::vector<MetricRecord>& records)
{
    using GroupKey = std::tuple<std::string, int, std::string, std::string>;
    // group -> scan -> (sum, count)
    std::map<GroupKey, std::map<std::string, std::pair<double, std::size_t>>> groups;
    for (const auto& r : records) {
        auto& cell = groups[{r.method, r.views, r.category, r.metric}][r.scan_id];
        cell.first += r.value;
        ++cell.second;
    }
    std::vector<CategorySummary> out;
    out.reserve(groups.size());
    for (const auto& [key, scans] : groups) {
        CategorySummary s;
        std::tie(s.method, s.views, s.category, s.metric) = key;
        std::vector<double> values;
        for (const auto& [scan, acc] : scans) {
            const double mean = acc.first / static_cast<double>(acc.second);
            s.per_scan.emplace_back(scan, mean);
            values.push_back(mean);
        }
        s.n = values.size();
        s.q = median_iqr(values);
        out.push_back(std::move(s));
    }
    return out;
}

std::string format_value(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string records_csv_header() { return "scan_id,method,views,structure,category,metric,value"; }

void write_records_csv(const std::vector<MetricRecord>& records, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << records_csv_header() << '\n';
    for (const auto& r : records)
        out << r.scan_id << ',' << r.method << ',' << r.views << ',' << r.structure << ',' << r.category << ','
            << r.metric << ',' << format_value(r.value) << '\n';
    if (!out)
        throw IoError("failed writing " + path.string());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_value(const std::string& s, const std::string& where)
{
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw FormatError(where + ": bad numeric value '" + s + "'");
    return v;
}

}  // namespace

std::vector<MetricRecord> read_records_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw FormatError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != records_csv_header())
        throw FormatError(path.string() + ": unexpected header '" + line + "'");
    std::vector<MetricRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        const auto f = split_csv_line(line);
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (f.size() != 7)
            throw FormatError(where + ": expected 7 fields, got " + std::to_string(f.size()));
        MetricRecord r;
        r.scan_id = f[0];
        r.method = f[1];
        int views = 0;
        const auto vr = std::from_chars(f[2].data(), f[2].data() + f[2].size(), views);
        if (vr.ec != std::errc() || vr.ptr != f[2].data() + f[2].size())
            throw FormatError(where + ": bad view count '" + f[2] + "'");
        r.views = views;
        r.structure = f[3];
        r.category = f[4];
        r.metric = f[5];
        r.value = parse_value(f[6], where);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SummaryColumn> table_columns()
{
    return {
        {"SSIM", kVolumeScope, "ssim"},
        {"PSNR", kVolumeScope, "psnr"},
        {"NSD_large", "LargeOrgan", "nsd"},
        {"NSD_small", "SmallOrgan", "nsd"},
        {"clDice_intestine", "Intestine", "cldice"},
        {"clDice_vessel", "Vessel", "cldice"},
    };
}

std::string format_cell(const Quartiles& q)
{
    auto f = [](double v) {
        if (std::isinf(v))
            return std::string(v > 0 ? "inf" : "-inf");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    return f(q.median) + " (" + f(q.q1) + "," + f(q.q3) + ")";
}

SummaryTable summary_table(const std::vector<CategorySummary>& summaries,
                           const std::optional<std::pair<std::string, std::string>>& compare)
{
    const auto columns = table_columns();
    std::map<std::tuple<std::string, int, std::string, std::string>, const CategorySummary*> index;
    std::set<std::pair<std::string, int>> rows;
    std::size_t max_scans = 0;
    for (const auto& s : summaries) {
        index[{s.method, s.views, s.category, s.metric}] = &s;
        rows.insert({s.method, s.views});
        max_scans = std::max(max_scans, s.n);
    }

    SummaryTable table;
    const bool significance = compare.has_value() && max_scans >= 2;
    if (compare && !significance)
        table.warnings.push_back("fewer than 2 scans; significance omitted");

    std::ostringstream out;
    out << "method,views,n_scans";
    for (const auto& c : columns)
        out << ',' << c.title;
    if (compare)
        for (const auto& c : columns)
            out << ",p_" << c.title;
    out << '\n';

    for (const auto& [method, views] : rows) {
        std::size_t n = 0;
        for (const auto& c : columns)
            if (auto it = index.find({method, views, c.category, c.metric}); it != index.end())
                n = std::max(n, it->second->n);
        out << method << ',' << views << ',' << n;
        for (const auto& c : columns) {
            auto it = index.find({method, views, c.category, c.metric});
            out << ',' << (it == index.end() ? std::string("-") : format_cell(it->second->q));
        }
        if (compare) {
            for (const auto& c : columns) {
                out << ',';
                if (!significance || method != compare->second)
                    continue;
                auto mine = index.find({method, views, c.category, c.metric});
                auto base = index.find({compare->first, views, c.category, c.metric});
                if (mine == index.end() || base == index.end())
                    continue;
                std::vector<double> a, b;
                for (const auto& [scan, v] : base->second->per_scan)
                    a.push_back(v);
                for (const auto& [scan, v] : mine->second->per_scan)
                    b.push_back(v);
                bool finite = true;
                for (double v : a)
                    finite = finite && std::isfinite(v);
                for (double v : b)
                    finite = finite && std::isfinite(v);
                if (!finite)
                    continue;
                const auto mw = mann_whitney_u(a, b);
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.4g", mw.p_two_sided);
                out << buf << (mw.p_two_sided < 0.05 ? "*" : "");
            }
        }
        out << '\n';
    }
    table.csv = out.str();
    return table;
}

}  // namespace sparsect
