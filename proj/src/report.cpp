#include "mlab/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mlab::report {

namespace {

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& s)
{
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
        throw std::runtime_error("malformed number '" + s + "'");
    }
    return v;
}

}  // namespace

void write_risk_csv(std::ostream& os, const RiskTable& table)
{
    os << "n,rep,loss,runtime_ms\n";
    for (const auto& r : table.rows) {
        os << r.n << ',' << r.rep << ',' << num(r.loss) << ',' << num(r.runtime_ms) << '\n';
    }
}

RiskTable read_risk_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != "n,rep,loss,runtime_ms") {
        throw std::runtime_error("risk CSV: unexpected header");
    }
    RiskTable t;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split(line);
        if (f.size() != 4) {
            throw std::runtime_error("risk CSV: expected 4 fields in '" + line + "'");
        }
        t.rows.push_back({static_cast<std::size_t>(std::stoull(f[0])), static_cast<std::size_t>(std::stoull(f[1])),
                          parse_double(f[2]), parse_double(f[3])});
    }
    return t;
}

void write_summary_csv(std::ostream& os, const RiskTable& table)
{
    os << "n,count,median,mean,q25,q75\n";
    for (const auto& s : table.summary()) {
        os << s.n << ',' << s.count << ',' << num(s.median) << ',' << num(s.mean) << ',' << num(s.q25) << ','
           << num(s.q75) << '\n';
    }
}

nlohmann::json to_json(const RateFit& fit)
{
    return {{"slope", fit.slope},         {"slope_stderr", fit.slope_stderr}, {"intercept", fit.intercept},
            {"r2", fit.r2},               {"abscissa", harness::to_string(fit.abscissa)},
            {"points", fit.points}};
}

nlohmann::json summary_json(const RiskTable& table, const harness::ExperimentConfig& cfg,
                            const std::optional<RateFit>& fit)
{
    nlohmann::json j;
    j["estimator"] = harness::to_string(cfg.estimator);
    j["model"] = sampling::to_string(cfg.model.noise);
    j["manifold"] = cfg.model.manifold;
    j["reps"] = cfg.reps;
    j["seed"] = cfg.seed;
    j["rows"] = table.rows.size();
    j["empty_estimates"] = table.empty_estimates;
    nlohmann::json per_n = nlohmann::json::array();
    const auto summary = table.summary();
    for (const auto& s : summary) {
        per_n.push_back({{"n", s.n}, {"count", s.count}, {"median", s.median}, {"mean", s.mean}, {"q25", s.q25},
                         {"q75", s.q75}});
    }
    j["summary"] = per_n;
    if (fit) {
        j["fit"] = to_json(*fit);
    }
    if (cfg.model.noise == sampling::ModelTag::additive && !summary.empty()) {
        // Logarithmic reference curves anchored at the first median.
        const double l0 = std::log(static_cast<double>(summary.front().n));
        nlohmann::json ref = nlohmann::json::array();
        for (const auto& s : summary) {
            const double l = std::log(static_cast<double>(s.n));
            ref.push_back({{"n", s.n},
                           {"inv_log_n", summary.front().median * l0 / l},
                           {"inv_sqrt_log_n", summary.front().median * std::sqrt(l0 / l)}});
        }
        j["reference_curves"] = ref;
    }
    return j;
}

nlohmann::json to_json(const lecam::DivergenceReport& r)
{
    return {{"l1", r.l1},
            {"tv", r.tv},
            {"affinity", r.affinity},
            {"error", r.error},
            {"n", r.n},
            {"product_affinity_lower", r.product_affinity_lower},
            {"separation", r.separation},
            {"lecam", r.lecam}};
}

nlohmann::json to_json(const deconv::Calibration& c)
{
    return {{"c_on", c.c_on},   {"c_off", c.c_off},   {"k", c.k},           {"L", c.L},
            {"delta", c.delta}, {"D", c.D},           {"d", c.d},           {"h", c.h_list},
            {"on_min", c.on_min}, {"off_max", c.off_max}};
}

void write_field_csv(std::ostream& os, const deconv::DensityField& field)
{
    const std::size_t D = field.grid.dim();
    for (std::size_t k = 0; k < D; ++k) {
        os << 'y' << k + 1 << ',';
    }
    os << "value\n";
    std::vector<double> y(D);
    for (std::size_t i = 0; i < field.grid.size(); ++i) {
        field.grid.node(i, y);
        for (double v : y) {
            os << num(v) << ',';
        }
        os << num(field.values[i]) << '\n';
    }
}

void write_points_csv(std::ostream& os, const PointCloud& cloud)
{
    for (std::size_t k = 0; k < cloud.dim(); ++k) {
        os << (k ? "," : "") << 'y' << k + 1;
    }
    os << '\n';
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (std::size_t k = 0; k < cloud.dim(); ++k) {
            os << (k ? "," : "") << num(cloud[i][k]);
        }
        os << '\n';
    }
}

PointCloud read_points_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("point CSV: missing header");
    }
    const std::size_t D = split(line).size();
    if (D == 0 || line.rfind("y1", 0) != 0) {
        throw std::runtime_error("point CSV: header must start with y1");
    }
    PointCloud cloud(D);
    std::vector<double> p(D);
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split(line);
        if (f.size() < D) {
            throw std::runtime_error("point CSV: short row '" + line + "'");
        }
        for (std::size_t k = 0; k < D; ++k) {
            p[k] = parse_double(f[k]);
        }
        cloud.push_back(p);
    }
    return cloud;
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
}

void emit_reports(const RiskTable& table, const harness::ExperimentConfig& cfg, const std::optional<RateFit>& fit)
{
    if (!cfg.output.csv.empty()) {
        std::ostringstream os;
        write_risk_csv(os, table);
        write_text_file(cfg.output.csv, os.str());
    }
    if (!cfg.output.summary.empty()) {
        std::ostringstream os;
        write_summary_csv(os, table);
        write_text_file(cfg.output.summary, os.str());
    }
    if (!cfg.output.json.empty()) {
        write_text_file(cfg.output.json, summary_json(table, cfg, fit).dump(2) + "\n");
    }
}

}  // namespace mlab::report
