#pragma once

#include "mlab/deconv.hpp"
#include "mlab/harness.hpp"
#include "mlab/lecam.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>

namespace mlab::report {

using harness::RateFit;
using harness::RiskTable;

// Long format `n,rep,loss,runtime_ms`, one row per replication, %.17g.
void write_risk_csv(std::ostream& os, const RiskTable& table);
RiskTable read_risk_csv(std::istream& is);

// `n,count,median,mean,q25,q75`.
void write_summary_csv(std::ostream& os, const RiskTable& table);

nlohmann::json summary_json(const RiskTable& table, const harness::ExperimentConfig& cfg,
                            const std::optional<RateFit>& fit);
nlohmann::json to_json(const RateFit& fit);
nlohmann::json to_json(const lecam::DivergenceReport& r);
nlohmann::json to_json(const deconv::Calibration& c);

// Grid nodes and values: `y1..yD,value`.
void write_field_csv(std::ostream& os, const deconv::DensityField& field);
void write_points_csv(std::ostream& os, const PointCloud& cloud);
PointCloud read_points_csv(std::istream& is);

// Writes every non-empty output path of cfg; throws std::runtime_error on an unwritable path.
void emit_reports(const RiskTable& table, const harness::ExperimentConfig& cfg, const std::optional<RateFit>& fit);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace mlab::report
