#pragma once

#include "pcap/solver2d.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace pcap {

inline constexpr const char* kVersion = "0.1.0";

enum class Verdict { pass, fail, not_guaranteed };

std::string to_string(Verdict v);

struct MonotoneCheck {
  bool pass = true;
  /// (k - 1, k) for every drop larger than slack * (1 + max(|v[k-1]|, |v[k]|))
  std::vector<std::pair<std::size_t, std::size_t>> violations;
  double worst_drop = 0.0;  // largest v[k-1] - v[k], 0 if none
};

MonotoneCheck check_monotone(const std::vector<double>& series, double slack);

/// Column table, written as CSV with 17 significant digits.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  const std::vector<double>& row(std::size_t i) const { return rows.at(i); }
  std::vector<double> column(const std::string& name) const;
  void write_csv(std::ostream& out) const;
};

struct Check {
  std::string name;
  std::string anchor;
  nlohmann::json values;
  double threshold = 0.0;
  Verdict verdict = Verdict::pass;
};

/// Check names known to the suites and the statement each one exercises.
const std::map<std::string, std::string>& check_anchors();

struct Report {
  std::string experiment;
  std::vector<Check> checks;
  nlohmann::json environment = nlohmann::json::object();
  std::vector<Table> tables;

  /// Throws ConsistencyError for names missing from check_anchors().
  Check& add(const std::string& name, nlohmann::json values, double threshold, Verdict verdict);
  bool any_fail() const;
  nlohmann::json to_json() const;
  void write_summary(std::ostream& out) const;
};

struct ModelSpec {
  std::string id = "euclidean";  // euclidean | cone | schwarzschild | tabulated
  int n = 3;
  double parameter = 0.0;        // aperture or mass; 0 picks the default
  std::string path;              // tabulated samples
  bool nonneg_ricci = false;
};

ManifoldPtr build_model(const ModelSpec& spec);

struct ModelInfo {
  std::string id;
  std::string parameters;
  std::optional<double> r_min;  // unset when it depends on input data
  std::optional<double> avr;
};

/// Builtin models with their default parameters.
std::vector<ModelInfo> list_models();

enum class OuterDatum { imcf, scale_invariant, explicit_value };

struct DomainSpec {
  std::string shape = "spheroid";  // sphere | spheroid
  double axis = 1.3;
  double equator = 1.0;
  double R = 8.0;
  double u_R = 0.05;
};

struct ExperimentSpec {
  std::string name;
  /// series | monotonicity | p_to_1 | eps_to_0 | inequality | equality | solver2d
  std::string suite = "series";
  std::vector<ModelSpec> models{ModelSpec{}};
  std::string solver = "radial";
  double r0 = 1.0;
  double R = 20.0;
  OuterDatum outer = OuterDatum::imcf;
  double phi_R = 0.0;  // explicit outer datum
  std::vector<double> p_list{2.0};
  std::vector<double> eps_list;
  std::vector<double> alpha_list{2.0};
  double T = 0.0;  // 0: min(2, 0.8 w(R/2))
  int levels = 20;
  std::vector<std::string> functionals{"F_p"};
  std::map<std::string, double> tolerances;
  DomainSpec domain;
  std::vector<int> grids{128};

  void validate() const;
  /// Tolerance by key, falling back to the builtin default.
  double tol(const std::string& key) const;
};

/// Builtin tolerance keys and their defaults.
const std::map<std::string, double>& default_tolerances();

Report run_experiment(const ExperimentSpec& spec);

Report series_suite(const ExperimentSpec& spec);
Report monotonicity_suite(const ExperimentSpec& spec);
Report p_to_1_suite(const ExperimentSpec& spec);
Report eps_to_0_suite(const ExperimentSpec& spec);
Report inequality_suite(const ExperimentSpec& spec);
Report equality_suite(const ExperimentSpec& spec);
Report solver2d_suite(const ExperimentSpec& spec);

/// Radial p-potential with the outer datum chosen by the spec.
RadialPotential build_potential(const ExperimentSpec& spec, const ManifoldPtr& M, double p);
/// min(2, 0.8 w(R/2)) for the potential, or spec.T when set.
double level_cap(const ExperimentSpec& spec, const RadialPotential& pot);

}  // namespace pcap
