#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pucci/experiments.hpp"

namespace pucci {

/// Closed-form function given in a config file.
///   constant      value
///   affine        value + gradient·x
///   square_norm   |x − center|²
///   cos_x1        cos(frequency x1)
///   sin_x1        sin(frequency x1)
///   log_radius    log(|x − center| / inner) / log(outer / inner)
///   radial_power  (|x − center|^exponent − inner^exponent) / (outer^exponent − inner^exponent)
struct FunctionSpec {
    std::string kind = "constant";
    double value = 0.0;
    Point gradient{};
    Point center{};
    double inner = 0.25;
    double outer = 1.0;
    double exponent = 1.0;
    double frequency = 1.0;

    PointFunction function() const;
    /// Throws ConfigError(path) for kinds without closed-form derivatives.
    AnalyticField analytic(const std::string& path) const;
};

enum class Command { Generate, Solve, Experiment };

Command parse_command(const std::string& name);
std::string command_name(Command c);

/// The names accepted by experiment.name.
const std::vector<std::string>& experiment_names();

struct ExperimentConfig {
    std::string name;
    std::vector<double> eps;                  ///< concentration, expansion
    std::optional<std::size_t> n;             ///< concentration cloud size
    std::optional<int> points;                ///< sample grid points per axis
    std::optional<double> delta_exponent;     ///< d2n, converge
    std::optional<FunctionSpec> u;            ///< d2n, holder, boundary: skip the solve
    std::optional<Point> center;              ///< holder
    std::optional<double> radius;             ///< holder
    std::vector<double> gammas;               ///< holder
    std::size_t max_vertices = 20000;         ///< holder
    std::vector<std::pair<std::size_t, double>> levels;  ///< converge
    double a = 0.5;                           ///< converge
    double grid_margin = 0.05;                ///< converge
    std::optional<FunctionSpec> reference;    ///< converge (default problem.g)
    std::vector<double> deltas;               ///< boundary
    FunctionSpec field;                       ///< expansion
    Point x{};                                ///< expansion
    Sign sign = Sign::Max;                    ///< expansion
    BarrierExperiment barrier;                ///< barrier (dim, r, R, sigma_factor, samples, A, B)
    std::optional<double> min_slope;          ///< concentration, expansion
    std::optional<double> max_violation;      ///< d2n
    std::optional<double> q_bound;            ///< holder
    double q_gamma = 0.3;                     ///< holder
    std::optional<double> max_final_error;    ///< converge
};

struct RunConfig {
    std::optional<Command> command;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string output = "out";

    Domain domain = Domain::box(1, {0, 0, 0}, {1, 0, 0});
    Density density = Density::uniform(Domain::box(1, {0, 0, 0}, {1, 0, 0}));
    std::size_t n = 1000;

    std::optional<double> partition_delta;
    TransportOptions partition;

    std::string operator_type = "pucci_max";
    OperatorParams params;
    double p = 2.0;

    std::optional<FunctionSpec> f;
    std::optional<FunctionSpec> g;
    double strip_width = 0.0;
    double tolerance = 1e-6;
    std::size_t max_iterations = 100000;
    SweepOrder order = SweepOrder::Jacobi;

    std::optional<ExperimentConfig> experiment;

    /// The input document with the effective seed; output and threads are
    /// left out so the hash does not depend on them.
    nlohmann::json canonical;

    /// Operator for the given ε (the configured one when eps <= 0).
    OperatorSpec op(double eps = 0.0) const;
    /// Problem for the given ε. Throws ConfigError when problem.g is missing.
    ProblemSpec problem(double eps = 0.0) const;
    std::string hash() const;
    void set_seed(std::uint64_t s);
};

/// Validates every key (unknown keys are rejected) and builds the config.
/// Errors are ConfigError carrying the dotted key path.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

/// One line per accepted key: path, type and a short description.
std::string config_keys_help();
/// JSON-Schema (draft 2020-12) document for the config format.
nlohmann::json config_schema();

inline constexpr const char* kConfigSchemaVersion = "1.0.0";

}  // namespace pucci
