#include "pucci/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pucci/io.hpp"

namespace pucci {

using nlohmann::json;

namespace {

struct Key {
    const char* path;
    const char* type;  // string integer number boolean number[] point level[] function
    const char* help;
    std::vector<std::string> experiments = {};  // empty: not experiment-specific
    std::vector<std::string> choices = {};
};

const std::vector<std::string> kBlocks{"domain", "density", "cloud", "partition",
                                       "operator", "problem", "experiment"};

const std::vector<Key>& keys() {
    static const std::vector<Key> k{
        {"command", "string", "generate | solve | experiment; must match the subcommand if given", {},
         {"generate", "solve", "experiment"}},
        {"seed", "integer", "base seed (default 0)"},
        {"threads", "integer", "worker count, 0 = one per core (default 0)"},
        {"output", "string", "output directory (default \"out\")"},

        {"domain.kind", "string", "box | ball | annulus (default box)", {}, {"box", "ball", "annulus"}},
        {"domain.dim", "integer", "dimension 1, 2 or 3 (default 1)"},
        {"domain.lo", "point", "box lower corner (default 0)"},
        {"domain.hi", "point", "box upper corner (default 1)"},
        {"domain.center", "point", "ball/annulus center (default 0)"},
        {"domain.radius", "number", "ball radius (default 1)"},
        {"domain.inner_radius", "number", "annulus inner radius (default 0.25)"},
        {"domain.outer_radius", "number", "annulus outer radius (default 1)"},

        {"density.kind", "string", "uniform | affine (default uniform)", {}, {"uniform", "affine"}},
        {"density.intercept", "number", "affine: c in c + b·x (default 1)"},
        {"density.slope", "point", "affine: b in c + b·x (default 0)"},
        {"density.normalize", "boolean", "affine: rescale to unit mass (default true)"},

        {"cloud.n", "integer", "number of sample points (default 1000)"},

        {"partition.delta", "number", "histogram scale; generate writes the partition when set"},
        {"partition.a", "number", "exponent a in (0,1) of the cell tolerance (default 0.5)"},
        {"partition.side_factor", "number", "grid side as a multiple of delta, 0 = automatic"},

        {"operator.type", "string", "pucci_max | pucci_min | example1 | tug_of_war (default pucci_max)", {},
         {"pucci_max", "pucci_min", "example1", "tug_of_war"}},
        {"operator.alpha", "number", "pair weight (default 0.5)"},
        {"operator.beta", "number", "mean weight, alpha + beta = 1 (default 0.5)"},
        {"operator.lambda", "number", "pair radius factor Lambda >= 1 (default 1)"},
        {"operator.tau", "number", "reflection radius factor tau >= 1 (default 1)"},
        {"operator.epsilon", "number", "scale epsilon (default 0.1)"},
        {"operator.eps_max", "number", "upper bound for epsilon (default 1)"},
        {"operator.p", "number", "tug_of_war exponent p >= 2 (default 2)"},
        {"operator.fallback", "string", "nearest | strict handling of empty reflected balls", {},
         {"nearest", "strict"}},

        {"problem.f", "function", "right-hand side (default 0)"},
        {"problem.g", "function", "boundary data on the strip (required by solve)"},
        {"problem.strip_width", "number", "strip width, <= 0 means Lambda eps + tau eps^2"},
        {"problem.tolerance", "number", "stop when the sweep change is <= tolerance eps^2 (default 1e-6)"},
        {"problem.max_iterations", "integer", "sweep cap (default 100000)"},
        {"problem.order", "string", "jacobi | gauss_seidel (default jacobi)", {}, {"jacobi", "gauss_seidel"}},

        {"experiment.name", "string", "experiment to run", {},
         {"concentration", "d2n", "holder", "converge", "boundary", "expansion", "barrier"}},
        {"experiment.eps", "number[]", "epsilon values", {"concentration", "expansion"}},
        {"experiment.n", "integer", "cloud size (default cloud.n)", {"concentration"}},
        {"experiment.points", "integer", "sample lattice points per axis", {"concentration", "d2n", "converge"}},
        {"experiment.delta_exponent", "number", "partition scale delta = eps^k", {"d2n", "converge"}},
        {"experiment.u", "function", "graph function to analyse instead of a solve", {"d2n", "holder", "boundary"}},
        {"experiment.center", "point", "region center (default domain center)", {"holder"}},
        {"experiment.radius", "number", "region radius (default domain diameter)", {"holder"}},
        {"experiment.gammas", "number[]", "exponent grid (default 0.1..1.0)", {"holder"}},
        {"experiment.max_vertices", "integer", "subsample above this many region vertices", {"holder"}},
        {"experiment.levels", "level[]", "[[n, eps], ...] with eps decreasing", {"converge"}},
        {"experiment.a", "number", "compatibility exponent parameter (default 0.5)", {"converge"}},
        {"experiment.grid_margin", "number", "evaluation grid distance from the boundary", {"converge"}},
        {"experiment.reference", "function", "exact solution (default problem.g)", {"converge"}},
        {"experiment.deltas", "number[]", "distances to the boundary", {"boundary"}},
        {"experiment.field", "function", "test function with closed-form derivatives", {"expansion"}},
        {"experiment.x", "point", "evaluation point", {"expansion"}},
        {"experiment.sign", "string", "max | min (default max)", {"expansion"}, {"max", "min"}},
        {"experiment.dim", "integer", "dimension (default 1)", {"barrier"}},
        {"experiment.r", "number", "inner shell radius (default 0.25)", {"barrier"}},
        {"experiment.R", "number", "outer shell radius (default 2.5)", {"barrier"}},
        {"experiment.sigma_factor", "number", "sigma as a multiple of sigma0 (default 2)", {"barrier"}},
        {"experiment.samples", "integer", "sample points (default 200)", {"barrier"}},
        {"experiment.A", "number", "barrier scale A > 0 (default 1)", {"barrier"}},
        {"experiment.B", "number", "barrier offset B (default 0)", {"barrier"}},
        {"experiment.min_slope", "number", "pass threshold on the fitted slope",
         {"concentration", "expansion"}},
        {"experiment.max_violation", "number", "pass threshold on the normalized violation", {"d2n"}},
        {"experiment.q_bound", "number", "pass threshold on Q(q_gamma)", {"holder"}},
        {"experiment.q_gamma", "number", "exponent for q_bound (default 0.3)", {"holder"}},
        {"experiment.max_final_error", "number", "pass threshold on the last level error", {"converge"}},
    };
    return k;
}

const std::vector<Key>& function_keys() {
    static const std::vector<Key> k{
        {"kind", "string", "constant | affine | square_norm | cos_x1 | sin_x1 | log_radius | radial_power", {},
         {"constant", "affine", "square_norm", "cos_x1", "sin_x1", "log_radius", "radial_power"}},
        {"value", "number", "constant / affine offset"},
        {"gradient", "point", "affine gradient"},
        {"center", "point", "square_norm, log_radius, radial_power center"},
        {"inner", "number", "log_radius, radial_power: radius mapped to 0"},
        {"outer", "number", "log_radius, radial_power: radius mapped to 1"},
        {"exponent", "number", "radial_power exponent"},
        {"frequency", "number", "cos_x1, sin_x1 frequency"},
    };
    return k;
}

const Key* find_key(const std::vector<Key>& table, const std::string& path) {
    for (const Key& k : table)
        if (path == k.path) return &k;
    return nullptr;
}

// Typed readers ----------------------------------------------------------------

double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
    return v;
}

std::int64_t integer(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) {
        const auto v = j.get<std::uint64_t>();
        if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
            throw ConfigError(path, "integer out of range");
        return static_cast<std::int64_t>(v);
    }
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<std::int64_t>();
}

std::size_t count(const json& j, const std::string& path) {
    const auto v = integer(j, path);
    if (v <= 0) throw ConfigError(path, "must be positive");
    return static_cast<std::size_t>(v);
}

std::string string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    const std::string s = j.get<std::string>();
    const Key* k = find_key(keys(), path);
    if (k && !k->choices.empty() && std::find(k->choices.begin(), k->choices.end(), s) == k->choices.end()) {
        std::string all;
        for (const auto& c : k->choices) all += (all.empty() ? "" : ", ") + c;
        throw ConfigError(path, "unknown value \"" + s + "\" (expected one of " + all + ")");
    }
    return s;
}

std::vector<double> numbers(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return v;
}

Point point(const json& j, const std::string& path, int dim) {
    const auto v = numbers(j, path);
    if (static_cast<int>(v.size()) != dim)
        throw ConfigError(path, "expected " + std::to_string(dim) + " coordinates, got " +
                                    std::to_string(v.size()));
    Point p{};
    for (int k = 0; k < dim; ++k) p[k] = v[k];
    return p;
}

// Structure check ----------------------------------------------------------------

void check_function_keys(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!find_key(function_keys(), key)) throw ConfigError(path + "." + key, "unknown key");
    }
}

void check_structure(const json& doc) {
    if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
    std::string experiment;
    if (doc.contains("experiment") && doc["experiment"].is_object() && doc["experiment"].contains("name"))
        experiment = string(doc["experiment"]["name"], "experiment.name");
    for (const auto& [top, value] : doc.items()) {
        if (std::find(kBlocks.begin(), kBlocks.end(), top) != kBlocks.end()) {
            if (!value.is_object()) throw ConfigError(top, "expected an object");
            for (const auto& [sub, v] : value.items()) {
                const std::string path = top + "." + sub;
                const Key* k = find_key(keys(), path);
                if (!k) throw ConfigError(path, "unknown key");
                if (!k->experiments.empty() &&
                    std::find(k->experiments.begin(), k->experiments.end(), experiment) ==
                        k->experiments.end())
                    throw ConfigError(path, "not used by experiment \"" + experiment + "\"");
                if (std::string(k->type) == "function") check_function_keys(v, path);
            }
        } else if (!find_key(keys(), top)) {
            throw ConfigError(top, "unknown key");
        }
    }
    if (doc.contains("experiment") && experiment.empty())
        throw ConfigError("experiment.name", "required");
}

FunctionSpec parse_function(const json& j, const std::string& path, int dim) {
    FunctionSpec f;
    if (j.contains("kind")) {
        if (!j["kind"].is_string()) throw ConfigError(path + ".kind", "expected a string");
        f.kind = j["kind"].get<std::string>();
        const auto& choices = function_keys()[0].choices;
        if (std::find(choices.begin(), choices.end(), f.kind) == choices.end())
            throw ConfigError(path + ".kind", "unknown function kind \"" + f.kind + "\"");
    }
    if (j.contains("value")) f.value = number(j["value"], path + ".value");
    if (j.contains("gradient")) f.gradient = point(j["gradient"], path + ".gradient", dim);
    if (j.contains("center")) f.center = point(j["center"], path + ".center", dim);
    if (j.contains("inner")) f.inner = number(j["inner"], path + ".inner");
    if (j.contains("outer")) f.outer = number(j["outer"], path + ".outer");
    if (j.contains("exponent")) f.exponent = number(j["exponent"], path + ".exponent");
    if (j.contains("frequency")) f.frequency = number(j["frequency"], path + ".frequency");
    if (f.kind == "log_radius" || f.kind == "radial_power") {
        if (!(f.inner > 0.0 && f.outer > f.inner))
            throw ConfigError(path + ".outer", "need 0 < inner < outer");
        if (f.kind == "radial_power" && f.exponent == 0.0)
            throw ConfigError(path + ".exponent", "must be nonzero");
    }
    return f;
}

Domain parse_domain(const json& j) {
    const std::string kind = j.contains("kind") ? string(j["kind"], "domain.kind") : "box";
    const int dim = j.contains("dim") ? static_cast<int>(integer(j["dim"], "domain.dim")) : 1;
    if (dim < 1 || dim > kMaxDim) throw ConfigError("domain.dim", "dimension must be 1, 2 or 3");
    auto need_none = [&](std::initializer_list<const char*> names) {
        for (const char* n : names)
            if (j.contains(n)) throw ConfigError(std::string("domain.") + n, "not used by a " + kind + " domain");
    };
    if (kind == "box") {
        need_none({"center", "radius", "inner_radius", "outer_radius"});
        Point lo{}, hi{};
        for (int k = 0; k < dim; ++k) hi[k] = 1.0;
        if (j.contains("lo")) lo = point(j["lo"], "domain.lo", dim);
        if (j.contains("hi")) hi = point(j["hi"], "domain.hi", dim);
        return Domain::box(dim, lo, hi);
    }
    const Point c = j.contains("center") ? point(j["center"], "domain.center", dim) : Point{};
    if (kind == "ball") {
        need_none({"lo", "hi", "inner_radius", "outer_radius"});
        return Domain::ball(dim, c, j.contains("radius") ? number(j["radius"], "domain.radius") : 1.0);
    }
    need_none({"lo", "hi", "radius"});
    return Domain::annulus(
        dim, c, j.contains("inner_radius") ? number(j["inner_radius"], "domain.inner_radius") : 0.25,
        j.contains("outer_radius") ? number(j["outer_radius"], "domain.outer_radius") : 1.0);
}

Density parse_density(const json& j, const Domain& d) {
    const std::string kind = j.contains("kind") ? string(j["kind"], "density.kind") : "uniform";
    if (kind == "uniform") {
        for (const char* n : {"intercept", "slope", "normalize"})
            if (j.contains(n)) throw ConfigError(std::string("density.") + n, "not used by a uniform density");
        return Density::uniform(d);
    }
    const double c = j.contains("intercept") ? number(j["intercept"], "density.intercept") : 1.0;
    const Point b = j.contains("slope") ? point(j["slope"], "density.slope", d.dim()) : Point{};
    bool normalize = true;
    if (j.contains("normalize")) {
        if (!j["normalize"].is_boolean()) throw ConfigError("density.normalize", "expected a boolean");
        normalize = j["normalize"].get<bool>();
    }
    Density den = Density::affine(d, c, b, normalize);
    den.validate();
    return den;
}

void parse_experiment(const json& j, RunConfig& cfg) {
    ExperimentConfig e;
    const int dim = cfg.domain.dim();
    auto has = [&](const char* k) { return j.contains(k); };
    auto path = [](const char* k) { return std::string("experiment.") + k; };
    e.name = string(j["name"], "experiment.name");
    if (has("eps")) {
        e.eps = numbers(j["eps"], path("eps"));
        for (double v : e.eps)
            if (!(v > 0.0)) throw ConfigError(path("eps"), "values must be positive");
    }
    if (has("n")) e.n = count(j["n"], path("n"));
    if (has("points")) e.points = static_cast<int>(count(j["points"], path("points")));
    if (has("delta_exponent")) {
        e.delta_exponent = number(j["delta_exponent"], path("delta_exponent"));
        if (!(*e.delta_exponent >= 1.0)) throw ConfigError(path("delta_exponent"), "must be >= 1");
    }
    if (has("u")) e.u = parse_function(j["u"], path("u"), dim);
    if (has("center")) e.center = point(j["center"], path("center"), dim);
    if (has("radius")) {
        e.radius = number(j["radius"], path("radius"));
        if (!(*e.radius > 0.0)) throw ConfigError(path("radius"), "must be positive");
    }
    if (has("gammas")) {
        e.gammas = numbers(j["gammas"], path("gammas"));
        for (double g : e.gammas)
            if (!(g > 0.0 && g <= 1.0)) throw ConfigError(path("gammas"), "values must lie in (0,1]");
    }
    if (has("max_vertices")) e.max_vertices = count(j["max_vertices"], path("max_vertices"));
    if (has("levels")) {
        const json& l = j["levels"];
        if (!l.is_array() || l.empty()) throw ConfigError(path("levels"), "expected [[n, eps], ...]");
        for (std::size_t i = 0; i < l.size(); ++i) {
            const std::string p = path("levels") + "[" + std::to_string(i) + "]";
            if (!l[i].is_array() || l[i].size() != 2) throw ConfigError(p, "expected [n, eps]");
            e.levels.emplace_back(count(l[i][0], p + "[0]"), number(l[i][1], p + "[1]"));
        }
    }
    if (has("a")) e.a = number(j["a"], path("a"));
    if (has("grid_margin")) e.grid_margin = number(j["grid_margin"], path("grid_margin"));
    if (has("reference")) e.reference = parse_function(j["reference"], path("reference"), dim);
    if (has("deltas")) {
        e.deltas = numbers(j["deltas"], path("deltas"));
        for (double v : e.deltas)
            if (!(v > 0.0)) throw ConfigError(path("deltas"), "values must be positive");
    }
    if (has("field")) e.field = parse_function(j["field"], path("field"), dim);
    if (has("x")) e.x = point(j["x"], path("x"), dim);
    if (has("sign")) e.sign = string(j["sign"], path("sign")) == "min" ? Sign::Min : Sign::Max;
    BarrierExperiment& b = e.barrier;
    if (has("dim")) {
        b.dim = static_cast<int>(integer(j["dim"], path("dim")));
        if (b.dim < 1 || b.dim > kMaxDim) throw ConfigError(path("dim"), "dimension must be 1, 2 or 3");
    }
    if (has("r")) b.r = number(j["r"], path("r"));
    if (has("R")) b.R = number(j["R"], path("R"));
    if (has("sigma_factor")) b.sigma_factor = number(j["sigma_factor"], path("sigma_factor"));
    if (has("samples")) b.samples = count(j["samples"], path("samples"));
    if (has("A")) b.A = number(j["A"], path("A"));
    if (has("B")) b.B = number(j["B"], path("B"));
    if (e.name == "barrier") {
        if (!(b.r > 0.0 && b.R > b.r)) throw ConfigError(path("R"), "need 0 < r < R");
        if (!(b.sigma_factor > 0.0)) throw ConfigError(path("sigma_factor"), "must be positive");
        if (!(b.A > 0.0)) throw ConfigError(path("A"), "must be positive");
        b.epsilon = cfg.params.epsilon;
    }
    if (has("min_slope")) e.min_slope = number(j["min_slope"], path("min_slope"));
    if (has("max_violation")) e.max_violation = number(j["max_violation"], path("max_violation"));
    if (has("q_bound")) e.q_bound = number(j["q_bound"], path("q_bound"));
    if (has("q_gamma")) e.q_gamma = number(j["q_gamma"], path("q_gamma"));
    if (has("max_final_error")) e.max_final_error = number(j["max_final_error"], path("max_final_error"));

    if (e.name == "expansion" && !has("field"))
        throw ConfigError(path("field"), "required by the expansion experiment");
    if (e.name == "expansion") (void)e.field.analytic(path("field"));
    if (e.name == "converge") {
        if (e.levels.empty()) throw ConfigError(path("levels"), "required by the converge experiment");
        ConvergenceLadder L;
        L.levels = e.levels;
        L.a = e.a;
        L.grid_margin = e.grid_margin;
        L.validate();
    }
    cfg.experiment = std::move(e);
}

}  // namespace

// FunctionSpec -------------------------------------------------------------------

PointFunction FunctionSpec::function() const {
    const FunctionSpec s = *this;
    if (s.kind == "constant") return [c = s.value](const Point&) { return c; };
    if (s.kind == "affine")
        return [c = s.value, a = s.gradient](const Point& x) { return c + dot(a, x); };
    if (s.kind == "square_norm") return [c = s.center](const Point& x) { return dist2(x, c); };
    if (s.kind == "cos_x1") return [k = s.frequency](const Point& x) { return std::cos(k * x[0]); };
    if (s.kind == "sin_x1") return [k = s.frequency](const Point& x) { return std::sin(k * x[0]); };
    if (s.kind == "log_radius")
        return [s](const Point& x) {
            return std::log(norm(x - s.center) / s.inner) / std::log(s.outer / s.inner);
        };
    if (s.kind == "radial_power") {
        const double lo = std::pow(s.inner, s.exponent), hi = std::pow(s.outer, s.exponent);
        return [s, lo, hi](const Point& x) {
            return (std::pow(norm(x - s.center), s.exponent) - lo) / (hi - lo);
        };
    }
    throw ConfigError("kind", "unknown function kind \"" + s.kind + "\"");
}

AnalyticField FunctionSpec::analytic(const std::string& path) const {
    if (kind == "constant") return AnalyticField::constant(value);
    if (kind == "affine") return AnalyticField::affine(value, gradient);
    if (kind == "square_norm") return AnalyticField::square_norm(center);
    if (kind == "cos_x1") return AnalyticField::cos_x1(frequency);
    throw ConfigError(path + ".kind", "\"" + kind +
                                          "\" has no closed-form derivatives (use constant, affine, "
                                          "square_norm or cos_x1)");
}

Command parse_command(const std::string& name) {
    if (name == "generate") return Command::Generate;
    if (name == "solve") return Command::Solve;
    if (name == "experiment") return Command::Experiment;
    throw ConfigError("command", "unknown command \"" + name + "\"");
}

std::string command_name(Command c) {
    switch (c) {
        case Command::Generate: return "generate";
        case Command::Solve: return "solve";
        case Command::Experiment: return "experiment";
    }
    return "?";
}

const std::vector<std::string>& experiment_names() {
    return find_key(keys(), "experiment.name")->choices;
}

// RunConfig --------------------------------------------------------------------

OperatorSpec RunConfig::op(double eps) const {
    OperatorParams prm = params;
    if (eps > 0.0) prm.epsilon = eps;
    if (operator_type == "tug_of_war")
        return OperatorSpec::tug_of_war(p, prm.epsilon, domain.dim(), prm.fallback);
    if (operator_type == "example1") return OperatorSpec::example1(prm);
    return OperatorSpec::pucci(operator_type == "pucci_min" ? Sign::Min : Sign::Max, prm);
}

ProblemSpec RunConfig::problem(double eps) const {
    if (!g) throw ConfigError("problem.g", "boundary data required");
    ProblemSpec ps;
    ps.op = op(eps);
    if (f) ps.f = f->function();
    ps.g = g->function();
    ps.strip_width = strip_width;
    ps.tolerance = tolerance;
    ps.max_iterations = max_iterations;
    ps.order = order;
    return ps;
}

std::string RunConfig::hash() const { return hex64(fnv1a64(canonical.dump())); }

void RunConfig::set_seed(std::uint64_t s) {
    seed = s;
    canonical["seed"] = s;
}

RunConfig parse_config(const json& doc) {
    check_structure(doc);
    RunConfig cfg;
    auto block = [&](const char* name) -> json {
        return doc.contains(name) ? doc[name] : json::object();
    };
    if (doc.contains("command")) cfg.command = parse_command(string(doc["command"], "command"));
    if (doc.contains("seed")) {
        const auto s = integer(doc["seed"], "seed");
        if (s < 0) throw ConfigError("seed", "must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (doc.contains("threads")) {
        cfg.threads = static_cast<int>(integer(doc["threads"], "threads"));
        if (cfg.threads < 0) throw ConfigError("threads", "must be non-negative");
    }
    if (doc.contains("output")) cfg.output = string(doc["output"], "output");

    cfg.domain = parse_domain(block("domain"));
    cfg.density = parse_density(block("density"), cfg.domain);
    const json cloud = block("cloud");
    if (cloud.contains("n")) cfg.n = count(cloud["n"], "cloud.n");

    const json part = block("partition");
    if (part.contains("delta")) {
        cfg.partition_delta = number(part["delta"], "partition.delta");
        if (!(*cfg.partition_delta > 0.0)) throw ConfigError("partition.delta", "must be positive");
    }
    if (part.contains("a")) {
        cfg.partition.exponent_a = number(part["a"], "partition.a");
        if (!(cfg.partition.exponent_a > 0.0 && cfg.partition.exponent_a < 1.0))
            throw ConfigError("partition.a", "must lie in (0,1)");
    }
    if (part.contains("side_factor")) cfg.partition.side_factor = number(part["side_factor"], "partition.side_factor");

    const json o = block("operator");
    if (o.contains("type")) cfg.operator_type = string(o["type"], "operator.type");
    if (o.contains("alpha")) cfg.params.alpha = number(o["alpha"], "operator.alpha");
    if (o.contains("beta")) cfg.params.beta = number(o["beta"], "operator.beta");
    if (o.contains("lambda")) cfg.params.Lambda = number(o["lambda"], "operator.lambda");
    if (o.contains("tau")) cfg.params.tau = number(o["tau"], "operator.tau");
    if (o.contains("epsilon")) cfg.params.epsilon = number(o["epsilon"], "operator.epsilon");
    if (o.contains("eps_max")) cfg.params.eps_max = number(o["eps_max"], "operator.eps_max");
    if (o.contains("p")) cfg.p = number(o["p"], "operator.p");
    if (o.contains("fallback"))
        cfg.params.fallback =
            string(o["fallback"], "operator.fallback") == "strict" ? Fallback::Strict : Fallback::NearestVertex;
    if (cfg.operator_type == "tug_of_war") {
        for (const char* k : {"alpha", "beta", "lambda", "tau"})
            if (o.contains(k)) throw ConfigError(std::string("operator.") + k, "derived from p for tug_of_war");
        TugOfWarParams{cfg.p, cfg.params.epsilon}.validate();
    } else {
        if (o.contains("p")) throw ConfigError("operator.p", "only used by tug_of_war");
        (void)cfg.params.validate();
    }

    const json pr = block("problem");
    const int dim = cfg.domain.dim();
    if (pr.contains("f")) cfg.f = parse_function(pr["f"], "problem.f", dim);
    if (pr.contains("g")) cfg.g = parse_function(pr["g"], "problem.g", dim);
    if (pr.contains("strip_width")) cfg.strip_width = number(pr["strip_width"], "problem.strip_width");
    if (pr.contains("tolerance")) {
        cfg.tolerance = number(pr["tolerance"], "problem.tolerance");
        if (!(cfg.tolerance > 0.0)) throw ConfigError("problem.tolerance", "must be positive");
    }
    if (pr.contains("max_iterations"))
        cfg.max_iterations = count(pr["max_iterations"], "problem.max_iterations");
    if (pr.contains("order"))
        cfg.order = string(pr["order"], "problem.order") == "gauss_seidel" ? SweepOrder::GaussSeidel
                                                                             : SweepOrder::Jacobi;

    if (doc.contains("experiment")) parse_experiment(doc["experiment"], cfg);

    cfg.canonical = doc;
    cfg.canonical.erase("output");
    cfg.canonical.erase("threads");
    cfg.canonical["seed"] = cfg.seed;
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError("", e.what());
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", path + ": invalid JSON: " + e.what());
    }
    return parse_config(doc);
}

// Documentation ------------------------------------------------------------------

std::string config_keys_help() {
    std::ostringstream out;
    auto line = [&](const std::string& path, const Key& k) {
        out << "  " << path;
        const std::size_t pad = path.size() < 30 ? 30 - path.size() : 1;
        out << std::string(pad, ' ') << k.type << "  " << k.help;
        if (!k.experiments.empty()) {
            out << " [";
            for (std::size_t i = 0; i < k.experiments.size(); ++i)
                out << (i ? ", " : "") << k.experiments[i];
            out << "]";
        }
        out << "\n";
    };
    out << "Config keys (JSON, unknown keys are rejected):\n";
    for (const Key& k : keys()) line(k.path, k);
    out << "Function objects (problem.f, problem.g, experiment.u, experiment.reference, "
           "experiment.field):\n";
    for (const Key& k : function_keys()) line(std::string("<function>.") + k.path, k);
    return out.str();
}

namespace {

json schema_type(const Key& k) {
    const std::string t = k.type;
    json s;
    if (t == "string") {
        s["type"] = "string";
        if (!k.choices.empty()) s["enum"] = k.choices;
    } else if (t == "integer") {
        s["type"] = "integer";
    } else if (t == "number") {
        s["type"] = "number";
    } else if (t == "boolean") {
        s["type"] = "boolean";
    } else if (t == "number[]") {
        s = {{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", 1}};
    } else if (t == "point") {
        s = {{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", 1}, {"maxItems", 3}};
    } else if (t == "level[]") {
        json pair{{"type", "array"}, {"minItems", 2}, {"maxItems", 2}};
        pair["prefixItems"] = json::array({json{{"type", "integer"}, {"minimum", 1}}, json{{"type", "number"}}});
        s = {{"type", "array"}, {"minItems", 1}};
        s["items"] = pair;
    } else if (t == "function") {
        s["$ref"] = "#/$defs/function";
    }
    s["description"] = k.help;
    return s;
}

}  // namespace

json config_schema() {
    json root{{"$schema", "https://json-schema.org/draft/2020-12/schema"},
              {"$id", std::string("pucci-config-") + kConfigSchemaVersion},
              {"title", "pucci_cli run configuration"},
              {"version", kConfigSchemaVersion},
              {"type", "object"},
              {"additionalProperties", false}};
    json props = json::object();
    for (const std::string& b : kBlocks)
        props[b] = {{"type", "object"}, {"additionalProperties", false}, {"properties", json::object()}};
    for (const Key& k : keys()) {
        const std::string path = k.path;
        const auto dot_at = path.find('.');
        if (dot_at == std::string::npos) {
            props[path] = schema_type(k);
        } else {
            props[path.substr(0, dot_at)]["properties"][path.substr(dot_at + 1)] = schema_type(k);
        }
    }
    props["experiment"]["required"] = json::array({"name"});
    root["properties"] = props;
    json fn{{"type", "object"}, {"additionalProperties", false}, {"properties", json::object()}};
    for (const Key& k : function_keys()) fn["properties"][k.path] = schema_type(k);
    root["$defs"]["function"] = fn;
    return root;
}

}  // namespace pucci
