/*
 * experiment.hpp: config-driven runs of every module operation
 *
 * A config names one experiment plus the measure, probe and grid it needs.
 * run() evaluates the grid (in parallel where the points are independent),
 * then writes a CSV whose metadata lines start with '#':
 *
 *   # spectral_lab 1.0.0
 *   # experiment: scaling-degree
 *   # config_hash: fnv1a64:...
 *   lambda,value,abs_error
 *   ...
 *   # summary: degree=2.00 ...
 *
 * Nothing time- or thread-dependent goes into the file, so a config always
 * produces the same bytes. Output is written to a temporary file and renamed
 * into place; on failure nothing is left behind.
 */
#pragma once

#include "spectral_lab/errors.hpp"
#include "spectral_lab/ftscale.hpp"
#include "spectral_lab/kernel.hpp"
#include "spectral_lab/measure.hpp"
#include "spectral_lab/measure_io.hpp"
#include "spectral_lab/parallel.hpp"
#include "spectral_lab/random_measure.hpp"
#include "spectral_lab/scaling.hpp"
#include "spectral_lab/schwinger.hpp"
#include "spectral_lab/toml.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace spectral_lab {

inline constexpr std::string_view kVersion = "1.0.0";

enum class Experiment { Propagator, ScalingDegree, Classify, SchwingerEnergy, Confinement, FtScaling, Decompose, SumRule };

inline constexpr std::array<std::pair<Experiment, std::string_view>, 8> kExperimentNames{{
    {Experiment::Propagator, "propagator"},
    {Experiment::ScalingDegree, "scaling-degree"},
    {Experiment::Classify, "classify"},
    {Experiment::SchwingerEnergy, "schwinger-energy"},
    {Experiment::Confinement, "confinement"},
    {Experiment::FtScaling, "ft-scaling"},
    {Experiment::Decompose, "decompose"},
    {Experiment::SumRule, "sum-rule"},
}};

inline std::string_view to_string(Experiment e) {
    for (const auto& [k, name] : kExperimentNames)
        if (k == e)
            return name;
    return "?";
}

inline std::optional<Experiment> parse_experiment(std::string_view name) {
    for (const auto& [k, n] : kExperimentNames)
        if (n == name)
            return k;
    return std::nullopt;
}

inline std::string experiment_names() {
    std::string out;
    for (const auto& [k, n] : kExperimentNames)
        out += (out.empty() ? "" : ", ") + std::string(n);
    return out;
}

struct ProbeSpec {
    double width = 1.0;
    double amplitude = 1.0;
    std::array<double, 4> center{};
};

struct PropagatorSpec {
    std::vector<double> masses{0.1, 0.316227766016838, 1.0, 3.16227766016838, 10.0};
    std::vector<double> radii{0.1, 0.316227766016838, 1.0, 3.16227766016838, 10.0};
};

struct SchwingerSpec {
    std::vector<double> couplings{1.0};
    std::vector<double> epsilons{1.0};
    std::vector<double> R_grid = default_R_grid();
    RampShape ramp = RampShape::Linear;
};

struct ConfinementSpec {
    double coupling = 1.0;
    double epsilon = 1.0;
    std::vector<double> R_grid = default_R_grid();
    RampShape ramp = RampShape::Linear;
};

struct FtScalingSpec {
    PowerLawSpec law{};
    std::vector<double> radii = default_probe_radii();
};

struct ExperimentConfig {
    Experiment experiment = Experiment::ScalingDegree;
    std::optional<SpectralMeasure> measure;
    ProbeSpec probe;
    ScalingGridSpec grid;
    PropagatorSpec propagator;
    SchwingerSpec schwinger;
    ConfinementSpec confinement;
    FtScalingSpec ft_scaling;
    int random_measures = 0; ///< classify: > 0 sweeps the seeded random family instead
    double sum_rule_tol = kSumRuleTol;
    std::uint64_t seed = 0;
    std::string output;   ///< empty: stdout (CLI) / no file (library)
    unsigned threads = 0; ///< 0: all hardware threads
};

inline bool needs_measure(Experiment e) {
    return e == Experiment::ScalingDegree || e == Experiment::Classify || e == Experiment::Decompose ||
           e == Experiment::SumRule;
}

inline ExperimentConfig default_config(Experiment e = Experiment::ScalingDegree) {
    ExperimentConfig c;
    c.experiment = e;
    switch (e) {
    case Experiment::ScalingDegree:
        c.measure = SpectralMeasure::free_field(1.0);
        break;
    case Experiment::Classify:
        c.measure = SpectralMeasure({}, ContinuousDensity{DensityTerm::constant(1.0, 0.0, kInfinity)});
        break;
    case Experiment::Decompose:
    case Experiment::SumRule:
        c.measure = SpectralMeasure({{1.0, 0.6}}, ContinuousDensity{DensityTerm::bump(0.4, 4.0, 9.0)});
        break;
    default:
        break;
    }
    return c;
}

// ---------------------------------------------------------------------------
// reading

struct ConfigLoad {
    ExperimentConfig config;
    std::vector<std::string> diagnostics;
    bool measure_failed = false;
};

namespace detail {

class ConfigReader {
  public:
    ConfigReader(std::string source, std::filesystem::path base_dir, ConfigLoad& out)
        : source_(std::move(source)), base_(std::move(base_dir)), out_(out) {}

    void read(const toml::Table& root) {
        ExperimentConfig& c = out_.config;
        for (std::size_t i = 0; i < root.size(); ++i) {
            const std::string& key = root.keys()[i];
            const toml::Value& v = root.at(i);
            if (key == "experiment") {
                if (auto s = string(v, key)) {
                    if (auto e = parse_experiment(*s))
                        c.experiment = *e;
                    else
                        diag(v, "unknown experiment '" + *s + "' (expected one of " + experiment_names() + ")");
                }
            } else if (key == "output") {
                if (auto s = string(v, key))
                    c.output = *s;
            } else if (key == "seed") {
                if (auto n = integer(v, key, 0))
                    c.seed = static_cast<std::uint64_t>(*n);
            } else if (key == "threads") {
                if (auto n = integer(v, key, 0))
                    c.threads = static_cast<unsigned>(*n);
            } else if (key == "measure") {
                measure(v);
            } else if (key == "probe") {
                section(v, key, [&](const std::string& k, const toml::Value& x) {
                    if (k == "width")
                        assign(c.probe.width, x, k);
                    else if (k == "amplitude")
                        assign(c.probe.amplitude, x, k);
                    else if (k == "center")
                        center(x);
                    else
                        unknown(x, "probe." + k);
                });
            } else if (key == "scaling") {
                section(v, key, [&](const std::string& k, const toml::Value& x) {
                    if (k == "k_min")
                        assign_int(c.grid.k_min, x, k);
                    else if (k == "k_max")
                        assign_int(c.grid.k_max, x, k);
                    else if (k == "fit_k_min")
                        assign_int(c.grid.fit_k_min, x, k);
                    else if (k == "base")
                        assign(c.grid.base, x, k);
                    else
                        unknown(x, "scaling." + k);
                });
            } else if (key == "classify") {
                section(v, key, [&](const std::string& k, const toml::Value& x) {
                    if (k == "random_measures")
                        assign_int(c.random_measures, x, k);
                    else
                        unknown(x, "classify." + k);
                });
            } else if (key == "propagator") {
                section(v, key, [&](const std::string& k, const toml::Value& x) {
                    if (k == "masses")
                        assign_list(c.propagator.masses, x, k);
                    else if (k == "radii")
                        assign_list(c.propagator.radii, x, k);
                    else
                        unknown(x, "propagator." + k);
                });
            } else if (key == "schwinger") {
                section(v, key, [&](const std::string& k, const toml::Value& x) {
                    if (k == "couplings")
                        assign_list(c.schwinger.couplings, x, k);
                    else if (k == "epsilons")
                        assign_list(c.schwinger.epsilons, x, k);
                    else if (k == "R_grid")
                        assign_list(c.schwinger.R_grid, x, k);
                    else if (k == "ramp")
                        ramp(c.schwinger.ramp, x);
                    else
                        unknown(x, "schwinger." + k);
                });
            } else if (key == "confinement") {
                section(v, key, [&](const std::string& k, const toml::Value& x) {
                    if (k == "coupling")
                        assign(c.confinement.coupling, x, k);
                    else if (k == "epsilon")
                        assign(c.confinement.epsilon, x, k);
                    else if (k == "R_grid")
                        assign_list(c.confinement.R_grid, x, k);
                    else if (k == "ramp")
                        ramp(c.confinement.ramp, x);
                    else
                        unknown(x, "confinement." + k);
                });
            } else if (key == "ft_scaling") {
                bool order_given = false;
                section(v, key, [&](const std::string& k, const toml::Value& x) {
                    auto& law = c.ft_scaling.law;
                    if (k == "pl_exponent") {
                        assign(law.pl_exponent, x, k);
                    } else if (k == "space_dim") {
                        assign_int(law.space_dim, x, k);
                    } else if (k == "regularization_order") {
                        order_given = assign_int(law.regularization_order, x, k);
                    } else if (k == "relative_width") {
                        assign(law.relative_width, x, k);
                    } else if (k == "radii") {
                        assign_list(c.ft_scaling.radii, x, k);
                    } else if (k == "shell") {
                        if (auto s = string(x, k)) {
                            if (*s == "gaussian")
                                law.shell = ShellKind::Gaussian;
                            else if (*s == "bump")
                                law.shell = ShellKind::Bump;
                            else
                                diag(x, "ft_scaling.shell must be \"gaussian\" or \"bump\"");
                        }
                    } else {
                        unknown(x, "ft_scaling." + k);
                    }
                });
                if (!order_given)
                    c.ft_scaling.law.regularization_order = minimum_regularization_order(
                        c.ft_scaling.law.pl_exponent, c.ft_scaling.law.space_dim);
            } else if (key == "sum_rule") {
                section(v, key, [&](const std::string& k, const toml::Value& x) {
                    if (k == "tol")
                        assign(c.sum_rule_tol, x, k);
                    else
                        unknown(x, "sum_rule." + k);
                });
            } else {
                unknown(v, key);
            }
        }
    }

  private:
    void diag(const toml::Value& v, const std::string& what) {
        out_.diagnostics.push_back(source_ + ":" + std::to_string(v.line) + ": " + what);
    }
    void unknown(const toml::Value& v, const std::string& key) { diag(v, "unknown key '" + key + "'"); }

    template <class Fn>
    void section(const toml::Value& v, const std::string& key, const Fn& fn) {
        if (!v.is_table()) {
            diag(v, "'" + key + "' must be a table");
            return;
        }
        const auto& t = v.table();
        for (std::size_t i = 0; i < t.size(); ++i)
            fn(t.keys()[i], t.at(i));
    }

    std::optional<std::string> string(const toml::Value& v, const std::string& key) {
        if (v.is_string())
            return v.string();
        diag(v, "'" + key + "' must be a string");
        return std::nullopt;
    }
    std::optional<std::int64_t> integer(const toml::Value& v, const std::string& key, std::int64_t min) {
        if (!v.is_integer()) {
            diag(v, "'" + key + "' must be an integer");
            return std::nullopt;
        }
        if (v.integer() < min) {
            diag(v, "'" + key + "' must be >= " + std::to_string(min));
            return std::nullopt;
        }
        return v.integer();
    }
    bool assign(double& dst, const toml::Value& v, const std::string& key) {
        if (!v.is_number()) {
            diag(v, "'" + key + "' must be a number");
            return false;
        }
        dst = v.number();
        return true;
    }
    bool assign_int(int& dst, const toml::Value& v, const std::string& key) {
        if (!v.is_integer() || v.integer() < -1000000 || v.integer() > 1000000) {
            diag(v, "'" + key + "' must be an integer");
            return false;
        }
        dst = static_cast<int>(v.integer());
        return true;
    }
    void assign_list(std::vector<double>& dst, const toml::Value& v, const std::string& key) {
        if (!v.is_array()) {
            diag(v, "'" + key + "' must be an array of numbers");
            return;
        }
        std::vector<double> out;
        for (const auto& x : v.array()) {
            if (!x.is_number()) {
                diag(v, "'" + key + "' must be an array of numbers");
                return;
            }
            out.push_back(x.number());
        }
        dst = std::move(out);
    }
    void center(const toml::Value& v) {
        std::vector<double> xs;
        assign_list(xs, v, "center");
        if (xs.size() != 4) {
            diag(v, "'center' must have 4 components (t, x, y, z)");
            return;
        }
        std::copy(xs.begin(), xs.end(), out_.config.probe.center.begin());
    }
    void ramp(RampShape& dst, const toml::Value& v) {
        if (auto s = string(v, "ramp")) {
            if (*s == "linear")
                dst = RampShape::Linear;
            else if (*s == "smoothstep")
                dst = RampShape::Smoothstep;
            else
                diag(v, "ramp must be \"linear\" or \"smoothstep\"");
        }
    }

    void measure(const toml::Value& v) {
        if (!v.is_table()) {
            diag(v, "'measure' must be a table");
            return;
        }
        const auto& t = v.table();
        try {
            if (const toml::Value* f = t.find("file")) {
                if (t.size() != 1 || !f->is_string()) {
                    diag(*f, "measure.file must be a string and the only key of [measure]");
                    out_.measure_failed = true;
                    return;
                }
                std::filesystem::path p(f->string());
                if (p.is_relative())
                    p = base_ / p;
                out_.config.measure = read_measure_file(p.string());
            } else {
                out_.config.measure = measure_from_toml(t, source_);
            }
        } catch (const IoError& e) {
            out_.diagnostics.push_back(e.what());
            out_.measure_failed = true;
        } catch (const ParseError& e) {
            out_.diagnostics.push_back(e.what());
            out_.measure_failed = true;
        } catch (const DomainError& e) {
            out_.diagnostics.push_back(e.what());
            out_.measure_failed = true;
        }
    }

    std::string source_;
    std::filesystem::path base_;
    ConfigLoad& out_;
};

} // namespace detail

/// Parses config text. Problems are returned as diagnostics, not thrown,
/// except for TOML syntax errors (ParseError).
inline ConfigLoad parse_config(std::string_view text, const std::string& source = "<config>",
                               const std::filesystem::path& base_dir = ".") {
    const toml::Table root = toml::parse(text, source);
    ConfigLoad load;
    detail::ConfigReader(source, base_dir, load).read(root);
    return load;
}

/// Reads a config file; an unreadable file raises IoError. Measure files are
/// resolved relative to the config's directory.
inline ConfigLoad load_config(const std::string& path) {
    const std::string text = toml::read_file(path);
    return parse_config(text, path, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// validation

namespace detail {

inline void check_positive_list(std::vector<std::string>& out, const std::vector<double>& xs,
                                const std::string& name, bool allow_zero) {
    if (xs.empty())
        out.push_back(name + " must not be empty");
    for (double x : xs)
        if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0)) {
            out.push_back(name + " values must be finite and " + (allow_zero ? ">= 0" : "> 0"));
            return;
        }
}

inline void check_r_grid(std::vector<std::string>& out, const std::vector<double>& R, const std::string& name) {
    if (R.size() < 5)
        out.push_back(name + " has " + std::to_string(R.size()) + " points; the confinement fit needs >= 5 points");
    for (std::size_t i = 0; i < R.size(); ++i) {
        if (!std::isfinite(R[i]) || R[i] <= 0.0) {
            out.push_back(name + " values must be finite and > 0");
            return;
        }
        if (i > 0 && !(R[i] > R[i - 1])) {
            out.push_back(name + " must be strictly ascending");
            return;
        }
    }
    if (R.size() >= 2 && R.back() < 10.0 * R.front())
        out.push_back(name + " must span >= 1 decade");
}

inline std::vector<std::string> validate_typed(const ExperimentConfig& c, bool skip_measure) {
    std::vector<std::string> out;
    if (needs_measure(c.experiment) && !c.measure && !skip_measure &&
        !(c.experiment == Experiment::Classify && c.random_measures > 0))
        out.push_back(std::string(to_string(c.experiment)) + " needs a [measure]");

    const bool uses_probe = c.experiment == Experiment::ScalingDegree || c.experiment == Experiment::Classify;
    if (uses_probe) {
        try {
            TestFunction(c.probe.width, c.probe.amplitude, c.probe.center);
        } catch (const DomainError& e) {
            out.push_back(std::string("probe: ") + e.what());
        }
        if (c.probe.amplitude == 0.0)
            out.push_back("probe: amplitude must be nonzero for a log-log fit");
        if (auto problem = check_grid_spec(c.grid); !problem.empty())
            out.push_back("scaling: " + problem);
    }
    switch (c.experiment) {
    case Experiment::Propagator:
        check_positive_list(out, c.propagator.masses, "propagator.masses", true);
        check_positive_list(out, c.propagator.radii, "propagator.radii", false);
        break;
    case Experiment::Classify:
        if (c.random_measures < 0)
            out.push_back("classify.random_measures must be >= 0");
        break;
    case Experiment::SchwingerEnergy:
        check_positive_list(out, c.schwinger.couplings, "schwinger.couplings", true);
        check_positive_list(out, c.schwinger.epsilons, "schwinger.epsilons", false);
        check_positive_list(out, c.schwinger.R_grid, "schwinger.R_grid", false);
        break;
    case Experiment::Confinement:
        if (!std::isfinite(c.confinement.coupling) || c.confinement.coupling < 0.0)
            out.push_back("confinement.coupling must be finite and >= 0");
        if (!std::isfinite(c.confinement.epsilon) || c.confinement.epsilon <= 0.0)
            out.push_back("confinement.epsilon must be finite and > 0");
        check_r_grid(out, c.confinement.R_grid, "confinement.R_grid");
        break;
    case Experiment::FtScaling: {
        if (auto problem = check_power_law_spec(c.ft_scaling.law); !problem.empty())
            out.push_back("ft_scaling: " + problem);
        const auto& r = c.ft_scaling.radii;
        if (r.size() < 6)
            out.push_back("ft_scaling.radii needs >= 6 points");
        for (std::size_t i = 0; i < r.size(); ++i)
            if (!std::isfinite(r[i]) || r[i] <= 0.0 || (i > 0 && !(r[i] > r[i - 1]))) {
                out.push_back("ft_scaling.radii must be positive and strictly ascending");
                break;
            }
        if (r.size() >= 2 && r.back() < 10.0 * r.front())
            out.push_back("ft_scaling.radii must span >= 1 decade");
        break;
    }
    case Experiment::SumRule:
        if (!(c.sum_rule_tol > 0.0))
            out.push_back("sum_rule.tol must be > 0");
        break;
    default:
        break;
    }
    return out;
}

} // namespace detail

/// All invariant violations of a typed config; empty iff run() can proceed.
inline std::vector<std::string> validate(const ExperimentConfig& c) { return detail::validate_typed(c, false); }

/// Diagnostics for a loaded config: reading problems first, then invariants.
inline std::vector<std::string> validate(const ConfigLoad& load) {
    std::vector<std::string> out = load.diagnostics;
    for (auto& d : detail::validate_typed(load.config, load.measure_failed))
        out.push_back(std::move(d));
    return out;
}

// ---------------------------------------------------------------------------
// canonical text and hashing

/// Config as TOML. Output path and thread count are left out unless asked
/// for, since they do not affect results.
inline std::string to_toml(const ExperimentConfig& c, bool include_runtime = true) {
    using toml::format_float;
    std::ostringstream os;
    auto list = [&](const std::vector<double>& xs) {
        std::string s = "[";
        for (std::size_t i = 0; i < xs.size(); ++i)
            s += (i ? ", " : "") + format_float(xs[i]);
        return s + "]";
    };
    os << "experiment = " << toml::quote(to_string(c.experiment)) << "\n";
    if (include_runtime) {
        if (!c.output.empty())
            os << "output = " << toml::quote(c.output) << "\n";
        os << "threads = " << c.threads << "\n";
    }
    os << "seed = " << c.seed << "\n";
    switch (c.experiment) {
    case Experiment::Propagator:
        os << "\n[propagator]\nmasses = " << list(c.propagator.masses) << "\nradii = " << list(c.propagator.radii)
           << "\n";
        break;
    case Experiment::ScalingDegree:
    case Experiment::Classify:
        os << "\n[probe]\nwidth = " << format_float(c.probe.width)
           << "\namplitude = " << format_float(c.probe.amplitude) << "\ncenter = "
           << list({c.probe.center.begin(), c.probe.center.end()}) << "\n";
        os << "\n[scaling]\nk_min = " << c.grid.k_min << "\nk_max = " << c.grid.k_max
           << "\nfit_k_min = " << c.grid.fit_k_min << "\nbase = " << format_float(c.grid.base) << "\n";
        if (c.experiment == Experiment::Classify)
            os << "\n[classify]\nrandom_measures = " << c.random_measures << "\n";
        break;
    case Experiment::SchwingerEnergy:
        os << "\n[schwinger]\ncouplings = " << list(c.schwinger.couplings)
           << "\nepsilons = " << list(c.schwinger.epsilons) << "\nR_grid = " << list(c.schwinger.R_grid)
           << "\nramp = " << toml::quote(to_string(c.schwinger.ramp)) << "\n";
        break;
    case Experiment::Confinement:
        os << "\n[confinement]\ncoupling = " << format_float(c.confinement.coupling)
           << "\nepsilon = " << format_float(c.confinement.epsilon) << "\nR_grid = " << list(c.confinement.R_grid)
           << "\nramp = " << toml::quote(to_string(c.confinement.ramp)) << "\n";
        break;
    case Experiment::FtScaling: {
        const auto& law = c.ft_scaling.law;
        os << "\n[ft_scaling]\npl_exponent = " << format_float(law.pl_exponent) << "\nspace_dim = " << law.space_dim
           << "\nregularization_order = " << law.regularization_order << "\nshell = " << toml::quote(to_string(law.shell))
           << "\nrelative_width = " << format_float(law.relative_width) << "\nradii = " << list(c.ft_scaling.radii)
           << "\n";
        break;
    }
    case Experiment::SumRule:
        os << "\n[sum_rule]\ntol = " << format_float(c.sum_rule_tol) << "\n";
        break;
    case Experiment::Decompose:
        break;
    }
    if (c.measure && needs_measure(c.experiment)) {
        os << "\n[measure]\n";
        const std::string m = to_toml(*c.measure, "measure.");
        if (!m.empty())
            os << "\n" << m;
    }
    return os.str();
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_toml(c, false))));
    return std::string("fnv1a64:") + buf;
}

// ---------------------------------------------------------------------------
// running

/// Worker count: the config's request (0 = hardware), capped by
/// SPECTRAL_LAB_THREADS when that is set.
inline unsigned effective_threads(unsigned requested) {
    unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SPECTRAL_LAB_THREADS")) {
        unsigned cap = 0;
        const std::string_view s(env);
        const auto res = std::from_chars(s.data(), s.data() + s.size(), cap);
        if (res.ec == std::errc() && res.ptr == s.data() + s.size() && cap > 0)
            n = std::min(n, cap);
    }
    return n;
}

struct RunRecord {
    std::string config_hash;
    std::string version{kVersion};
    std::string csv;     ///< the complete file contents
    std::string summary; ///< the text after "# summary: "
    std::size_t rows = 0;
    double wall_seconds = 0.0;
};

/// Computation failed at a specific grid point.
class RunError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string csv_num(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

inline std::string fixed(double v, int digits) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    return {buf, res.ptr};
}

inline std::string sci(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 3);
    return {buf, res.ptr};
}

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s)
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}
    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
    std::size_t rows() const { return rows_.size(); }

    std::string render() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& fields) {
            for (std::size_t i = 0; i < fields.size(); ++i)
                out += (i ? "," : "") + csv_field(fields[i]);
            out += "\r\n";
        };
        line(columns_);
        for (const auto& r : rows_)
            line(r);
        return out;
    }

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

template <class Fn>
auto at_point(const std::string& where, const Fn& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw RunError(where + ": " + e.what());
    }
}

struct Outcome {
    CsvTable table;
    std::string summary;
};

inline Outcome run_propagator(const ExperimentConfig& c, unsigned threads) {
    const auto& ms = c.propagator.masses;
    const auto& rs = c.propagator.radii;
    std::vector<Evaluation> vals(ms.size() * rs.size());
    parallel_for(vals.size(), threads, [&](std::size_t i) {
        const double m = ms[i / rs.size()];
        const double r = rs[i % rs.size()];
        vals[i] = at_point("propagator at mass=" + csv_num(m) + " r=" + csv_num(r),
                           [&] { return free_two_point_spacelike(m, r); });
    });
    CsvTable t({"mass", "r", "value", "abs_error"});
    for (std::size_t i = 0; i < vals.size(); ++i)
        t.add({csv_num(ms[i / rs.size()]), csv_num(rs[i % rs.size()]), csv_num(vals[i].value),
               csv_num(vals[i].abs_error)});
    return {std::move(t), "points=" + std::to_string(vals.size())};
}

inline TestFunction probe_of(const ExperimentConfig& c) {
    return TestFunction(c.probe.width, c.probe.amplitude, c.probe.center);
}

inline Outcome run_scaling(const ExperimentConfig& c, unsigned threads) {
    ScalingGridSpec spec = c.grid;
    spec.threads = threads;
    const TestFunction f = probe_of(c);
    const std::size_t n = spec.size();
    ScalingGrid grid;
    grid.lambdas.resize(n);
    grid.values.resize(n);
    grid.abs_errors.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const double lambda = spec.lambda(spec.k_min + static_cast<int>(i));
        const Evaluation e = at_point("scaling-degree at lambda=" + csv_num(lambda),
                                      [&] { return scaled_value(*c.measure, f, lambda); });
        grid.lambdas[i] = lambda;
        grid.values[i] = e.value;
        grid.abs_errors[i] = e.abs_error;
    });
    const ScalingFit fit = at_point("scaling-degree fit", [&] { return fit_scaling_degree(grid, spec); });
    CsvTable t({"lambda", "value", "abs_error"});
    for (std::size_t i = 0; i < n; ++i)
        t.add({csv_num(grid.lambdas[i]), csv_num(grid.values[i]), csv_num(grid.abs_errors[i])});
    return {std::move(t), "degree=" + fixed(fit.degree, 2) + " std_error=" + sci(fit.std_error) +
                              " fit_points=" + std::to_string(fit.points) + " max_residual=" + sci(fit.residual)};
}

inline Outcome run_classify(const ExperimentConfig& c, unsigned threads) {
    const TestFunction f = probe_of(c);
    const bool sweep = c.random_measures > 0;
    const std::size_t n = sweep ? static_cast<std::size_t>(c.random_measures) : 1;
    std::vector<SingularityVerdict> verdicts(n);
    std::vector<std::pair<std::size_t, std::size_t>> shape(n);
    auto one = [&](std::size_t i, unsigned grid_threads) {
        const SpectralMeasure m = sweep ? random_finite_measure(c.seed, i) : *c.measure;
        shape[i] = {m.atoms().size(), m.continuum().terms().size()};
        ScalingGridSpec spec = c.grid;
        spec.threads = grid_threads;
        const std::string where = sweep ? "classify on random measure " + std::to_string(i) + " (seed " +
                                              std::to_string(c.seed) + ")"
                                        : std::string("classify");
        verdicts[i] = at_point(where, [&] { return classify(m, f, spec); });
    };
    if (sweep)
        parallel_for(n, threads, [&](std::size_t i) { one(i, 1); });
    else
        one(0, threads);

    CsvTable t({"index", "atoms", "continuum_terms", "degree", "std_error", "margin", "verdict", "sigma_mass_finite"});
    std::size_t hypothesis = 0;
    double worst_excess = -kInfinity;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& v = verdicts[i];
        t.add({std::to_string(i), std::to_string(shape[i].first), std::to_string(shape[i].second), csv_num(v.degree),
               csv_num(v.fit.std_error), csv_num(v.margin), std::string(to_string(v.kind)),
               v.sigma_mass_finite ? "true" : "false"});
        if (v.kind == SingularityKind::SatisfiesSingularityHypothesis)
            ++hypothesis;
        worst_excess = std::max(worst_excess, (v.degree - 2.0) / std::max(v.margin, 1e-300));
    }
    if (!sweep) {
        const auto& v = verdicts[0];
        return {std::move(t), std::string(to_string(v.kind)) + " degree=" + fixed(v.degree, 2) +
                                  " sigma_mass_finite=" + (v.sigma_mass_finite ? "true" : "false")};
    }
    return {std::move(t), "measures=" + std::to_string(n) + " hypothesis_verdicts=" + std::to_string(hypothesis) +
                              " max_excess_over_margin=" + fixed(worst_excess, 3)};
}

inline Outcome run_schwinger(const ExperimentConfig& c, unsigned threads) {
    const auto& s = c.schwinger;
    const std::size_t n = s.couplings.size() * s.epsilons.size() * s.R_grid.size();
    std::vector<EnergyReport> out(n);
    auto index = [&](std::size_t i) {
        const std::size_t nr = s.R_grid.size();
        const std::size_t ne = s.epsilons.size();
        return std::array<double, 3>{s.couplings[i / (nr * ne)], s.epsilons[(i / nr) % ne], s.R_grid[i % nr]};
    };
    parallel_for(n, threads, [&](std::size_t i) {
        const auto [e, eps, R] = index(i);
        out[i] = at_point("schwinger-energy at e=" + csv_num(e) + " epsilon=" + csv_num(eps) + " R=" + csv_num(R),
                          [&] { return dipole_energy(e, dipole_profile(R, eps, s.ramp)); });
    });
    CsvTable t({"e", "epsilon", "R", "energy", "gradient_part", "mass_part", "closed_form", "quadrature_error"});
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [e, eps, R] = index(i);
        const double exact = ramp_energy(e, R, eps, s.ramp);
        worst = std::max(worst, std::abs(out[i].energy - exact) / std::abs(exact));
        t.add({csv_num(e), csv_num(eps), csv_num(R), csv_num(out[i].energy), csv_num(out[i].gradient_part),
               csv_num(out[i].mass_part), csv_num(exact), csv_num(out[i].quadrature_error)});
    }
    return {std::move(t), "rows=" + std::to_string(n) + " max_rel_deviation_from_closed_form=" + sci(worst)};
}

inline Outcome run_confinement(const ExperimentConfig& c, unsigned threads) {
    const auto& s = c.confinement;
    std::vector<EnergyReport> out(s.R_grid.size());
    parallel_for(out.size(), threads, [&](std::size_t i) {
        out[i] = at_point("confinement at R=" + csv_num(s.R_grid[i]), [&] {
            return dipole_energy(s.coupling, dipole_profile(s.R_grid[i], s.epsilon, s.ramp));
        });
    });
    std::vector<double> energies;
    for (const auto& r : out)
        energies.push_back(r.energy);
    const ConfinementVerdict v =
        at_point("confinement fit", [&] { return confinement_verdict_from(s.R_grid, energies); });
    CsvTable t({"R", "energy", "gradient_part", "mass_part"});
    for (std::size_t i = 0; i < out.size(); ++i)
        t.add({csv_num(s.R_grid[i]), csv_num(out[i].energy), csv_num(out[i].gradient_part), csv_num(out[i].mass_part)});
    return {std::move(t), std::string(to_string(v.kind)) + " slope=" + fixed(v.growth_slope, 4) +
                              " std_error=" + sci(v.slope_stderr) + " photon_mass=" +
                              fixed(photon_mass(s.coupling), 6)};
}

inline Outcome run_ft_scaling(const ExperimentConfig& c, unsigned threads) {
    const auto& s = c.ft_scaling;
    std::vector<Evaluation> vals(s.radii.size());
    parallel_for(vals.size(), threads, [&](std::size_t i) {
        vals[i] = at_point("ft-scaling at radius=" + csv_num(s.radii[i]),
                           [&] { return smeared_power_ft(s.law, s.radii[i]); });
    });
    const ExponentFit fit = at_point("ft-scaling fit", [&] { return fit_exponent_from(s.radii, vals); });
    CsvTable t({"radius", "pairing", "abs_error"});
    for (std::size_t i = 0; i < vals.size(); ++i)
        t.add({csv_num(s.radii[i]), csv_num(vals[i].value), csv_num(vals[i].abs_error)});
    return {std::move(t), "exponent=" + fixed(fit.fitted_exponent, 3) + " expected=" +
                              fixed(expected_position_exponent(s.law), 3) + " std_error=" + sci(fit.std_error)};
}

inline Outcome run_decompose(const ExperimentConfig& c, unsigned) {
    const Decomposition d = decompose(*c.measure);
    CsvTable t({"part", "family", "mass_sq_lo", "mass_sq_hi", "mass"});
    for (const auto& a : d.atoms)
        t.add({"atom", "", csv_num(a.mass_sq), csv_num(a.mass_sq), csv_num(a.weight)});
    for (const auto& term : d.continuum.terms()) {
        const MassTotal m = at_point("decompose term " + std::string(term.family_name()), [&] {
            return continuum_mass(ContinuousDensity({term}));
        });
        t.add({"continuum", std::string(term.family_name()), csv_num(term.support().lo), csv_num(term.support().hi),
               csv_num(m.value)});
    }
    const MassTotal cm = at_point("decompose continuum", [&] { return continuum_mass(d.continuum); });
    const PolyBound b = d.continuum.poly_bound();
    return {std::move(t), "atoms=" + std::to_string(d.atoms.size()) + " continuum_terms=" +
                              std::to_string(d.continuum.terms().size()) + " continuum_mass=" + csv_num(cm.value) +
                              " poly_bound_C=" + csv_num(b.C) + " poly_bound_N=" + std::to_string(b.N)};
}

inline Outcome run_sum_rule(const ExperimentConfig& c, unsigned) {
    const SumRuleResult r = at_point("sum-rule", [&] { return check_etcr_sum_rule(*c.measure, c.sum_rule_tol); });
    CsvTable t({"part", "mass_sq", "weight"});
    for (const auto& a : c.measure->atoms())
        t.add({"atom", csv_num(a.mass_sq), csv_num(a.weight)});
    const MassTotal cm = at_point("sum-rule continuum", [&] { return continuum_mass(c.measure->continuum()); });
    t.add({"continuum", "", csv_num(cm.value)});
    t.add({"total", "", csv_num(r.total.value)});
    return {std::move(t), std::string(to_string(r.status)) + " total_mass=" + csv_num(r.total.value) +
                              " tol=" + csv_num(c.sum_rule_tol)};
}

inline void write_atomically(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write '" + tmp + "'");
        out << contents;
        out.flush();
        if (!out) {
            out.close();
            std::remove(tmp.c_str());
            throw IoError("error while writing '" + tmp + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw IoError("cannot move output into place at '" + path + "': " + ec.message());
    }
}

} // namespace detail

/// Runs a validated config. Throws DomainError listing the diagnostics when
/// the config is invalid, RunError naming the failing grid point when a
/// computation fails, and IoError when the output cannot be written. The
/// output file (when configured) is only ever created complete.
inline RunRecord run(const ExperimentConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    if (const auto problems = validate(c); !problems.empty()) {
        std::string msg = "invalid config:";
        for (const auto& p : problems)
            msg += "\n  " + p;
        throw DomainError(msg);
    }
    const unsigned threads = effective_threads(c.threads);
    detail::Outcome outcome = [&] {
        switch (c.experiment) {
        case Experiment::Propagator:
            return detail::run_propagator(c, threads);
        case Experiment::ScalingDegree:
            return detail::run_scaling(c, threads);
        case Experiment::Classify:
            return detail::run_classify(c, threads);
        case Experiment::SchwingerEnergy:
            return detail::run_schwinger(c, threads);
        case Experiment::Confinement:
            return detail::run_confinement(c, threads);
        case Experiment::FtScaling:
            return detail::run_ft_scaling(c, threads);
        case Experiment::Decompose:
            return detail::run_decompose(c, threads);
        case Experiment::SumRule:
            return detail::run_sum_rule(c, threads);
        }
        throw DomainError("unknown experiment");
    }();

    RunRecord rec;
    rec.config_hash = config_hash(c);
    rec.summary = outcome.summary;
    rec.rows = outcome.table.rows();
    rec.csv = "# spectral_lab " + rec.version + "\r\n# experiment: " + std::string(to_string(c.experiment)) +
              "\r\n# config_hash: " + rec.config_hash + "\r\n" + outcome.table.render() + "# summary: " +
              outcome.summary + "\r\n";
    if (!c.output.empty())
        detail::write_atomically(c.output, rec.csv);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

} // namespace spectral_lab
