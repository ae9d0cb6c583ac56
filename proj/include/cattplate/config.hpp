#pragma once

// Configuration for the command-line tool: a strict, flat TOML subset
// (sections one level deep; numbers, strings, booleans and homogeneous
// arrays). Unknown sections or keys are rejected. Canonicalization
// re-serializes the typed configuration with sorted sections/keys and
// shortest round-trip number formatting, so canonicalize(parse(x)) is a
// fixed point and summaries can echo the configuration byte-exactly.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cattplate/diagnostics.hpp"

namespace cattplate {

inline constexpr const char* kToolVersion = "cattplate 0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace config_detail {

inline std::string format_double(double v, int precision = -1) {
    char buf[64];
    std::to_chars_result res;
    if (precision < 0)
        res = std::to_chars(buf, buf + sizeof(buf), v);
    else
        res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, precision);
    return std::string(buf, res.ptr);
}

struct RawValue {
    enum class Kind { number, string, boolean, number_list, string_list };
    Kind kind = Kind::number;
    double num = 0.0;
    std::string str;
    bool flag = false;
    std::vector<double> nums;
    std::vector<std::string> strs;
};

using RawSection = std::map<std::string, RawValue>;
using RawConfig = std::map<std::string, RawSection>;

inline std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& tok, int line_no) {
    std::string t = strip(tok);
    if (t.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty number");
    if (t.front() == '+') t.erase(0, 1);  // from_chars rejects an explicit plus
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ConfigError("line " + std::to_string(line_no) + ": bad number '" + t + "'");
    return v;
}

inline RawValue parse_value(const std::string& text, int line_no) {
    RawValue v;
    std::string t = strip(text);
    if (t.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing value");
    if (t.front() == '"') {
        if (t.size() < 2 || t.back() != '"')
            throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
        v.kind = RawValue::Kind::string;
        v.str = t.substr(1, t.size() - 2);
        return v;
    }
    if (t == "true" || t == "false") {
        v.kind = RawValue::Kind::boolean;
        v.flag = (t == "true");
        return v;
    }
    if (t.front() == '[') {
        if (t.back() != ']')
            throw ConfigError("line " + std::to_string(line_no) + ": unterminated array");
        std::string inner = t.substr(1, t.size() - 2);
        std::vector<std::string> items;
        std::string cur;
        for (char c : inner) {
            if (c == ',') {
                items.push_back(cur);
                cur.clear();
            } else
                cur += c;
        }
        if (!strip(cur).empty()) items.push_back(cur);
        bool all_strings = true;
        for (auto& it : items)
            if (strip(it).empty() || strip(it).front() != '"') all_strings = false;
        if (!items.empty() && all_strings) {
            v.kind = RawValue::Kind::string_list;
            for (auto& it : items) {
                auto s = strip(it);
                if (s.size() < 2 || s.back() != '"')
                    throw ConfigError("line " + std::to_string(line_no) + ": bad string item");
                v.strs.push_back(s.substr(1, s.size() - 2));
            }
        } else {
            v.kind = RawValue::Kind::number_list;
            for (auto& it : items) v.nums.push_back(parse_number(it, line_no));
        }
        return v;
    }
    v.kind = RawValue::Kind::number;
    v.num = parse_number(t, line_no);
    return v;
}

inline RawConfig parse_raw(const std::string& text) {
    RawConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // strip comments outside of quotes
        bool quoted = false;
        std::string clean;
        for (char c : line) {
            if (c == '"') quoted = !quoted;
            if (c == '#' && !quoted) break;
            clean += c;
        }
        clean = strip(clean);
        if (clean.empty()) continue;
        if (clean.front() == '[') {
            if (clean.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
            section = strip(clean.substr(1, clean.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
            cfg[section];
            continue;
        }
        const size_t eq = clean.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = strip(clean.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (section.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": key outside a section");
        if (cfg[section].count(key))
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        cfg[section][key] = parse_value(clean.substr(eq + 1), line_no);
    }
    return cfg;
}

// Typed access with consumption tracking so leftovers can be reported.
class SectionReader {
public:
    SectionReader(const std::string& name, const RawSection* sec) : name_(name), sec_(sec) {}

    bool present() const { return sec_ != nullptr; }

    std::optional<double> number(const std::string& key) {
        auto* v = take(key);
        if (!v) return std::nullopt;
        if (v->kind != RawValue::Kind::number) fail(key, "a number");
        return v->num;
    }
    std::optional<int> integer(const std::string& key) {
        auto n = number(key);
        if (!n) return std::nullopt;
        const double r = std::round(*n);
        if (std::abs(*n - r) > 1e-12) fail(key, "an integer");
        return static_cast<int>(r);
    }
    std::optional<std::string> string(const std::string& key) {
        auto* v = take(key);
        if (!v) return std::nullopt;
        if (v->kind != RawValue::Kind::string) fail(key, "a string");
        return v->str;
    }
    std::optional<std::vector<double>> numbers(const std::string& key) {
        auto* v = take(key);
        if (!v) return std::nullopt;
        if (v->kind == RawValue::Kind::number) return std::vector<double>{v->num};
        if (v->kind != RawValue::Kind::number_list) fail(key, "a number array");
        return v->nums;
    }
    std::optional<std::vector<int>> integers(const std::string& key) {
        auto ns = numbers(key);
        if (!ns) return std::nullopt;
        std::vector<int> out;
        for (double n : *ns) {
            const double r = std::round(n);
            if (std::abs(n - r) > 1e-12) fail(key, "an integer array");
            out.push_back(static_cast<int>(r));
        }
        return out;
    }

    void finish() const {
        if (!sec_) return;
        for (const auto& [key, value] : *sec_)
            if (!consumed_.count(key))
                throw ConfigError("unknown key '" + key + "' in section [" + name_ + "]");
    }

private:
    const RawValue* take(const std::string& key) {
        if (!sec_) return nullptr;
        auto it = sec_->find(key);
        if (it == sec_->end()) return nullptr;
        consumed_.insert(key);
        return &it->second;
    }
    [[noreturn]] void fail(const std::string& key, const char* what) const {
        throw ConfigError("key '" + key + "' in section [" + name_ + "] must be " + what);
    }

    std::string name_;
    const RawSection* sec_;
    std::set<std::string> consumed_;
};

}  // namespace config_detail

struct BasisConfig {
    int dim = 1;
    std::vector<double> lengths{1.0};
    std::vector<int> modes{32};
    double padding = 2.0;
};

struct NonlinearityConfig {
    std::string preset = "linear";  // linear | cubic-stiffening | cubic-softening | quadratic
    double coefficient = 1.0;
};

struct InitialConfig {
    std::string preset = "zero";  // zero | single-mode | random | coefficients
    double amplitude = 1.0;
    std::vector<int> mode;  // per-axis index for single-mode
    std::uint64_t seed = 1;
    double decay = 4.0;  // coefficient falloff exponent for the random preset
    std::optional<double> normalize_e1;
    std::vector<double> z0, z1, theta0, p0;  // explicit coefficient lists
};

struct OutputConfig {
    std::string dir = "out";
    int precision = 17;
    int stride = 1;
};

struct SpectrumConfig {
    int k_max = 8;
};

struct SweepConfig {
    std::vector<double> gamma_list{0.0, 1.0};
    std::vector<double> tau_list{0.0, 1.0};
    int k_max = 512;
};

struct RunConfig {
    BasisConfig basis;
    std::optional<ModelParams> params;
    std::optional<PhysicalParams> physical;
    NonlinearityConfig nonlinearity;
    InitialConfig initial;
    SimOptions sim;
    OutputConfig output;
    SpectrumConfig spectrum;
    SweepConfig sweep;

    ModelParams resolved_params() const {
        if (params) return *params;
        return normalize_physical(*physical).first;
    }

    BasisPtr make_basis() const {
        return Basis::make(basis.dim, basis.lengths, basis.modes, basis.padding);
    }

    Nonlinearity make_nonlinearity() const {
        const double kappa0 = resolved_params().kappa0;
        const auto& p = nonlinearity.preset;
        if (p == "linear") return Nonlinearity::linear(kappa0);
        if (p == "cubic-stiffening") return Nonlinearity::cubic(kappa0, nonlinearity.coefficient);
        if (p == "cubic-softening") return Nonlinearity::cubic(kappa0, -nonlinearity.coefficient);
        if (p == "quadratic") return Nonlinearity::quadratic(kappa0, nonlinearity.coefficient);
        throw ConfigError("unknown nonlinearity preset '" + p + "'");
    }

    PlateState make_initial_state() const {
        const BasisPtr b = make_basis();
        const ModelParams mp = resolved_params();
        SpectralField z(b), v(b), th(b), pp(b);

        auto fill_explicit = [&](SpectralField& f, const std::vector<double>& c,
                                 const char* name) {
            if (c.empty()) return;
            if (c.size() != b->size())
                throw ConfigError(std::string("initial.") + name + " must list " +
                                  std::to_string(b->size()) + " coefficients");
            f.coeffs = c;
        };

        if (initial.preset == "zero" || initial.preset == "coefficients") {
            // nothing to generate
        } else if (initial.preset == "single-mode") {
            std::vector<int> k = initial.mode;
            if (k.empty()) k.assign(basis.dim, 1);
            if (static_cast<int>(k.size()) != basis.dim)
                throw ConfigError("initial.mode must list one index per axis");
            double coeff = initial.amplitude;
            for (int a = 0; a < basis.dim; ++a) coeff *= std::sqrt(basis.lengths[a] / 2.0);
            z.coeffs[b->flat_index(k)] = coeff;
        } else if (initial.preset == "random") {
            std::mt19937_64 rng(initial.seed);
            std::uniform_real_distribution<double> dist(-1.0, 1.0);
            auto fill = [&](SpectralField& f) {
                for (size_t i = 0; i < f.coeffs.size(); ++i)
                    f.coeffs[i] = initial.amplitude * dist(rng) /
                                  std::pow(1.0 + static_cast<double>(i), initial.decay);
            };
            fill(z);
            fill(v);
            fill(th);
            fill(pp);
        } else {
            throw ConfigError("unknown initial preset '" + initial.preset + "'");
        }

        fill_explicit(z, initial.z0, "z0");
        fill_explicit(v, initial.z1, "z1");
        fill_explicit(th, initial.theta0, "theta0");
        fill_explicit(pp, initial.p0, "p0");

        PlateState state(0.0, std::move(z), std::move(v), std::move(th), std::move(pp));
        if (initial.normalize_e1) {
            const double e1 = e1_of_state(state, mp);
            if (e1 <= 0.0) throw ConfigError("initial.normalize_e1 set but E1(0) = 0");
            const double s = std::sqrt(*initial.normalize_e1 / e1);
            state.z = scaled(state.z, s);
            state.v = scaled(state.v, s);
            state.theta = scaled(state.theta, s);
            state.p = scaled(state.p, s);
        }
        return state;
    }

    void validate() const {
        if (params.has_value() == physical.has_value())
            throw ConfigError("exactly one of [params] or [physical] must be present");
        if (basis.dim < 1 || basis.dim > 2) throw ConfigError("basis.dim must be 1 or 2");
        if (static_cast<int>(basis.lengths.size()) != basis.dim ||
            static_cast<int>(basis.modes.size()) != basis.dim)
            throw ConfigError("basis.lengths and basis.modes must list one entry per axis");
        for (double l : basis.lengths)
            if (!(l > 0.0)) throw ConfigError("basis.lengths must be positive");
        for (int m : basis.modes)
            if (m < 1) throw ConfigError("basis.modes must be >= 1");
        if (basis.padding < 1.0) throw ConfigError("basis.padding must be >= 1");
        if (output.precision < 1 || output.precision > 17)
            throw ConfigError("output.precision must be in 1..17");
        if (output.stride < 1) throw ConfigError("output.stride must be >= 1");
        if (spectrum.k_max < 1) throw ConfigError("spectrum.k_max must be >= 1");
        if (sweep.k_max < 32) throw ConfigError("sweep.k_max must be >= 32");
        if (sweep.gamma_list.empty() || sweep.tau_list.empty())
            throw ConfigError("sweep.gamma_list and sweep.tau_list must be nonempty");
        try {
            if (params) params->validate(false);
            if (physical) physical->validate();
            sim.validate();
            make_nonlinearity();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (!(sim.t_end > 0.0)) throw ConfigError("sim.t_end must be positive");
    }
};

inline RunConfig parse_config(const std::string& text) {
    using namespace config_detail;
    RawConfig raw = parse_raw(text);
    static const std::set<std::string> known = {"basis",  "initial", "nonlinearity",
                                                "output", "params",  "physical",
                                                "sim",    "spectrum", "sweep"};
    for (const auto& [name, sec] : raw)
        if (!known.count(name)) throw ConfigError("unknown section [" + name + "]");

    auto section = [&](const char* name) {
        auto it = raw.find(name);
        return SectionReader(name, it == raw.end() ? nullptr : &it->second);
    };

    RunConfig cfg;

    auto b = section("basis");
    if (auto v = b.integer("dim")) cfg.basis.dim = *v;
    if (auto v = b.numbers("lengths")) cfg.basis.lengths = *v;
    if (auto v = b.integers("modes")) cfg.basis.modes = *v;
    if (auto v = b.number("padding")) cfg.basis.padding = *v;
    b.finish();

    auto p = section("params");
    if (p.present()) {
        ModelParams mp;
        if (auto v = p.number("alpha")) mp.alpha = *v;
        if (auto v = p.number("beta")) mp.beta = *v;
        if (auto v = p.number("gamma")) mp.gamma = *v;
        if (auto v = p.number("eta")) mp.eta = *v;
        if (auto v = p.number("tau")) mp.tau = *v;
        if (auto v = p.number("sigma")) mp.sigma = *v;
        if (auto v = p.number("kappa0")) mp.kappa0 = *v;
        cfg.params = mp;
    }
    p.finish();

    auto ph = section("physical");
    if (ph.present()) {
        PhysicalParams pp;
        auto need = [&](const char* key) {
            auto v = ph.number(key);
            if (!v) throw ConfigError(std::string("[physical] requires key '") + key + "'");
            return *v;
        };
        pp.density = need("density");
        pp.thickness = need("thickness");
        pp.rigidity = need("rigidity");
        pp.poisson = need("poisson");
        pp.heat_capacity = need("heat_capacity");
        pp.expansion = need("expansion");
        pp.lambda0 = need("lambda0");
        pp.lambda1 = need("lambda1");
        pp.relaxation = need("relaxation");
        pp.reference_temperature = need("reference_temperature");
        pp.bulk_modulus = need("bulk_modulus");
        cfg.physical = pp;
    }
    ph.finish();

    auto nl = section("nonlinearity");
    if (auto v = nl.string("preset")) cfg.nonlinearity.preset = *v;
    if (auto v = nl.number("coefficient")) cfg.nonlinearity.coefficient = *v;
    nl.finish();

    auto ini = section("initial");
    if (auto v = ini.string("preset")) cfg.initial.preset = *v;
    if (auto v = ini.number("amplitude")) cfg.initial.amplitude = *v;
    if (auto v = ini.integers("mode")) cfg.initial.mode = *v;
    if (auto v = ini.integer("seed")) cfg.initial.seed = static_cast<std::uint64_t>(*v);
    if (auto v = ini.number("decay")) cfg.initial.decay = *v;
    if (auto v = ini.number("normalize_e1")) cfg.initial.normalize_e1 = *v;
    if (auto v = ini.numbers("z0")) cfg.initial.z0 = *v;
    if (auto v = ini.numbers("z1")) cfg.initial.z1 = *v;
    if (auto v = ini.numbers("theta0")) cfg.initial.theta0 = *v;
    if (auto v = ini.numbers("p0")) cfg.initial.p0 = *v;
    ini.finish();

    auto sim = section("sim");
    if (auto v = sim.number("dt")) cfg.sim.dt = *v;
    if (auto v = sim.number("t_end")) cfg.sim.t_end = *v;
    if (auto v = sim.string("scheme")) {
        try {
            cfg.sim.scheme = scheme_from_string(*v);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (auto v = sim.number("picard_tol")) cfg.sim.picard_tol = *v;
    if (auto v = sim.integer("picard_max_iter")) cfg.sim.picard_max_iter = *v;
    if (auto v = sim.number("degeneracy_eps")) cfg.sim.degeneracy_eps = *v;
    if (auto v = sim.number("blowup_threshold")) cfg.sim.blowup_threshold = *v;
    sim.finish();

    auto out = section("output");
    if (auto v = out.string("dir")) cfg.output.dir = *v;
    if (auto v = out.integer("precision")) cfg.output.precision = *v;
    if (auto v = out.integer("stride")) cfg.output.stride = *v;
    out.finish();
    cfg.sim.record_stride = cfg.output.stride;

    auto sp = section("spectrum");
    if (auto v = sp.integer("k_max")) cfg.spectrum.k_max = *v;
    sp.finish();

    auto sw = section("sweep");
    if (auto v = sw.numbers("gamma_list")) cfg.sweep.gamma_list = *v;
    if (auto v = sw.numbers("tau_list")) cfg.sweep.tau_list = *v;
    if (auto v = sw.integer("k_max")) cfg.sweep.k_max = *v;
    sw.finish();

    cfg.validate();
    return cfg;
}

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::linear_midpoint: return "linear-midpoint";
        case Scheme::split_explicit: return "split-explicit";
        case Scheme::picard_midpoint: return "picard-midpoint";
    }
    return "?";
}

// Canonical serialization: alphabetical sections and keys, shortest
// round-trip numbers, one key per line.
inline std::string canonicalize(const RunConfig& cfg) {
    using config_detail::format_double;
    std::ostringstream out;
    auto num = [&](const char* key, double v) {
        out << key << " = " << format_double(v) << "\n";
    };
    auto integer = [&](const char* key, long long v) { out << key << " = " << v << "\n"; };
    auto str = [&](const char* key, const std::string& v) {
        out << key << " = \"" << v << "\"\n";
    };
    auto num_list = [&](const char* key, const std::vector<double>& v) {
        out << key << " = [";
        for (size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << format_double(v[i]);
        out << "]\n";
    };
    auto int_list = [&](const char* key, const std::vector<int>& v) {
        out << key << " = [";
        for (size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
        out << "]\n";
    };

    out << "[basis]\n";
    integer("dim", cfg.basis.dim);
    num_list("lengths", cfg.basis.lengths);
    int_list("modes", cfg.basis.modes);
    num("padding", cfg.basis.padding);

    out << "\n[initial]\n";
    num("amplitude", cfg.initial.amplitude);
    num("decay", cfg.initial.decay);
    if (!cfg.initial.mode.empty()) int_list("mode", cfg.initial.mode);
    if (cfg.initial.normalize_e1) num("normalize_e1", *cfg.initial.normalize_e1);
    if (!cfg.initial.p0.empty()) num_list("p0", cfg.initial.p0);
    str("preset", cfg.initial.preset);
    integer("seed", static_cast<long long>(cfg.initial.seed));
    if (!cfg.initial.theta0.empty()) num_list("theta0", cfg.initial.theta0);
    if (!cfg.initial.z0.empty()) num_list("z0", cfg.initial.z0);
    if (!cfg.initial.z1.empty()) num_list("z1", cfg.initial.z1);

    out << "\n[nonlinearity]\n";
    num("coefficient", cfg.nonlinearity.coefficient);
    str("preset", cfg.nonlinearity.preset);

    out << "\n[output]\n";
    str("dir", cfg.output.dir);
    integer("precision", cfg.output.precision);
    integer("stride", cfg.output.stride);

    if (cfg.params) {
        out << "\n[params]\n";
        num("alpha", cfg.params->alpha);
        num("beta", cfg.params->beta);
        num("eta", cfg.params->eta);
        num("gamma", cfg.params->gamma);
        num("kappa0", cfg.params->kappa0);
        num("sigma", cfg.params->sigma);
        num("tau", cfg.params->tau);
    }
    if (cfg.physical) {
        out << "\n[physical]\n";
        num("bulk_modulus", cfg.physical->bulk_modulus);
        num("density", cfg.physical->density);
        num("expansion", cfg.physical->expansion);
        num("heat_capacity", cfg.physical->heat_capacity);
        num("lambda0", cfg.physical->lambda0);
        num("lambda1", cfg.physical->lambda1);
        num("poisson", cfg.physical->poisson);
        num("reference_temperature", cfg.physical->reference_temperature);
        num("relaxation", cfg.physical->relaxation);
        num("rigidity", cfg.physical->rigidity);
        num("thickness", cfg.physical->thickness);
    }

    out << "\n[sim]\n";
    num("blowup_threshold", cfg.sim.blowup_threshold);
    num("degeneracy_eps", cfg.sim.degeneracy_eps);
    num("dt", cfg.sim.dt);
    integer("picard_max_iter", cfg.sim.picard_max_iter);
    num("picard_tol", cfg.sim.picard_tol);
    str("scheme", to_string(cfg.sim.scheme));
    num("t_end", cfg.sim.t_end);

    out << "\n[spectrum]\n";
    integer("k_max", cfg.spectrum.k_max);

    out << "\n[sweep]\n";
    num_list("gamma_list", cfg.sweep.gamma_list);
    integer("k_max", cfg.sweep.k_max);
    num_list("tau_list", cfg.sweep.tau_list);

    return out.str();
}

}  // namespace cattplate
