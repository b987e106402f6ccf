#include "dpm/config.hpp"

#include "dpm/error.hpp"
#include "dpm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

namespace dpm {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back({});
    return out;
}

/// Key lookup that remembers what was consumed so leftovers can be rejected.
class Section {
public:
    Section(const IniDocument& doc, const std::string& name) : name_(name) {
        const auto it = doc.sections.find(name);
        if (it != doc.sections.end()) {
            entries_ = &it->second;
            present_ = true;
        }
    }

    bool present() const { return present_; }
    bool has(const std::string& key) const { return entries_ && entries_->count(key); }

    const std::string* raw(const std::string& key) {
        if (!has(key)) return nullptr;
        used_.insert(key);
        return &entries_->at(key).value;
    }

    std::string where(const std::string& key) const {
        std::string w = "[" + name_ + "] " + key;
        if (has(key)) w += " (line " + std::to_string(entries_->at(key).line) + ")";
        return w;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw InvalidInput(where(key) + ": " + msg);
    }

    const std::string& require(const std::string& key) {
        const std::string* v = raw(key);
        if (!v) throw InvalidInput("missing required key " + where(key));
        return *v;
    }

    double to_double(const std::string& key, const std::string& text) const {
        double v = 0.0;
        const char* first = text.data();
        const char* last = first + text.size();
        const auto res = std::from_chars(first, last, v);
        if (text.empty() || res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) {
            fail(key, "expected a finite number, got '" + text + "'");
        }
        return v;
    }

    long to_int(const std::string& key, const std::string& text) const {
        long v = 0;
        const char* first = text.data();
        const char* last = first + text.size();
        const auto res = std::from_chars(first, last, v);
        if (text.empty() || res.ec != std::errc{} || res.ptr != last) {
            fail(key, "expected an integer, got '" + text + "'");
        }
        return v;
    }

    void get(const std::string& key, double& out) {
        if (const auto* v = raw(key)) out = to_double(key, *v);
    }
    void get(const std::string& key, int& out) {
        if (const auto* v = raw(key)) {
            const long x = to_int(key, *v);
            if (x < -1000000000L || x > 1000000000L) fail(key, "integer out of range");
            out = static_cast<int>(x);
        }
    }
    void get(const std::string& key, bool& out) {
        if (const auto* v = raw(key)) {
            if (*v == "true") out = true;
            else if (*v == "false") out = false;
            else fail(key, "expected true or false, got '" + *v + "'");
        }
    }
    void get(const std::string& key, std::vector<double>& out) {
        if (const auto* v = raw(key)) {
            out.clear();
            for (const auto& item : split(*v, ',')) out.push_back(to_double(key, item));
        }
    }
    double require_double(const std::string& key) { return to_double(key, require(key)); }

    Vec3 vec(const std::string& key, const std::string& text, int dim) const {
        const auto items = split(text, ',');
        if (static_cast<int>(items.size()) != dim) {
            fail(key, "expected " + std::to_string(dim) + " comma-separated numbers");
        }
        Vec3 out{};
        for (int a = 0; a < dim; ++a) out[a] = to_double(key, items[a]);
        return out;
    }

    Eigen::MatrixXd matrix(const std::string& key, int dim) {
        const std::string& text = require(key);
        const auto items = split(text, ',');
        if (static_cast<int>(items.size()) != dim * dim) {
            fail(key, "expected " + std::to_string(dim * dim) + " entries in row-major order");
        }
        Eigen::MatrixXd m(dim, dim);
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) m(i, j) = to_double(key, items[i * dim + j]);
        }
        return m;
    }

    AlphaRule alpha(const std::string& key, const AlphaRule& fallback) {
        const auto* v = raw(key);
        if (!v) return fallback;
        const auto items = split(*v, ',');
        if (items.size() != 2) fail(key, "expected 'coefficient, exponent'");
        return AlphaRule{to_double(key, items[0]), to_double(key, items[1])};
    }

    void finish() const {
        if (!entries_) return;
        for (const auto& [key, entry] : *entries_) {
            if (!used_.count(key)) {
                throw InvalidInput("unknown key '" + key + "' in [" + name_ + "] (line " +
                                   std::to_string(entry.line) + ")");
            }
        }
    }

private:
    std::string name_;
    const std::map<std::string, IniDocument::Entry>* entries_ = nullptr;
    bool present_ = false;
    std::set<std::string> used_;
};

const char* const kSections[] = {"geometry", "regime",   "solver",   "coefficients",
                                 "forcing",  "boundary", "initial",  "poincare",
                                 "output"};

const char* const kAxisNames = "xyz";

std::string resolve_path(const std::string& path, const std::string& base_dir) {
    namespace fs = std::filesystem;
    fs::path p(path);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    return fs::absolute(p).lexically_normal().string();
}

CellSpec read_cell(Section& s, const std::string& prefix, int dim, const std::string& base_dir,
                   std::string& mask_file) {
    CellSpec spec;
    spec.dimension = dim;
    const std::string& shape = s.require(prefix + ".shape");
    try {
        spec.shape = shape_from_string(shape);
    } catch (const InvalidInput& e) {
        s.fail(prefix + ".shape", e.what());
    }
    s.get(prefix + ".param", spec.param);
    s.get(prefix + ".resolution", spec.resolution);
    s.get(prefix + ".inverted", spec.inverted);
    s.get(prefix + ".channel_axis", spec.channel_axis);
    const std::string* file = s.raw(prefix + ".mask_file");
    if (spec.shape == Shape::custom_mask) {
        if (!file) throw InvalidInput("custom_mask needs " + s.where(prefix + ".mask_file"));
        mask_file = resolve_path(*file, base_dir);
        IndicatorField mask;
        try {
            mask = read_raw_mask(mask_file);
        } catch (const IoError& e) {
            s.fail(prefix + ".mask_file", e.what());
        }
        if (mask.dim() != dim) s.fail(prefix + ".mask_file", "mask dimension differs from [geometry] dimension");
        if (s.has(prefix + ".resolution") && spec.resolution != mask.resolution()) {
            s.fail(prefix + ".resolution", "does not match the mask file");
        }
        spec.resolution = mask.resolution();
        spec.mask = mask.data();
    } else if (file) {
        s.fail(prefix + ".mask_file", "only valid with shape = custom_mask");
    }
    try {
        spec.validate();
    } catch (const InvalidInput& e) {
        throw InvalidInput("[geometry] " + prefix + ": " + e.what());
    }
    return spec;
}

void write_cell(std::ostringstream& o, const std::string& prefix, const CellSpec& spec,
                const std::string& mask_file) {
    o << prefix << ".shape = " << to_string(spec.shape) << '\n';
    o << prefix << ".param = " << format_double(spec.param) << '\n';
    o << prefix << ".resolution = " << spec.resolution << '\n';
    o << prefix << ".inverted = " << (spec.inverted ? "true" : "false") << '\n';
    o << prefix << ".channel_axis = " << spec.channel_axis << '\n';
    if (spec.shape == Shape::custom_mask) o << prefix << ".mask_file = " << mask_file << '\n';
}

std::string list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += format_double(values[i]);
    }
    return out;
}

std::string vec_text(const Vec3& v, int dim) {
    return list(std::vector<double>(v.begin(), v.begin() + dim));
}

std::string matrix_text(const Eigen::MatrixXd& m) {
    std::vector<double> values;
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
    }
    return list(values);
}

std::string rule_text(const AlphaRule& rule) {
    return format_double(rule.coefficient) + ", " + format_double(rule.exponent);
}

ForcingPreset preset_from_string(const std::string& name) {
    for (ForcingPreset p : {ForcingPreset::zero, ForcingPreset::constant, ForcingPreset::rotational,
                            ForcingPreset::confined_vortex}) {
        if (name == to_string(p)) return p;
    }
    throw InvalidInput("unknown forcing preset '" + name + "'");
}

}  // namespace

IniDocument parse_ini(const std::string& text) {
    IniDocument doc;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string at = " (line " + std::to_string(number) + ")";
        if (line.front() == '[') {
            if (line.back() != ']') throw InvalidInput("malformed section header" + at);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw InvalidInput("empty section name" + at);
            if (doc.sections.count(section)) throw InvalidInput("duplicate section [" + section + "]" + at);
            doc.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidInput("expected 'key = value'" + at);
        if (section.empty()) throw InvalidInput("key outside of any section" + at);
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw InvalidInput("empty key" + at);
        auto& entries = doc.sections[section];
        if (entries.count(key)) throw InvalidInput("duplicate key '" + key + "'" + at);
        entries[key] = {trim(line.substr(eq + 1)), number};
    }
    return doc;
}

const char* to_string(ForcingPreset preset) {
    switch (preset) {
    case ForcingPreset::zero: return "zero";
    case ForcingPreset::constant: return "constant";
    case ForcingPreset::rotational: return "rotational";
    case ForcingPreset::confined_vortex: return "confined_vortex";
    }
    return "zero";
}

ForcingSpec ForcingConfig::build() const {
    ForcingSpec spec;
    switch (preset) {
    case ForcingPreset::zero: return spec;
    case ForcingPreset::constant: spec = ForcingSpec::constant(vector); break;
    case ForcingPreset::rotational: spec = ForcingSpec::rotational(amplitude); break;
    case ForcingPreset::confined_vortex: spec = ForcingSpec::confined_vortex(amplitude); break;
    }
    for (auto& term : spec.terms) {
        term.time = time;
        term.omega = omega;
    }
    return spec;
}

CellSpec RunConfig::pore_or_solid() const {
    if (has_pore) return pore;
    CellSpec solid;
    solid.dimension = dimension;
    solid.shape = Shape::custom_mask;
    solid.resolution = 8;
    solid.mask.assign(dimension == 3 ? 512 : 64, 0);
    return solid;
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
    const IniDocument doc = parse_ini(text);
    for (const auto& [name, entries] : doc.sections) {
        if (std::find_if(std::begin(kSections), std::end(kSections),
                         [&](const char* s) { return name == s; }) == std::end(kSections)) {
            throw InvalidInput("unknown section [" + name + "]");
        }
    }
    RunConfig cfg;

    Section geo(doc, "geometry");
    if (!geo.present()) throw InvalidInput("missing section [geometry]");
    geo.get("dimension", cfg.dimension);
    if (!geo.has("dimension")) throw InvalidInput("missing required key " + geo.where("dimension"));
    if (cfg.dimension != 2 && cfg.dimension != 3) geo.fail("dimension", "must be 2 or 3");
    const int d = cfg.dimension;
    cfg.crack = read_cell(geo, "crack", d, base_dir, cfg.crack_mask_file);
    if (geo.has("pore.shape") && *geo.raw("pore.shape") != "none") {
        cfg.has_pore = true;
    }
    // With pore.shape = none any other pore.* key is reported as unknown.
    if (cfg.has_pore) {
        cfg.pore = read_cell(geo, "pore", d, base_dir, cfg.pore_mask_file);
    }
    double eps = 0.5, r = 1.0;
    geo.get("eps", eps);
    geo.get("r", r);
    geo.get("eps_list", cfg.eps_list);
    geo.get("domain_resolution", cfg.domain_resolution);
    geo.finish();

    Section reg(doc, "regime");
    if (!reg.present()) throw InvalidInput("missing section [regime]");
    RegimeKind kind;
    try {
        kind = regime_from_string(reg.require("kind"));
    } catch (const InvalidInput& e) {
        if (!reg.has("kind")) throw;
        reg.fail("kind", e.what());
    }
    const double tau0 = reg.require_double("tau0");
    const double mu1 = reg.require_double("mu1");
    const double c_f = reg.require_double("c_f");
    cfg.regime = ScalingRegime::with_default_rules(kind, eps, r, tau0, mu1, c_f);
    cfg.regime.alpha_tau_rule = reg.alpha("alpha_tau", cfg.regime.alpha_tau_rule);
    cfg.regime.alpha_mu_rule = reg.alpha("alpha_mu", cfg.regime.alpha_mu_rule);
    cfg.regime.alpha_q_rule = reg.alpha("alpha_q", cfg.regime.alpha_q_rule);
    if (const auto* b = reg.raw("beta")) {
        cfg.beta = reg.to_double("beta", *b);
        if (!(*cfg.beta > 0.0)) reg.fail("beta", "must be positive");
    }
    reg.finish();
    cfg.regime.validate(false);

    Section sol(doc, "solver");
    sol.get("tol", cfg.cell_options.tol);
    sol.get("inner_tol", cfg.cell_options.inner_tol);
    sol.get("max_outer_iterations", cfg.cell_options.max_outer_iterations);
    sol.get("max_inner_iterations", cfg.cell_options.max_inner_iterations);
    sol.get("poincare_tol", cfg.poincare_options.tol);
    sol.get("poincare_max_iterations", cfg.poincare_options.max_iterations);
    sol.get("dt", cfg.dt);
    sol.get("final_time", cfg.final_time);
    sol.get("macro_resolution", cfg.macro_resolution);
    sol.get("incompressible", cfg.incompressible);
    sol.get("alpha_tau_floor", cfg.alpha_tau_floor);
    sol.finish();
    if (!(cfg.cell_options.tol > 0.0) || !(cfg.cell_options.inner_tol > 0.0) ||
        !(cfg.poincare_options.tol > 0.0)) {
        throw InvalidInput("[solver] tolerances must be positive");
    }
    if (cfg.cell_options.max_outer_iterations < 1 || cfg.cell_options.max_inner_iterations < 1 ||
        cfg.poincare_options.max_iterations < 1) {
        throw InvalidInput("[solver] iteration caps must be >= 1");
    }
    if (!(cfg.dt > 0.0)) throw InvalidInput("[solver] dt must be positive");
    if (!(cfg.final_time >= 0.0)) throw InvalidInput("[solver] final_time must be >= 0");
    if (cfg.macro_resolution < 2) throw InvalidInput("[solver] macro_resolution must be >= 2");
    if (cfg.domain_resolution < 0) throw InvalidInput("[geometry] domain_resolution must be >= 0");
    if (!(cfg.alpha_tau_floor >= 0.0)) throw InvalidInput("[solver] alpha_tau_floor must be >= 0");

    Section coef(doc, "coefficients");
    if (const auto* src = coef.raw("source")) {
        if (*src == "cells") cfg.coefficient_source = CoefficientSource::cells;
        else if (*src == "explicit") cfg.coefficient_source = CoefficientSource::explicit_values;
        else coef.fail("source", "expected cells or explicit");
    }
    if (cfg.coefficient_source == CoefficientSource::explicit_values) {
        if (coef.has("B1")) cfg.B1 = coef.matrix("B1", d);
        if (coef.has("Mc")) cfg.Mc = coef.matrix("Mc", d);
        if (coef.has("Mp")) cfg.Mp = coef.matrix("Mp", d);
        cfg.m = coef.require_double("m");
        cfg.m_c = cfg.m;
        coef.get("m_c", cfg.m_c);
        coef.get("m_p", cfg.m_p);
        if (!(cfg.m > 0.0 && cfg.m <= 1.0)) coef.fail("m", "must lie in (0, 1]");
    }
    coef.finish();

    Section frc(doc, "forcing");
    if (const auto* p = frc.raw("preset")) {
        try {
            cfg.forcing.preset = preset_from_string(*p);
        } catch (const InvalidInput& e) {
            frc.fail("preset", e.what());
        }
    }
    if (cfg.forcing.preset == ForcingPreset::constant) {
        cfg.forcing.vector = frc.vec("vector", frc.require("vector"), d);
    }
    if (cfg.forcing.preset == ForcingPreset::rotational ||
        cfg.forcing.preset == ForcingPreset::confined_vortex) {
        frc.get("amplitude", cfg.forcing.amplitude);
    }
    if (cfg.forcing.preset != ForcingPreset::zero) {
        if (const auto* t = frc.raw("time")) {
            try {
                cfg.forcing.time = factor_from_string(*t);
            } catch (const InvalidInput& e) {
                frc.fail("time", e.what());
            }
        }
        frc.get("omega", cfg.forcing.omega);
    }
    frc.finish();

    Section bnd(doc, "boundary");
    for (int a = 0; a < d; ++a) {
        for (int s = 0; s < 2; ++s) {
            const std::string key = std::string(1, kAxisNames[a]) + (s ? "_high" : "_low");
            const auto* v = bnd.raw(key);
            if (!v) continue;
            if (*v == "no_flux") continue;
            std::istringstream in(*v);
            std::string word, value, extra;
            in >> word >> value;
            if (word != "pressure" || value.empty() || (in >> extra)) {
                bnd.fail(key, "expected 'no_flux' or 'pressure <value>'");
            }
            cfg.boundary.kind[a][s] = BoundaryKind::pressure;
            cfg.boundary.value[a][s] = bnd.to_double(key, value);
        }
    }
    bnd.finish();

    Section ini(doc, "initial");
    ini.get("amplitude", cfg.initial.amplitude);
    if (const auto* c = ini.raw("center")) cfg.initial.center = ini.vec("center", *c, d);
    ini.get("width", cfg.initial.width);
    if (const auto* ax = ini.raw("axes")) {
        cfg.initial.axes = {false, false, false};
        if (ax->empty()) ini.fail("axes", "expected letters from 'xyz'");
        for (char ch : *ax) {
            const char* pos = std::char_traits<char>::find(kAxisNames, d, ch);
            if (!pos) ini.fail("axes", "expected letters from '" + std::string(kAxisNames, d) + "'");
            cfg.initial.axes[pos - kAxisNames] = true;
        }
    }
    for (int a = d; a < 3; ++a) cfg.initial.axes[a] = false;
    if (d == 2) cfg.initial.center[2] = 0.5;
    if (!(cfg.initial.width > 0.0)) throw InvalidInput("[initial] width must be positive");
    ini.finish();

    Section poi(doc, "poincare");
    if (const auto* c = poi.raw("cell")) {
        if (*c == "crack") cfg.poincare_on_pore = false;
        else if (*c == "pore") cfg.poincare_on_pore = true;
        else poi.fail("cell", "expected crack or pore");
    }
    poi.finish();

    Section out(doc, "output");
    out.get("sample_times", cfg.sample_times);
    out.get("vtk", cfg.write_vtk);
    out.get("masks", cfg.write_masks);
    out.finish();
    for (double t : cfg.sample_times) {
        if (!(t >= 0.0)) throw InvalidInput("[output] sample_times must be >= 0");
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const IoError& e) {
        throw InvalidInput(e.what());
    }
    const auto parent = std::filesystem::path(path).parent_path();
    return parse_config(text, parent.empty() ? std::string(".") : parent.string());
}

void validate_for(const RunConfig& cfg, const std::string& sub) {
    const bool acoustic = cfg.regime.kind == RegimeKind::acoustics;
    if (sub == "cell-tensor") {
        if (acoustic && cfg.has_pore && !cfg.beta) {
            throw InvalidInput("[regime] beta is required for the pore acoustic tensor");
        }
    } else if (sub == "dns") {
        // Geometry feasibility is checked when the domain is built.
    } else if (sub == "darcy") {
        if (acoustic) throw InvalidInput("darcy needs [regime] kind = filtration");
        cfg.regime.validate(true);
        if (cfg.coefficient_source == CoefficientSource::explicit_values && cfg.B1.size() == 0) {
            throw InvalidInput("[coefficients] B1 is required for darcy");
        }
    } else if (sub == "acoustics") {
        if (!acoustic) throw InvalidInput("acoustics needs [regime] kind = acoustics");
        cfg.regime.validate(true);
        if (cfg.coefficient_source == CoefficientSource::explicit_values) {
            if (cfg.Mc.size() == 0 || cfg.Mp.size() == 0) {
                throw InvalidInput("[coefficients] Mc and Mp are required for acoustics");
            }
        } else if (cfg.has_pore && !cfg.beta) {
            throw InvalidInput("[regime] beta is required for the pore acoustic tensor");
        }
        if (cfg.incompressible) throw InvalidInput("incompressible applies to darcy only");
    } else if (sub == "poincare") {
        if (cfg.poincare_on_pore && !cfg.has_pore) {
            throw InvalidInput("[poincare] cell = pore needs a pore cell in [geometry]");
        }
    } else if (sub == "converge") {
        cfg.regime.validate(true);
        if (cfg.eps_list.empty()) throw InvalidInput("[geometry] eps_list is required for converge");
        if (!cfg.has_pore) throw InvalidInput("converge needs a pore cell in [geometry]");
        if (acoustic && !cfg.beta) throw InvalidInput("[regime] beta is required for converge");
        if (cfg.coefficient_source != CoefficientSource::cells) {
            throw InvalidInput("converge computes its own coefficients; use source = cells");
        }
    } else {
        throw InvalidInput("unknown subcommand '" + sub + "'");
    }
}

std::string resolved_config(const RunConfig& cfg) {
    std::ostringstream o;
    const int d = cfg.dimension;
    o << "[geometry]\n";
    o << "dimension = " << d << '\n';
    write_cell(o, "crack", cfg.crack, cfg.crack_mask_file);
    if (cfg.has_pore) write_cell(o, "pore", cfg.pore, cfg.pore_mask_file);
    else o << "pore.shape = none\n";
    o << "eps = " << format_double(cfg.regime.eps) << '\n';
    o << "r = " << format_double(cfg.regime.r) << '\n';
    o << "eps_list = " << list(cfg.eps_list) << '\n';
    o << "domain_resolution = " << cfg.domain_resolution << '\n';

    o << "\n[regime]\n";
    o << "kind = " << to_string(cfg.regime.kind) << '\n';
    o << "tau0 = " << format_double(cfg.regime.tau0) << '\n';
    o << "mu1 = " << format_double(cfg.regime.mu1) << '\n';
    o << "c_f = " << format_double(cfg.regime.c_f) << '\n';
    if (cfg.beta) o << "beta = " << format_double(*cfg.beta) << '\n';
    o << "alpha_tau = " << rule_text(cfg.regime.alpha_tau_rule) << '\n';
    o << "alpha_mu = " << rule_text(cfg.regime.alpha_mu_rule) << '\n';
    o << "alpha_q = " << rule_text(cfg.regime.alpha_q_rule) << '\n';

    o << "\n[solver]\n";
    o << "tol = " << format_double(cfg.cell_options.tol) << '\n';
    o << "inner_tol = " << format_double(cfg.cell_options.inner_tol) << '\n';
    o << "max_outer_iterations = " << cfg.cell_options.max_outer_iterations << '\n';
    o << "max_inner_iterations = " << cfg.cell_options.max_inner_iterations << '\n';
    o << "poincare_tol = " << format_double(cfg.poincare_options.tol) << '\n';
    o << "poincare_max_iterations = " << cfg.poincare_options.max_iterations << '\n';
    o << "dt = " << format_double(cfg.dt) << '\n';
    o << "final_time = " << format_double(cfg.final_time) << '\n';
    o << "macro_resolution = " << cfg.macro_resolution << '\n';
    o << "incompressible = " << (cfg.incompressible ? "true" : "false") << '\n';
    o << "alpha_tau_floor = " << format_double(cfg.alpha_tau_floor) << '\n';

    o << "\n[coefficients]\n";
    if (cfg.coefficient_source == CoefficientSource::cells) {
        o << "source = cells\n";
    } else {
        o << "source = explicit\n";
        if (cfg.B1.size()) o << "B1 = " << matrix_text(cfg.B1) << '\n';
        if (cfg.Mc.size()) o << "Mc = " << matrix_text(cfg.Mc) << '\n';
        if (cfg.Mp.size()) o << "Mp = " << matrix_text(cfg.Mp) << '\n';
        o << "m = " << format_double(cfg.m) << '\n';
        o << "m_c = " << format_double(cfg.m_c) << '\n';
        o << "m_p = " << format_double(cfg.m_p) << '\n';
    }

    o << "\n[forcing]\n";
    o << "preset = " << to_string(cfg.forcing.preset) << '\n';
    if (cfg.forcing.preset == ForcingPreset::constant) {
        o << "vector = " << vec_text(cfg.forcing.vector, d) << '\n';
    }
    if (cfg.forcing.preset == ForcingPreset::rotational ||
        cfg.forcing.preset == ForcingPreset::confined_vortex) {
        o << "amplitude = " << format_double(cfg.forcing.amplitude) << '\n';
    }
    if (cfg.forcing.preset != ForcingPreset::zero) {
        o << "time = " << to_string(cfg.forcing.time) << '\n';
        o << "omega = " << format_double(cfg.forcing.omega) << '\n';
    }

    o << "\n[boundary]\n";
    for (int a = 0; a < d; ++a) {
        for (int s = 0; s < 2; ++s) {
            o << kAxisNames[a] << (s ? "_high" : "_low") << " = ";
            if (cfg.boundary.kind[a][s] == BoundaryKind::pressure) {
                o << "pressure " << format_double(cfg.boundary.value[a][s]) << '\n';
            } else {
                o << "no_flux\n";
            }
        }
    }

    o << "\n[initial]\n";
    o << "amplitude = " << format_double(cfg.initial.amplitude) << '\n';
    o << "center = " << vec_text(cfg.initial.center, d) << '\n';
    o << "width = " << format_double(cfg.initial.width) << '\n';
    std::string axes;
    for (int a = 0; a < d; ++a) {
        if (cfg.initial.axes[a]) axes += kAxisNames[a];
    }
    if (axes.empty()) axes = std::string(kAxisNames, d);
    o << "axes = " << axes << '\n';

    o << "\n[poincare]\n";
    o << "cell = " << (cfg.poincare_on_pore ? "pore" : "crack") << '\n';

    o << "\n[output]\n";
    o << "sample_times = " << list(cfg.sample_times) << '\n';
    o << "vtk = " << (cfg.write_vtk ? "true" : "false") << '\n';
    o << "masks = " << (cfg.write_masks ? "true" : "false") << '\n';
    return o.str();
}

}  // namespace dpm
