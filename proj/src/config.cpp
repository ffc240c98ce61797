#include "qcd/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace qcd {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) {
        if (!tok.empty() && tok.back() == ',') tok.pop_back();
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
    return x;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
    return x;
}

} // namespace

ConfigMap ConfigMap::parse_text(const std::string& text) {
    ConfigMap cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.kv_[section.empty() ? key : section + "." + key] = val;
    }
    return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

bool ConfigMap::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

std::string ConfigMap::require_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing required config key: " + key);
    return it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : to_double(key, it->second);
}

std::int64_t ConfigMap::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : to_int(key, it->second);
}

std::vector<double> ConfigMap::get_double_list(const std::string& key,
                                               const std::vector<double>& fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<double> out;
    for (const auto& tok : split_tokens(it->second)) out.push_back(to_double(key, tok));
    return out;
}

std::vector<std::int64_t> ConfigMap::get_int_list(
    const std::string& key, const std::vector<std::int64_t>& fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<std::int64_t> out;
    for (const auto& tok : split_tokens(it->second)) out.push_back(to_int(key, tok));
    return out;
}

void ConfigMap::set(const std::string& key, const std::string& value) { kv_[key] = value; }

// ---------------------------------------------------------------------------
// Expression parsing

namespace {

struct Cursor {
    const std::string& s;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!eat(c))
            throw ConfigError("expected '" + std::string(1, c) + "' at position " +
                              std::to_string(pos) + " in '" + s + "'");
    }
    std::string ident() {
        skip_ws();
        std::size_t b = pos;
        while (pos < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            ++pos;
        if (b == pos) throw ConfigError("expected identifier in '" + s + "'");
        return s.substr(b, pos - b);
    }
    double number() {
        skip_ws();
        char* end = nullptr;
        const double v = std::strtod(s.c_str() + pos, &end);
        if (end == s.c_str() + pos) throw ConfigError("expected number in '" + s + "'");
        pos = static_cast<std::size_t>(end - s.c_str());
        return v;
    }
    bool done() {
        skip_ws();
        return pos >= s.size();
    }
};

Distribution parse_dist_expr(Cursor& c) {
    const std::string name = c.ident();
    c.expect('(');
    if (name == "gaussian" || name == "normal") {
        const double mean = c.number();
        c.expect(',');
        const double sd = c.number();
        c.expect(')');
        return Distribution::gaussian(mean, sd);
    }
    if (name == "exponential" || name == "exp") {
        const double rate = c.number();
        c.expect(')');
        return Distribution::exponential(rate);
    }
    if (name == "mixture" || name == "mix") {
        std::vector<double> w;
        std::vector<Distribution> comps;
        do {
            w.push_back(c.number());
            c.expect(':');
            comps.push_back(parse_dist_expr(c));
        } while (c.eat(','));
        c.expect(')');
        return Distribution::mixture(std::move(w), std::move(comps));
    }
    throw ConfigError("unknown distribution '" + name + "'");
}

} // namespace

Distribution parse_distribution(const std::string& text) {
    Cursor c{text};
    Distribution d = parse_dist_expr(c);
    if (!c.done()) throw ConfigError("trailing input in distribution '" + text + "'");
    return d;
}

UncertaintyClass parse_class(const std::string& text) {
    Cursor c{text};
    const std::string name = c.ident();
    c.expect('(');
    if (name == "singleton") {
        Distribution d = parse_dist_expr(c);
        c.expect(')');
        return UncertaintyClass::singleton(std::move(d));
    }
    if (name == "gaussian_band") {
        const double lo = c.number();
        c.expect(',');
        const double hi = c.number();
        c.expect(',');
        const double sd = c.number();
        c.expect(')');
        return UncertaintyClass::gaussian_mean_band(lo, hi, sd);
    }
    if (name == "exp_ray") {
        const double tmin = c.number();
        c.expect(')');
        return UncertaintyClass::exp_rate_ray(tmin);
    }
    if (name == "eps_contamination") {
        Distribution d = parse_dist_expr(c);
        c.expect(',');
        const double eps = c.number();
        c.expect(')');
        return UncertaintyClass::eps_contamination(std::move(d), eps);
    }
    throw ConfigError("unknown uncertainty class '" + name + "'");
}

DetectorFamily parse_family(const std::string& name) {
    if (name == "cusum") return DetectorFamily::cusum;
    if (name == "shiryaev") return DetectorFamily::shiryaev;
    if (name == "sr") return DetectorFamily::sr;
    if (name == "glr") return DetectorFamily::glr;
    throw ConfigError("unknown detector type '" + name + "'");
}

DetectorSpec parse_detector_spec(const ConfigMap& cfg, const std::string& section) {
    DetectorSpec spec;
    spec.family = parse_family(cfg.require_string(section + ".type"));
    spec.eta = cfg.get_double(section + ".eta", 0.0);
    spec.rho = cfg.get_double(section + ".rho", 0.1);
    spec.sr_init = cfg.get_double(section + ".r", 0.0);
    if (cfg.has(section + ".psi"))
        spec.sr_psi = parse_distribution(cfg.require_string(section + ".psi"));
    spec.window = cfg.get_int(section + ".window", 2000);
    spec.theta_lo = cfg.get_double(section + ".theta_lo", 0.0);
    spec.theta_hi = cfg.get_double(section + ".theta_hi", 0.0);
    return spec;
}

} // namespace qcd
