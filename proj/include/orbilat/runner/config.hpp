#pragma once

// Run configuration: INI text with sections. Comments start with '#' or ';'
// at the beginning of a line or after whitespace. Grammar (all keys optional, defaults shown):
//
//   [run]
//   action = orbifold          ; wilson | orbifold
//   start = cold               ; cold | hot
//
//   [physics]
//   n_colors = 2               ; 2 | 3
//   g2 = 1
//   a = 0.3
//   a_t = 0.3
//   m2 = 1000                  ; orbifold only; m2 and m2_u1 default to each other
//   m2_u1 = 1000
//   include_t2 = true
//
//   [lattice]
//   n_t = 4
//   n_s = 4 4                  ; one extent per spatial direction
//
//   [hmc]
//   tau = 1                    ; trajectory length
//   dt = auto                  ; auto: tuned during the first half of thermalization
//   n_md = auto                ; auto: round(tau / dt)
//   n_traj = 10000
//   n_therm = 1000
//   meas_every = 1
//   seed = 1
//
//   [output]
//   dir = run
//   checkpoint_every = 100
//   polyakov_scatter = false
//   bin_size = 50

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "../geometry.hpp"
#include "../params.hpp"

namespace orbilat {

enum class Action { wilson, orbifold };

inline const char* action_name(Action a) { return a == Action::wilson ? "wilson" : "orbifold"; }

struct RunConfig {
    Action action = Action::orbifold;
    bool hot_start = false;

    PhysParams phys{};
    bool include_t2 = true;

    int n_t = 4;
    std::vector<int> n_s{4, 4};

    double tau = 1.0;
    std::optional<double> dt;  // empty: auto
    std::optional<int> n_md;   // empty: round(tau / dt)
    long n_traj = 10000;
    long n_therm = 1000;
    int meas_every = 1;
    std::uint64_t seed = 1;

    std::string out_dir = "run";
    long checkpoint_every = 100;
    bool polyakov_scatter = false;
    int bin_size = 50;

    LatticeShape shape() const { return LatticeShape(n_t, n_s); }
    bool operator==(const RunConfig&) const = default;
};

// Parse warnings (not errors), e.g. masses given for a Wilson run.
struct ParsedConfig {
    RunConfig config;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"run", {"action", "start"}},
        {"physics", {"n_colors", "g2", "a", "a_t", "m2", "m2_u1", "include_t2"}},
        {"lattice", {"n_t", "n_s"}},
        {"hmc", {"tau", "dt", "n_md", "n_traj", "n_therm", "meas_every", "seed"}},
        {"output", {"dir", "checkpoint_every", "polyakov_scatter", "bin_size"}},
    };
    return keys;
}

inline std::string nearest_key(const std::string& key) {
    std::string best;
    std::size_t best_d = ~std::size_t{0};
    for (const auto& [section, keys] : known_keys())
        for (const auto& k : keys) {
            const auto d = edit_distance(key, k);
            if (d < best_d) {
                best_d = d;
                best = section + "." + k;
            }
        }
    return best;
}

template <class T>
T convert(const std::string& where, const std::string& text);

template <>
inline double convert<double>(const std::string& where, const std::string& text) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(where + ": expected a number, got '" + text + "'");
}

template <>
inline long convert<long>(const std::string& where, const std::string& text) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(text, &pos);
        if (pos == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(where + ": expected an integer, got '" + text + "'");
}

template <>
inline std::uint64_t convert<std::uint64_t>(const std::string& where, const std::string& text) {
    try {
        std::size_t pos = 0;
        if (!text.empty() && text[0] != '-') {
            const unsigned long long v = std::stoull(text, &pos, 0);
            if (pos == text.size()) return v;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError(where + ": expected an unsigned 64-bit integer, got '" + text + "'");
}

template <>
inline bool convert<bool>(const std::string& where, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(where + ": expected true or false, got '" + text + "'");
}

} // namespace detail

inline ParsedConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::string stripped;
    {
        std::istringstream lines(text);
        std::string line;
        while (std::getline(lines, line)) {
            for (std::size_t i = 1; i < line.size(); ++i)
                if ((line[i] == ';' || line[i] == '#') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
                    line.erase(i);
                    break;
                }
            stripped += line + "\n";
        }
    }
    try {
        std::istringstream in(stripped);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }

    const auto& known = detail::known_keys();
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("config: key '" + section + "' outside any section (nearest valid key: " +
                              detail::nearest_key(section) + ")");
        const auto it = known.find(section);
        if (it == known.end()) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : body)
            if (!it->second.count(key))
                throw ConfigError("config: unknown key '" + key + "' in [" + section +
                                  "] (nearest valid key: " + detail::nearest_key(key) + ")");
    }

    auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
        const auto sec = tree.get_child_optional(section);
        if (!sec) return std::nullopt;
        const auto v = sec->get_optional<std::string>(key);
        if (!v) return std::nullopt;
        return *v;
    };
    auto read = [&]<class T>(const std::string& section, const std::string& key, T& out) {
        if (const auto v = get(section, key)) out = detail::convert<T>(section + "." + key, *v);
    };

    ParsedConfig pc;
    RunConfig& c = pc.config;

    if (const auto v = get("run", "action")) {
        if (*v == "wilson")
            c.action = Action::wilson;
        else if (*v == "orbifold")
            c.action = Action::orbifold;
        else
            throw ConfigError("run.action: expected wilson or orbifold, got '" + *v + "'");
    }
    if (const auto v = get("run", "start")) {
        if (*v != "cold" && *v != "hot") throw ConfigError("run.start: expected cold or hot, got '" + *v + "'");
        c.hot_start = *v == "hot";
    }

    long n_colors = c.phys.n_colors;
    read.operator()<long>("physics", "n_colors", n_colors);
    if (n_colors != 2 && n_colors != 3) throw ConfigError("physics.n_colors: only 2 and 3 are supported");
    c.phys.n_colors = int(n_colors);
    read.operator()<double>("physics", "g2", c.phys.g2);
    read.operator()<double>("physics", "a", c.phys.a);
    read.operator()<double>("physics", "a_t", c.phys.a_t);
    if (!(c.phys.g2 > 0) || !(c.phys.a > 0) || !(c.phys.a_t > 0))
        throw ConfigError("physics.g2, physics.a and physics.a_t must be positive");
    std::optional<double> m2, m2_u1;
    if (const auto v = get("physics", "m2")) m2 = detail::convert<double>("physics.m2", *v);
    if (const auto v = get("physics", "m2_u1")) m2_u1 = detail::convert<double>("physics.m2_u1", *v);
    if (c.action == Action::wilson) {
        if (m2 || m2_u1) pc.warnings.push_back("physics.m2 / physics.m2_u1 are ignored for a wilson run");
        c.phys.m2 = 0.0;
        c.phys.m2_u1 = 0.0;
    } else {
        const double fallback = 1000.0;
        c.phys.m2 = m2 ? *m2 : (m2_u1 ? *m2_u1 : fallback);
        c.phys.m2_u1 = m2_u1 ? *m2_u1 : c.phys.m2;
        if (c.phys.m2 < 0 || c.phys.m2_u1 < 0) throw ConfigError("physics.m2 and physics.m2_u1 must be >= 0");
    }
    read.operator()<bool>("physics", "include_t2", c.include_t2);

    long n_t = c.n_t;
    read.operator()<long>("lattice", "n_t", n_t);
    c.n_t = int(n_t);
    if (const auto v = get("lattice", "n_s")) {
        std::string s = *v;
        for (auto& ch : s)
            if (ch == ',') ch = ' ';
        std::istringstream in(s);
        c.n_s.clear();
        std::string tok;
        while (in >> tok) c.n_s.push_back(int(detail::convert<long>("lattice.n_s", tok)));
    }
    c.phys.spatial_dims = int(c.n_s.size());
    (void)c.shape();  // validates extents

    read.operator()<double>("hmc", "tau", c.tau);
    if (!(c.tau > 0)) throw ConfigError("hmc.tau must be positive");
    if (const auto v = get("hmc", "dt"); v && *v != "auto") {
        c.dt = detail::convert<double>("hmc.dt", *v);
        if (!(*c.dt > 0)) throw ConfigError("hmc.dt must be positive");
    }
    if (const auto v = get("hmc", "n_md"); v && *v != "auto") {
        const long n = detail::convert<long>("hmc.n_md", *v);
        if (n < 1) throw ConfigError("hmc.n_md must be >= 1");
        c.n_md = int(n);
    }
    read.operator()<long>("hmc", "n_traj", c.n_traj);
    read.operator()<long>("hmc", "n_therm", c.n_therm);
    long meas = c.meas_every;
    read.operator()<long>("hmc", "meas_every", meas);
    c.meas_every = int(meas);
    read.operator()<std::uint64_t>("hmc", "seed", c.seed);
    if (c.n_traj < 0 || c.n_therm < 0) throw ConfigError("hmc.n_traj and hmc.n_therm must be >= 0");
    if (c.meas_every < 1) throw ConfigError("hmc.meas_every must be >= 1");

    if (const auto v = get("output", "dir")) c.out_dir = *v;
    read.operator()<long>("output", "checkpoint_every", c.checkpoint_every);
    if (c.checkpoint_every < 1) throw ConfigError("output.checkpoint_every must be >= 1");
    read.operator()<bool>("output", "polyakov_scatter", c.polyakov_scatter);
    long bin = c.bin_size;
    read.operator()<long>("output", "bin_size", bin);
    if (bin < 1) throw ConfigError("output.bin_size must be >= 1");
    c.bin_size = int(bin);
    return pc;
}

inline ParsedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// Canonical text: every field, fixed order, doubles at full precision.
inline std::string serialize_config(const RunConfig& c) {
    using detail::fmt_double;
    std::ostringstream o;
    o << "[run]\n";
    o << "action = " << action_name(c.action) << "\n";
    o << "start = " << (c.hot_start ? "hot" : "cold") << "\n";
    o << "\n[physics]\n";
    o << "n_colors = " << c.phys.n_colors << "\n";
    o << "g2 = " << fmt_double(c.phys.g2) << "\n";
    o << "a = " << fmt_double(c.phys.a) << "\n";
    o << "a_t = " << fmt_double(c.phys.a_t) << "\n";
    if (c.action == Action::orbifold) {
        o << "m2 = " << fmt_double(c.phys.m2) << "\n";
        o << "m2_u1 = " << fmt_double(c.phys.m2_u1) << "\n";
    }
    o << "include_t2 = " << (c.include_t2 ? "true" : "false") << "\n";
    o << "\n[lattice]\n";
    o << "n_t = " << c.n_t << "\n";
    o << "n_s =";
    for (int n : c.n_s) o << " " << n;
    o << "\n";
    o << "\n[hmc]\n";
    o << "tau = " << fmt_double(c.tau) << "\n";
    o << "dt = " << (c.dt ? fmt_double(*c.dt) : std::string("auto")) << "\n";
    o << "n_md = " << (c.n_md ? std::to_string(*c.n_md) : std::string("auto")) << "\n";
    o << "n_traj = " << c.n_traj << "\n";
    o << "n_therm = " << c.n_therm << "\n";
    o << "meas_every = " << c.meas_every << "\n";
    o << "seed = " << c.seed << "\n";
    o << "\n[output]\n";
    o << "dir = " << c.out_dir << "\n";
    o << "checkpoint_every = " << c.checkpoint_every << "\n";
    o << "polyakov_scatter = " << (c.polyakov_scatter ? "true" : "false") << "\n";
    o << "bin_size = " << c.bin_size << "\n";
    return o.str();
}

// FNV-1a, 64 bit
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t config_hash(const RunConfig& c) { return fnv1a64(serialize_config(c)); }

inline std::string hex64(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// splitmix64 finaliser over (base, index): independent, reproducible child seeds
inline std::uint64_t hash64(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace orbilat
