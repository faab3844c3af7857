#pragma once

// CSV streams. Every file opens with its generating config as '#' comment
// lines between "# config begin" and "# config end", followed by metadata
// comments and one header row.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "../observables.hpp"
#include "config.hpp"

namespace orbilat {

inline const std::vector<std::string>& observable_columns() {
    static const std::vector<std::string> cols = {"traj",     "dh",       "accepted", "plaq_z",
                                                  "plaq_u_spatial", "plaq_u_temporal", "tr_w_dev", "re_det_u",
                                                  "im_det_u", "re_p",     "im_p",     "abs_p"};
    return cols;
}

inline std::string config_comment_block(const RunConfig& c) {
    std::ostringstream o;
    o << "# config begin\n";
    std::istringstream in(serialize_config(c));
    std::string line;
    while (std::getline(in, line)) o << "# " << line << "\n";
    o << "# config end\n";
    o << "# config_hash = " << hex64(config_hash(c)) << "\n";
    return o.str();
}

inline std::string csv_row(long traj, double dh, bool accepted, const ObservableSnapshot& s) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", traj, dh,
                  accepted ? 1 : 0, s.plaq_z, s.plaq_u_spatial, s.plaq_u_temporal, s.tr_w_dev, s.re_det_u,
                  s.im_det_u, s.re_p, s.im_p, s.abs_p);
    return buf;
}

inline std::string polyakov_row(long traj, const ObservableSnapshot& s) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g\n", traj, s.re_p, s.im_p);
    return buf;
}

// Drops data rows whose leading trajectory index is >= next_traj; comments
// and the header row are kept.
inline void truncate_csv(const std::filesystem::path& path, long next_traj) {
    if (!std::filesystem::exists(path)) return;
    std::ifstream in(path);
    std::string kept, line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#' || !header_seen) {
            if (line[0] != '#') header_seen = true;
            kept += line + "\n";
            continue;
        }
        const long traj = std::stol(line.substr(0, line.find(',')));
        if (traj < next_traj) kept += line + "\n";
    }
    in.close();
    std::ofstream out(path, std::ios::trunc);
    out << kept;
}

// A run directory read back: its config and named columns.
struct RunData {
    std::filesystem::path dir;
    RunConfig config;
    std::string config_hash;
    std::map<std::string, std::vector<double>> columns;
    std::size_t rows = 0;

    const std::vector<double>& column(const std::string& name) const {
        const auto it = columns.find(name);
        if (it == columns.end()) throw ConfigError("no column '" + name + "' in " + (dir / "observables.csv").string());
        return it->second;
    }
};

inline RunData read_run(const std::filesystem::path& dir) {
    const auto path = dir / "observables.csv";
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    RunData r;
    r.dir = dir;
    std::string line, cfg_text;
    bool in_cfg = false, have_cfg = false;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line == "# config begin") {
                in_cfg = true;
            } else if (line == "# config end") {
                in_cfg = false;
                have_cfg = true;
            } else if (in_cfg) {
                cfg_text += (line.size() > 2 ? line.substr(2) : std::string()) + "\n";
            } else if (line.rfind("# config_hash = ", 0) == 0) {
                r.config_hash = line.substr(16);
            }
            continue;
        }
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        if (header.empty()) {
            header = fields;
            for (const auto& h : header) r.columns[h];
            continue;
        }
        if (fields.size() != header.size()) throw ConfigError("malformed row in " + path.string() + ": " + line);
        for (std::size_t i = 0; i < fields.size(); ++i) r.columns[header[i]].push_back(std::stod(fields[i]));
        ++r.rows;
    }
    if (!have_cfg) throw ConfigError(path.string() + " carries no embedded config");
    r.config = parse_config(cfg_text).config;
    return r;
}

} // namespace orbilat
