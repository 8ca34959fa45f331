#include "txnsim/csv.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "txnsim/version.hpp"

namespace txnsim {

namespace {

namespace fs = std::filesystem;

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write '" + path + "'");
    f << content;
    if (!f)
        throw std::runtime_error("short write to '" + path + "'");
}

std::vector<std::vector<std::string>> read_rows(const std::string& path, const char* header) {
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    std::vector<std::vector<std::string>> rows;
    bool first = true;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (first) {
            first = false;
            if (line != header)
                throw std::runtime_error("'" + path + "': unexpected header '" + line + "'");
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ','))
            cells.push_back(item);
        if (line.back() == ',')
            cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

double cell_num(const std::string& s) {
    if (s.empty() || s == "nan" || s == "-nan")
        return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
}

std::string tag_d(double d) { return "d=" + format_g6(d); }

}  // namespace

void ensure_writable_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path probe = fs::path(dir) / ".write_probe";
    std::ofstream f(probe);
    if (!f) {
        throw std::runtime_error("output directory '" + dir + "' is not writable");
    }
    f.close();
    fs::remove(probe, ec);
}

std::string format_g6(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

void write_cells_csv(const std::string& path, std::vector<CellResult> rows) {
    std::sort(rows.begin(), rows.end(), [](const CellResult& a, const CellResult& b) {
        if (a.density != b.density) return a.density < b.density;
        return a.capacity < b.capacity;
    });
    std::string out = "d,C,seed_base,replications,r0,r1,rho0,m0\n";
    for (const auto& r : rows) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%u,%" PRIu64 ",%u,%s,%s,%s,%s\n",
                      format_g6(r.density).c_str(), r.capacity, r.seed_base, r.replications,
                      format_g6(r.r0).c_str(), format_g6(r.r1).c_str(), format_g6(r.rho0).c_str(),
                      format_g6(r.m0).c_str());
        out += buf;
    }
    write_file(path, out);
}

void write_p0_csv(const std::string& path, std::vector<P0Row> rows) {
    std::sort(rows.begin(), rows.end(), [](const P0Row& a, const P0Row& b) {
        if (a.density != b.density) return a.density < b.density;
        if (a.capacity != b.capacity) return a.capacity < b.capacity;
        return a.p0 < b.p0;
    });
    std::string out = "d,C,p0,r1\n";
    for (const auto& r : rows) {
        out += format_g6(r.density) + "," + std::to_string(r.capacity) + "," + format_g6(r.p0) +
               "," + format_g6(r.r1) + "\n";
    }
    write_file(path, out);
}

void write_boundary_csv(const std::string& path, std::vector<PhasePoint> rows) {
    std::sort(rows.begin(), rows.end(), [](const PhasePoint& a, const PhasePoint& b) {
        if (a.density != b.density) return a.density < b.density;
        if (a.capacity != b.capacity) return a.capacity < b.capacity;
        if (a.rho != b.rho) return a.rho < b.rho;
        if (a.m != b.m) return a.m < b.m;
        return a.label < b.label;
    });
    std::string out = "d,C,rho,m,phase\n";
    for (const auto& r : rows) {
        out += format_g6(r.density) + "," + std::to_string(r.capacity) + "," + format_g6(r.rho) +
               "," + format_g6(r.m) + "," + r.label + "\n";
    }
    write_file(path, out);
}

void write_fits_csv(const std::string& path, std::vector<FitRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const FitRow& a, const FitRow& b) {
        if (a.family != b.family) return a.family < b.family;
        return a.domain_tag < b.domain_tag;
    });
    std::string out = "family,domain_tag,A,beta,alpha,rmse,n_points\n";
    for (const auto& r : rows) {
        out += r.family + "," + r.domain_tag + "," + format_g6(r.A) + "," + format_g6(r.beta) +
               ",";
        if (!std::isnan(r.alpha))
            out += format_g6(r.alpha);
        out += "," + format_g6(r.rmse) + "," + std::to_string(r.n_points) + "\n";
    }
    write_file(path, out);
}

std::vector<CellResult> read_cells_csv(const std::string& path) {
    std::vector<CellResult> out;
    for (const auto& r : read_rows(path, "d,C,seed_base,replications,r0,r1,rho0,m0")) {
        if (r.size() != 8)
            throw std::runtime_error("'" + path + "': malformed row");
        CellResult c;
        c.density = cell_num(r[0]);
        c.capacity = static_cast<std::uint32_t>(std::stoul(r[1]));
        c.seed_base = std::stoull(r[2]);
        c.replications = static_cast<std::uint32_t>(std::stoul(r[3]));
        c.r0 = cell_num(r[4]);
        c.r1 = cell_num(r[5]);
        c.rho0 = cell_num(r[6]);
        c.m0 = cell_num(r[7]);
        c.ok = std::isfinite(c.r0) && std::isfinite(c.r1);
        out.push_back(c);
    }
    return out;
}

std::vector<PhasePoint> read_boundary_csv(const std::string& path) {
    std::vector<PhasePoint> out;
    for (const auto& r : read_rows(path, "d,C,rho,m,phase")) {
        if (r.size() != 5)
            throw std::runtime_error("'" + path + "': malformed row");
        PhasePoint p;
        p.density = cell_num(r[0]);
        p.capacity = static_cast<std::uint32_t>(std::stoul(r[1]));
        p.rho = cell_num(r[2]);
        p.m = cell_num(r[3]);
        p.label = r[4];
        out.push_back(p);
    }
    return out;
}

std::vector<FitRow> read_fits_csv(const std::string& path) {
    std::vector<FitRow> out;
    for (const auto& r : read_rows(path, "family,domain_tag,A,beta,alpha,rmse,n_points")) {
        if (r.size() != 7)
            throw std::runtime_error("'" + path + "': malformed row");
        FitRow f;
        f.family = r[0];
        f.domain_tag = r[1];
        f.A = cell_num(r[2]);
        f.beta = cell_num(r[3]);
        f.alpha = cell_num(r[4]);
        f.rmse = cell_num(r[5]);
        f.n_points = static_cast<std::uint32_t>(std::stoul(r[6]));
        out.push_back(f);
    }
    return out;
}

std::vector<FitRow> compute_fits(const std::vector<CellResult>& cells,
                                 const std::vector<PhasePoint>& boundary) {
    std::vector<FitRow> out;
    auto push = [&out](const FitResult& f, const std::string& tag, const char* family_override =
                                                                       nullptr) {
        FitRow r;
        r.family = family_override ? family_override : to_string(f.family);
        r.domain_tag = tag;
        r.A = f.A;
        r.beta = f.beta;
        r.alpha = f.alpha;
        r.rmse = f.rmse;
        r.n_points = f.n_points;
        out.push_back(r);
    };

    std::set<double> densities;
    for (const auto& c : cells)
        if (c.ok)
            densities.insert(c.density);

    for (double d : densities) {
        Points r0_pts, r1_pts, m0_pts, rho_m;
        for (const auto& c : cells) {
            if (!c.ok || c.density != d)
                continue;
            if (c.capacity > 2 && c.r0 > 0.0 && std::isfinite(c.r0))
                r0_pts.emplace_back(c.capacity, c.r0);
            if (c.capacity > 2 && c.r1 > 0.0 && std::isfinite(c.r1))
                r1_pts.emplace_back(c.capacity, c.r1);
            if (c.capacity > 2 && c.m0 > 0.0 && c.m0 <= 1.0 && std::isfinite(c.m0))
                m0_pts.emplace_back(c.capacity, c.m0);
            if (std::isfinite(c.rho0) && std::isfinite(c.m0) && c.rho0 >= 0.0 && c.rho0 <= 1.0 &&
                c.m0 >= 0.0 && c.m0 <= 1.0)
                rho_m.emplace_back(c.rho0, c.m0);
        }
        if (r0_pts.size() >= 3)
            push(fit_power_law(r0_pts), "r0:" + tag_d(d));
        if (r1_pts.size() >= 3)
            push(fit_power_law(r1_pts), "r1:" + tag_d(d));
        if (m0_pts.size() >= 4)
            push(fit_erf(m0_pts), "m0:" + tag_d(d));
        bool any_rho = false;
        for (const auto& [rho, m] : rho_m)
            any_rho |= rho > 0.0;
        if (rho_m.size() >= 3 && any_rho)
            push(fit_boundary(rho_m), "m0_vs_rho0:" + tag_d(d));
    }

    // Traced boundaries, one fit per (C, d).
    std::map<std::pair<double, std::uint32_t>, Points> traced;
    for (const auto& p : boundary)
        if (p.label == "boundary")
            traced[{p.density, p.capacity}].emplace_back(p.rho, p.m);
    for (const auto& [key, pts] : traced) {
        bool any_rho = false;
        for (const auto& [rho, m] : pts)
            any_rho |= rho > 0.0;
        if (pts.size() >= 3 && any_rho)
            push(fit_boundary(pts),
                 "traced:C=" + std::to_string(key.second) + ":" + tag_d(key.first));
    }

    // Equivalence slope over dense cells (d above the 0.02 sparse borderline).
    Points dense;
    for (const auto& c : cells)
        if (c.ok && c.density > 0.02 && std::isfinite(c.rho0) && std::isfinite(c.m0))
            dense.emplace_back(c.rho0, c.m0);
    std::set<double> xs;
    for (const auto& [x, y] : dense)
        xs.insert(x);
    if (dense.size() >= 2 && xs.size() >= 2) {
        const SlopeFit s = equivalence_slope(dense);
        FitRow r;
        r.family = "equivalence";
        r.domain_tag = "dense";
        r.A = s.intercept;
        r.beta = s.slope;
        r.rmse = s.rmse;
        r.n_points = s.n_points;
        out.push_back(r);
    }
    return out;
}

void write_plot_data(const std::string& outdir, const std::vector<CellResult>& cells,
                     const std::vector<FitRow>& fits) {
    ensure_writable_dir(outdir);
    std::set<double> densities;
    for (const auto& c : cells)
        if (c.ok)
            densities.insert(c.density);

    auto find_fit = [&](const std::string& family, const std::string& tag) -> const FitRow* {
        for (const auto& f : fits)
            if (f.family == family && f.domain_tag == tag)
                return &f;
        return nullptr;
    };
    const fs::path dir(outdir);

    for (double d : densities) {
        std::vector<const CellResult*> row;
        for (const auto& c : cells)
            if (c.ok && c.density == d)
                row.push_back(&c);
        std::sort(row.begin(), row.end(),
                  [](const CellResult* a, const CellResult* b) { return a->capacity < b->capacity; });
        if (row.empty())
            continue;
        const double cmin = row.front()->capacity;
        const double cmax = row.back()->capacity;

        // Figure 2: r0 and r1 vs C with power-law curves.
        {
            const FitRow* f0 = find_fit("power_law", "r0:" + tag_d(d));
            const FitRow* f1 = find_fit("power_law", "r1:" + tag_d(d));
            if (!f0 || !f1)
                throw std::runtime_error("figure-2 for " + tag_d(d) +
                                         ": missing power_law fit (run `fit` first)");
            std::string out = "C,r0_measured,r0_fit,r1_measured,r1_fit\n";
            std::vector<std::pair<double, std::string>> lines;
            for (const auto* c : row) {
                lines.emplace_back(
                    c->capacity,
                    format_g6(c->capacity) + "," + format_g6(c->r0) + "," +
                        format_g6(power_model(c->capacity, f0->A, f0->beta)) + "," +
                        format_g6(c->r1) + "," + format_g6(power_model(c->capacity, f1->A, f1->beta)));
            }
            for (int i = 0; i < 200; ++i) {
                const double c = std::max(cmin, 2.0 + 1e-6) +
                                 (cmax - std::max(cmin, 2.0 + 1e-6)) * i / 199.0;
                lines.emplace_back(c, format_g6(c) + ",," + format_g6(power_model(c, f0->A, f0->beta)) +
                                          ",," + format_g6(power_model(c, f1->A, f1->beta)));
            }
            std::stable_sort(lines.begin(), lines.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [x, s] : lines)
                out += s + "\n";
            write_file((dir / ("figure2_" + tag_d(d) + ".csv")).string(), out);
        }

        // Figure 3: m0 vs C with the erf curve.
        {
            const FitRow* fe = find_fit("erf", "m0:" + tag_d(d));
            if (!fe)
                throw std::runtime_error("figure-3 for " + tag_d(d) +
                                         ": missing erf fit (run `fit` first)");
            std::string out = "C,m0_measured,m0_fit\n";
            std::vector<std::pair<double, std::string>> lines;
            for (const auto* c : row)
                lines.emplace_back(c->capacity,
                                   format_g6(c->capacity) + "," + format_g6(c->m0) + "," +
                                       format_g6(erf_model(c->capacity, fe->A, fe->alpha, fe->beta)));
            for (int i = 0; i < 200; ++i) {
                const double c = std::max(cmin, 2.0 + 1e-6) +
                                 (cmax - std::max(cmin, 2.0 + 1e-6)) * i / 199.0;
                lines.emplace_back(
                    c, format_g6(c) + ",," + format_g6(erf_model(c, fe->A, fe->alpha, fe->beta)));
            }
            std::stable_sort(lines.begin(), lines.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [x, s] : lines)
                out += s + "\n";
            write_file((dir / ("figure3_" + tag_d(d) + ".csv")).string(), out);
        }

        // Figure 5: m0 vs rho0 with the boundary-form curve.
        {
            const FitRow* fb = find_fit("boundary", "m0_vs_rho0:" + tag_d(d));
            if (!fb)
                throw std::runtime_error("figure-5 for " + tag_d(d) +
                                         ": missing boundary fit (run `fit` first)");
            std::string out = "rho0,m0_measured,m0_fit\n";
            std::vector<std::pair<double, std::string>> lines;
            for (const auto* c : row)
                lines.emplace_back(c->rho0, format_g6(c->rho0) + "," + format_g6(c->m0) + "," +
                                                format_g6(boundary_model(c->rho0, fb->A, fb->beta)));
            for (int i = 0; i < 200; ++i) {
                const double rho = i / 199.0;
                lines.emplace_back(rho, format_g6(rho) + ",," +
                                            format_g6(boundary_model(rho, fb->A, fb->beta)));
            }
            std::stable_sort(lines.begin(), lines.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [x, s] : lines)
                out += s + "\n";
            write_file((dir / ("figure5_" + tag_d(d) + ".csv")).string(), out);
        }
    }
    write_file((dir / "figure5_diagonal.csv").string(), "rho,m\n0,1\n1,0\n");
}

void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::string& command, double wall_sec,
                    const std::vector<std::pair<std::string, std::uint64_t>>& seeds,
                    const std::vector<std::string>& notes) {
    std::string out;
    out += "# txnsim manifest\n";
    out += std::string("# tool_version=") + kVersion + "\n";
    out += "# command=" + command + "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "# wall_time_sec=%.3f\n", wall_sec);
    out += buf;
    for (const auto& [what, seed] : seeds) {
        std::snprintf(buf, sizeof buf, "=%" PRIu64 "\n", seed);
        out += "# seed " + what + buf;
    }
    for (const auto& note : notes)
        out += "# note " + note + "\n";
    out += "# resolved configuration:\n";
    out += emit_config(cfg);
    write_file(path, out);
}

}  // namespace txnsim
