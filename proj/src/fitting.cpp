#include "txnsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace txnsim {

const char* to_string(FitFamily f) {
    switch (f) {
        case FitFamily::PowerLaw: return "power_law";
        case FitFamily::Erf: return "erf";
        case FitFamily::Boundary: return "boundary";
    }
    return "?";
}

double power_model(double c, double A, double beta) { return A * std::pow(c - 2.0, beta); }

double erf_model(double c, double A, double alpha, double beta) {
    const double t = std::log10(c - 2.0) / alpha - beta;
    return ((A - 1.0) * std::erf(t) + (A + 1.0)) / 2.0;
}

double boundary_model(double rho, double A, double beta) { return 1.0 - A * std::pow(rho, beta); }

namespace {

using Vec = std::vector<double>;

// Deterministic Nelder-Mead with fixed coefficients and iteration budget.
// Returns best point; `value` receives its objective.
Vec nelder_mead(const std::function<double(const Vec&)>& f, Vec start, const Vec& step,
                int max_iter, double ftol, double* value, bool* converged) {
    const std::size_t n = start.size();
    std::vector<Vec> simplex(n + 1, start);
    for (std::size_t i = 0; i < n; ++i)
        simplex[i + 1][i] += step[i];
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        fv[i] = f(simplex[i]);

    *converged = false;
    for (int it = 0; it < max_iter; ++it) {
        // Order: best first, worst last.
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        {
            std::vector<Vec> s2(n + 1);
            std::vector<double> f2(n + 1);
            for (std::size_t i = 0; i <= n; ++i) {
                s2[i] = simplex[idx[i]];
                f2[i] = fv[idx[i]];
            }
            simplex.swap(s2);
            fv.swap(f2);
        }
        if (std::abs(fv[n] - fv[0]) <= ftol * (std::abs(fv[0]) + ftol)) {
            *converged = true;
            break;
        }
        Vec centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                centroid[j] += simplex[i][j] / static_cast<double>(n);
        auto blend = [&](double coef) {
            Vec p(n);
            for (std::size_t j = 0; j < n; ++j)
                p[j] = centroid[j] + coef * (simplex[n][j] - centroid[j]);
            return p;
        };
        const Vec refl = blend(-1.0);
        const double fr = f(refl);
        if (fr < fv[0]) {
            const Vec exp_ = blend(-2.0);
            const double fe = f(exp_);
            if (fe < fr) {
                simplex[n] = exp_;
                fv[n] = fe;
            } else {
                simplex[n] = refl;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            simplex[n] = refl;
            fv[n] = fr;
        } else {
            const Vec con = blend(fr < fv[n] ? -0.5 : 0.5);
            const double fc = f(con);
            if (fc < std::min(fr, fv[n])) {
                simplex[n] = con;
                fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best])
            best = i;
    *value = fv[best];
    return simplex[best];
}

// Multi-restart wrapper: re-seeds a shrinking simplex around the incumbent
// until improvement stalls. Deterministic.
Vec polish(const std::function<double(const Vec&)>& f, Vec start, Vec step, double* value,
           bool* converged) {
    double best_f;
    bool conv;
    Vec best = nelder_mead(f, start, step, 4000, 1e-15, &best_f, &conv);
    for (int restart = 0; restart < 40; ++restart) {
        for (auto& s : step)
            s *= 0.35;
        double v;
        bool c;
        const Vec cand = nelder_mead(f, best, step, 2000, 1e-16, &v, &c);
        conv = conv || c;
        if (v < best_f - 1e-18) {
            best = cand;
            best_f = v;
        } else if (v >= best_f) {
            break;
        }
    }
    *value = best_f;
    *converged = conv;
    return best;
}

double rmse_of(double sse, std::size_t n) { return std::sqrt(sse / static_cast<double>(n)); }

}  // namespace

FitResult fit_power_law(const Points& points) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_power_law: need >= 3 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [c, r] : points) {
        if (c <= 2.0)
            throw std::invalid_argument("fit_power_law: abscissa C <= 2 (log undefined)");
        if (r <= 0.0)
            throw std::invalid_argument("fit_power_law: rate <= 0 (log undefined)");
        const double x = std::log(c - 2.0);
        const double y = std::log(r);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(points.size());
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0)
        throw std::invalid_argument("fit_power_law: degenerate abscissae");
    const double beta = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - beta * sx) / n;
    double sse = 0;
    for (const auto& [c, r] : points) {
        const double e = std::log(r) - (intercept + beta * std::log(c - 2.0));
        sse += e * e;
    }
    FitResult out;
    out.family = FitFamily::PowerLaw;
    out.A = std::exp(intercept);
    out.beta = beta;
    out.alpha = std::numeric_limits<double>::quiet_NaN();
    out.rmse = rmse_of(sse, points.size());
    out.n_points = static_cast<std::uint32_t>(points.size());
    return out;
}

FitResult fit_erf(const Points& points) {
    if (points.size() < 4)
        throw std::invalid_argument("fit_erf: need >= 4 points");
    for (const auto& [c, m] : points) {
        if (c <= 2.0)
            throw std::invalid_argument("fit_erf: abscissa C <= 2");
        if (!(m > 0.0) || m > 1.0)
            throw std::invalid_argument("fit_erf: m0 outside (0, 1]");
    }
    auto sse = [&](const Vec& p) {
        const double A = p[0], alpha = p[1], beta = p[2];
        if (A < 0.0 || A > 1.0 || alpha <= 1e-9)
            return std::numeric_limits<double>::infinity();
        double s = 0;
        for (const auto& [c, m] : points) {
            const double e = erf_model(c, A, alpha, beta) - m;
            s += e * e;
        }
        return s;
    };
    // Coarse deterministic grid, then refine the best starts.
    std::vector<std::pair<double, Vec>> starts;
    for (double A : {0.0, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0})
        for (double alpha : {0.2, 0.35, 0.6, 1.0, 1.8, 3.0})
            for (double beta : {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0})
                starts.emplace_back(sse({A, alpha, beta}), Vec{A, alpha, beta});
    std::sort(starts.begin(), starts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double best_f = std::numeric_limits<double>::infinity();
    Vec best;
    bool conv = false;
    for (std::size_t k = 0; k < 6 && k < starts.size(); ++k) {
        double v;
        bool c;
        const Vec cand = polish(sse, starts[k].second, Vec{0.08, 0.15, 0.3}, &v, &c);
        if (v < best_f) {
            best_f = v;
            best = cand;
            conv = c;
        }
    }
    FitResult out;
    out.family = FitFamily::Erf;
    out.A = best[0];
    out.alpha = best[1];
    out.beta = best[2];
    out.rmse = rmse_of(best_f, points.size());
    out.n_points = static_cast<std::uint32_t>(points.size());
    out.converged = conv;
    return out;
}

FitResult fit_boundary(const Points& points) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_boundary: need >= 3 points");
    bool any_positive_rho = false;
    for (const auto& [rho, m] : points) {
        if (rho < 0.0 || rho > 1.0 || m < 0.0 || m > 1.0)
            throw std::invalid_argument("fit_boundary: point outside the unit square");
        any_positive_rho |= rho > 0.0;
    }
    if (!any_positive_rho)
        throw std::invalid_argument("fit_boundary: all rho are zero, beta unidentifiable");
    auto sse = [&](const Vec& p) {
        const double A = p[0], beta = p[1];
        if (A <= 1e-9 || beta <= 1e-9)
            return std::numeric_limits<double>::infinity();
        double s = 0;
        for (const auto& [rho, m] : points) {
            const double e = boundary_model(rho, A, beta) - m;
            s += e * e;
        }
        return s;
    };
    // Log-linear seed from interior points: log(1-m) = log A + beta log rho.
    double seedA = 1.0, seedB = 1.2;
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (const auto& [rho, m] : points) {
            if (rho <= 0.0 || m >= 1.0)
                continue;
            const double y = std::log(1.0 - m);
            const double x = std::log(rho);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
        const double denom = n * sxx - sx * sx;
        if (n >= 2 && std::abs(denom) > 1e-12) {
            seedB = (n * sxy - sx * sy) / denom;
            seedA = std::exp((sy - seedB * sx) / n);
            if (!(seedB > 1e-6) || !std::isfinite(seedA) || seedA <= 1e-6) {
                seedA = 1.0;
                seedB = 1.2;
            }
        }
    }
    double best_f;
    bool conv;
    const Vec best = polish(sse, Vec{seedA, seedB}, Vec{0.1, 0.2}, &best_f, &conv);
    FitResult out;
    out.family = FitFamily::Boundary;
    out.A = best[0];
    out.beta = best[1];
    out.alpha = std::numeric_limits<double>::quiet_NaN();
    out.rmse = rmse_of(best_f, points.size());
    out.n_points = static_cast<std::uint32_t>(points.size());
    out.converged = conv;
    return out;
}

SlopeFit equivalence_slope(const Points& points) {
    if (points.size() < 2)
        throw std::invalid_argument("equivalence_slope: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(points.size());
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-15)
        throw std::invalid_argument("equivalence_slope: fewer than 2 distinct abscissae");
    SlopeFit out;
    out.slope = (n * sxy - sx * sy) / denom;
    out.intercept = (sy - out.slope * sx) / n;
    double sse = 0;
    for (const auto& [x, y] : points) {
        const double e = y - (out.intercept + out.slope * x);
        sse += e * e;
    }
    out.rmse = rmse_of(sse, points.size());
    out.n_points = static_cast<std::uint32_t>(points.size());
    return out;
}

}  // namespace txnsim
