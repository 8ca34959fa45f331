#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace txnsim {

enum class FitFamily : std::uint8_t { PowerLaw, Erf, Boundary };

const char* to_string(FitFamily f);

struct FitResult {
    FitFamily family = FitFamily::PowerLaw;
    double A = 0.0;
    double beta = 0.0;
    double alpha = 0.0;  // erf family only
    double rmse = 0.0;   // of the minimized objective (log-space for the power law)
    std::uint32_t n_points = 0;
    bool converged = true;
    std::string domain_tag;
};

using Points = std::vector<std::pair<double, double>>;

double power_model(double c, double A, double beta);          // A*(C-2)^beta
double erf_model(double c, double A, double alpha, double beta);
double boundary_model(double rho, double A, double beta);     // 1 - A*rho^beta

// Linear regression of log r on log(C-2); exact on noiseless power-law data.
// Requires >= 3 points with C > 2 and r > 0 (the caller filters).
FitResult fit_power_law(const Points& points);

// m0(C) = ((A-1)*erf(log10(C-2)/alpha - beta) + (A+1)) / 2 with A in [0,1],
// alpha > 0. Derivative-free least squares: coarse grid multi-start plus
// Nelder-Mead refinement, fixed budgets, fully deterministic. On budget
// exhaustion the result carries best-so-far with converged=false.
FitResult fit_erf(const Points& points);

// m = 1 - A*rho^beta over boundary points in the unit square; used both for
// the m0(rho0) family and for traced phase boundaries.
FitResult fit_boundary(const Points& points);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rmse = 0.0;
    std::uint32_t n_points = 0;
};

// Ordinary least squares of m0 against rho0.
SlopeFit equivalence_slope(const Points& points);

}  // namespace txnsim
