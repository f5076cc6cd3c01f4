#pragma once

#include <functional>
#include <vector>

namespace spectraflow {

struct QuadResult {
	double value = 0.0;
	double error = 0.0;
	int panels = 0;
};

// 15-point Gauss-Kronrod rule with embedded 7-point Gauss error estimate.
QuadResult gk15_panel(const std::function<double(double)>& f, double a, double b);

// Adaptive bisection over caller-supplied initial panels. Oscillatory
// integrands need seed spacing finer than the oscillation scale, otherwise
// the embedded error estimate is meaningless.
QuadResult integrate_adaptive(const std::function<double(double)>& f,
                              const std::vector<double>& seeds,
                              double abs_tol, double rel_tol,
                              int max_panels = 40000);

std::vector<double> linear_seeds(double a, double b, int n);
std::vector<double> geometric_seeds(double a, double b, double first_step, double ratio);
// linear spacing `step` up to mid, then interval lengths stretched by `ratio`
std::vector<double> stretched_seeds(double a, double mid, double b, double step, double ratio);

}
