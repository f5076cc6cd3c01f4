#pragma once

#include <complex>
#include <vector>

namespace spectraflow {

struct BoundFunctions {
	double eta_star = 0.0;
	double zeta_star = 0.0;
	double K_const = 0.0;
	bool eta_bracket_ok = false;   // 14250 < eta* < 14251
	bool zeta_bracket_ok = false;  // 36057 < zeta* < 36058
	bool K_within_1pct = false;    // |K - 14708| <= 1%
};

// eta* and zeta* as the largest roots of the branch-continuity equations
//   35 e^2 eta^4 u_{2/7}(eta) = 1/2,   130 e^2 zeta^10 u_{2/7}(zeta) = K/2,
// K = eta* + 70 e^2 int_{eta*}^inf eta^4 u_{2/7}. The published zeta* bracket
// does not contain the continuity root; the returned flags record that.
BoundFunctions reproduce_constants();

// G^(W): 1/2 up to eta*, then 35 e^2 eta^4 u_{2/7}(eta)
double bound_GW(double eta, const BoundFunctions& b);
// G^(I): (1/gamma) * (K/2 up to zeta*, then 130 e^2 zeta^10 u_{2/7}(zeta))
double bound_GI(double zeta, double gamma, const BoundFunctions& b);

// Band-limited even weight w(t) = c prod_{n<=N} sinc^2(a_n t), a_n = a_1/(n ln^2 n),
// with a_1 solved so the FULL series sums to gamma/2; truncation keeps the
// Fourier support radius 2 sum_{n<=N} a_n strictly below gamma, so the
// multiplier is exactly -i/omega for |omega| >= gamma. Normalized to
// int_R w = 1. Immutable after construction.
class WeightKernel {
public:
	explicit WeightKernel(double gamma, int n_terms = 10000);

	double gamma() const { return gamma_; }
	int n_terms() const { return N_; }
	double a1() const { return a_nat_.front(); }
	const std::vector<double>& a_seq() const { return a_nat_; }
	double support_radius() const { return support_; }  // 2 sum_{n<=N} a_n
	double c_norm() const { return c_; }
	double t_cut() const { return t_cut_; }
	double norm_W1() const { return w1_; }  // int_R |W|

	double eval_w(double t) const;
	// W(t) = int_t^inf w, odd extension, W(0) = 1/2
	double eval_W(double t) const;
	// I(t) = int_t^inf W = int_t^inf (eta - t) w(eta) d eta, t > 0
	double eval_I(double t) const;
	// sigma(om) = int_R W(t) e^{-i om t} dt = -i (1 - what(om))/om
	std::complex<double> sigma(double omega) const;

	// certified bound on int_T^inf t^k prod_n sinc^2(a_n t) dt (raw product, no c)
	double product_tail(double T, int k) const;

	// log prod_n sinc^2(a_n t); exact sines above the Taylor threshold,
	// suffix power sums below
	double log_product(double t) const;

private:
	std::vector<double> tail_seeds(double t) const;
	double psi_spline(double omega) const;

	double gamma_ = 1.0;
	int N_ = 0;
	std::vector<double> a_nat_;
	std::vector<double> a_desc_;
	std::vector<double> s2_, s4_, s6_, s8_, s10_;
	double support_ = 0.0;
	double c_ = 0.0;
	double t_cut_ = 0.0;
	double w1_ = 0.0;

	std::vector<double> psi_y_, psi_m_;  // clamped cubic spline on [0, support_]
	double psi_h_ = 0.0;
};

}
