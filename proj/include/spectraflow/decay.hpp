#pragma once

#include "spectraflow/metric_graph.hpp"

namespace spectraflow {

// u_a(eta) = exp(-a eta / ln^2 eta), defined for eta > 1, decreasing past e^2
double envelope_u(double a, double eta);
// flattened variant, constant at u_a(e^2) below eta = e^2
double envelope_u_flat(double a, double eta);

// Certified tail bound: for t >= e^4 and a t/ln^2 t >= 2k+2,
//   int_t^inf eta^k u_a(eta) d eta  <=  ((2k+3)/a) t^{2k+2} u_a(t).
// Throws outside the validity region.
double envelope_tail(double a, int k, double t);

enum class FKind { polynomial, exp_weighted, psi_weighted };

// Reproducing decay function on distances. polynomial: F(r) = (1+r)^{-(nu+1)}.
// exp_weighted: e^{-a r} F(r). psi_weighted: u~_mu(theta r) F(theta r) with
// theta = gamma/(8 v_a), the decay class of the flow generator terms.
struct FFunction {
	FKind kind = FKind::polynomial;
	double nu = 1.0;
	double a = 0.0;
	double mu = 0.0;
	double theta = 1.0;
	double norm_F = 0.0;      // filled by calibrate()
	double conv_const = 0.0;  // filled by calibrate()

	double operator()(double r) const;

	static FFunction polynomial(double nu);
	static FFunction exp_weighted(double nu, double a);
	static FFunction psi_weighted(double nu, double mu, double gamma, double v_a);
};

// max_x sum_y F(d(x,y)) on the finite graph
double f_norm(const FFunction& F, const MetricGraph& g);
// minimal C with sum_z F(d(x,z))F(d(z,y)) <= C F(d(x,y)) for all pairs, exhaustive
double convolution_constant(const FFunction& F, const MetricGraph& g);
// fills norm_F and conv_const for the given graph
FFunction calibrate(FFunction F, const MetricGraph& g);

// infinite-chain sum over Z of F(|x|), numeric with tail estimate
double f_norm_chain(const FFunction& F);
// analytic chain bound C_F <= 2^{nu+1} sum_{x in Z} F(|x|)
double convolution_constant_chain_bound(const FFunction& F);

}
