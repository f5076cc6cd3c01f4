#include "spectraflow/decay.hpp"

#include <cmath>
#include <stdexcept>

#include "spectraflow/quadrature.hpp"

namespace spectraflow {

double envelope_u(double a, double eta) {
	if (!(eta > 1.0)) throw std::domain_error("envelope_u: eta > 1 required");
	const double l = std::log(eta);
	return std::exp(-a * eta / (l * l));
}

double envelope_u_flat(double a, double eta) {
	const double e2 = std::exp(2.0);
	return envelope_u(a, eta < e2 ? e2 : eta);
}

double envelope_tail(double a, int k, double t) {
	if (k < 0) throw std::domain_error("envelope_tail: k >= 0");
	if (!(a > 0.0)) throw std::domain_error("envelope_tail: a > 0");
	if (!(t >= std::exp(4.0))) throw std::domain_error("envelope_tail: t >= e^4 required");
	const double l = std::log(t);
	if (!(a * t / (l * l) >= 2.0 * k + 2.0))
		throw std::domain_error("envelope_tail: a t/ln^2 t >= 2k+2 required");
	// exp-log form, t^{2k+2} alone can overflow
	return std::exp(std::log((2.0 * k + 3.0) / a) + (2.0 * k + 2.0) * l - a * t / (l * l));
}

double FFunction::operator()(double r) const {
	if (r < 0.0) throw std::domain_error("FFunction: r >= 0 required");
	switch (kind) {
	case FKind::polynomial:
		return std::pow(1.0 + r, -(nu + 1.0));
	case FKind::exp_weighted:
		return std::exp(-a * r) * std::pow(1.0 + r, -(nu + 1.0));
	case FKind::psi_weighted: {
		const double x = theta * r;
		return envelope_u_flat(mu, x) * std::pow(1.0 + x, -(nu + 1.0));
	}
	}
	return 0.0;
}

FFunction FFunction::polynomial(double nu) {
	FFunction F;
	F.kind = FKind::polynomial;
	F.nu = nu;
	return F;
}

FFunction FFunction::exp_weighted(double nu, double a) {
	FFunction F;
	F.kind = FKind::exp_weighted;
	F.nu = nu;
	F.a = a;
	return F;
}

FFunction FFunction::psi_weighted(double nu, double mu, double gamma, double v_a) {
	FFunction F;
	F.kind = FKind::psi_weighted;
	F.nu = nu;
	F.mu = mu;
	F.theta = gamma / (8.0 * v_a);
	return F;
}

double f_norm(const FFunction& F, const MetricGraph& g) {
	double best = 0.0;
	for (int x = 0; x < g.size(); ++x) {
		double s = 0.0;
		for (int y = 0; y < g.size(); ++y) s += F(g.distance(x, y));
		best = std::max(best, s);
	}
	return best;
}

double convolution_constant(const FFunction& F, const MetricGraph& g) {
	const int n = g.size();
	std::vector<double> Fd(static_cast<size_t>(n) * n);
	for (int x = 0; x < n; ++x)
		for (int y = 0; y < n; ++y) Fd[static_cast<size_t>(x) * n + y] = F(g.distance(x, y));
	double best = 0.0;
	for (int x = 0; x < n; ++x)
		for (int y = 0; y < n; ++y) {
			double s = 0.0;
			for (int z = 0; z < n; ++z)
				s += Fd[static_cast<size_t>(x) * n + z] * Fd[static_cast<size_t>(z) * n + y];
			best = std::max(best, s / Fd[static_cast<size_t>(x) * n + y]);
		}
	return best;
}

FFunction calibrate(FFunction F, const MetricGraph& g) {
	F.norm_F = f_norm(F, g);
	F.conv_const = convolution_constant(F, g);
	return F;
}

double f_norm_chain(const FFunction& F) {
	switch (F.kind) {
	case FKind::polynomial: {
		double s = 0.0;
		const long R = 1000000;
		for (long r = R; r >= 1; --r) s += std::pow(1.0 + r, -(F.nu + 1.0));
		s += std::pow(1.0 + R, -F.nu) / F.nu;  // integral tail
		return 1.0 + 2.0 * s;
	}
	case FKind::exp_weighted: {
		double s = 0.0;
		for (long r = 1; r < 100000000; ++r) {
			const double term = F(static_cast<double>(r));
			s += term;
			if (term < 1e-18 * (1.0 + s)) break;
		}
		return 1.0 + 2.0 * s;
	}
	case FKind::psi_weighted: {
		// modest direct sum, then integral majorant of the decreasing remainder
		const long R0 = static_cast<long>(std::ceil(std::exp(2.0) / F.theta)) + 2;
		double s = 0.0;
		for (long r = 1; r <= R0; ++r) s += F(static_cast<double>(r));
		double X = F.theta * R0;
		while (envelope_u(F.mu, X) > 1e-30) X *= 1.5;
		auto fx = [&](double x) { return envelope_u_flat(F.mu, x) * std::pow(1.0 + x, -(F.nu + 1.0)); };
		QuadResult q = integrate_adaptive(fx, geometric_seeds(F.theta * R0, X, F.theta * R0 * 0.1, 1.3), 1e-14, 1e-10);
		double tail = q.value + envelope_tail(F.mu, 0, X);
		return 1.0 + 2.0 * (s + tail / F.theta);
	}
	}
	return 0.0;
}

double convolution_constant_chain_bound(const FFunction& F) {
	return std::pow(2.0, F.nu + 1.0) * f_norm_chain(F);
}

}
