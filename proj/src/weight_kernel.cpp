#include "spectraflow/weight_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spectraflow/decay.hpp"
#include "spectraflow/quadrature.hpp"

namespace spectraflow {

namespace {

// sum_{n>=2} 1/(n ln^2 n): direct to 10^6 plus Euler-Maclaurin tail
double ln2_series_tail() {
	static const double S = [] {
		const long R = 1000000;
		double s = 0.0;
		for (long n = R; n >= 2; --n) {
			const double l = std::log(static_cast<double>(n));
			s += 1.0 / (n * l * l);
		}
		const double x = static_cast<double>(R);
		const double l = std::log(x);
		const double f = 1.0 / (x * l * l);
		const double fp = -(l + 2.0) / (x * x * l * l * l);
		return s + 1.0 / l - 0.5 * f + fp / 12.0;
	}();
	return S;
}

// clamped cubic spline second derivatives on a uniform grid
std::vector<double> spline_coeffs(const std::vector<double>& y, double h, double d0, double dn) {
	const int n = static_cast<int>(y.size()) - 1;
	std::vector<double> a(n + 1), b(n + 1), c(n + 1), r(n + 1), m(n + 1);
	b[0] = 2.0;
	c[0] = 1.0;
	r[0] = 6.0 / h * ((y[1] - y[0]) / h - d0);
	for (int i = 1; i < n; ++i) {
		a[i] = 1.0;
		b[i] = 4.0;
		c[i] = 1.0;
		r[i] = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
	}
	a[n] = 1.0;
	b[n] = 2.0;
	r[n] = 6.0 / h * (dn - (y[n] - y[n - 1]) / h);
	for (int i = 1; i <= n; ++i) {  // Thomas
		const double w = a[i] / b[i - 1];
		b[i] -= w * c[i - 1];
		r[i] -= w * r[i - 1];
	}
	m[n] = r[n] / b[n];
	for (int i = n - 1; i >= 0; --i) m[i] = (r[i] - c[i] * m[i + 1]) / b[i];
	return m;
}

}  // namespace

WeightKernel::WeightKernel(double gamma, int n_terms) : gamma_(gamma), N_(n_terms) {
	if (!(gamma > 0.0)) throw std::invalid_argument("WeightKernel: gamma > 0");
	if (n_terms < 2) throw std::invalid_argument("WeightKernel: n_terms >= 2");

	const double a1 = 0.5 * gamma / (1.0 + ln2_series_tail());
	a_nat_.resize(N_);
	a_nat_[0] = a1;
	for (int n = 2; n <= N_; ++n) {
		const double l = std::log(static_cast<double>(n));
		a_nat_[n - 1] = a1 / (n * l * l);
	}
	a_desc_ = a_nat_;
	std::sort(a_desc_.begin(), a_desc_.end(), std::greater<double>());
	support_ = 0.0;
	for (int i = N_ - 1; i >= 0; --i) support_ += a_desc_[i];
	support_ *= 2.0;

	s2_.assign(N_ + 1, 0.0);
	s4_.assign(N_ + 1, 0.0);
	s6_.assign(N_ + 1, 0.0);
	s8_.assign(N_ + 1, 0.0);
	s10_.assign(N_ + 1, 0.0);
	for (int i = N_ - 1; i >= 0; --i) {
		const double a2 = a_desc_[i] * a_desc_[i];
		s2_[i] = s2_[i + 1] + a2;
		s4_[i] = s4_[i + 1] + a2 * a2;
		s6_[i] = s6_[i + 1] + a2 * a2 * a2;
		s8_[i] = s8_[i + 1] + a2 * a2 * a2 * a2;
		s10_[i] = s10_[i + 1] + a2 * a2 * a2 * a2 * a2;
	}

	t_cut_ = 45000.0 / gamma_;

	auto raw = [this](double t) { return std::exp(log_product(t)); };
	const auto seeds = stretched_seeds(0.0, 420.0 / gamma_, t_cut_, 3.0 / gamma_, 1.35);
	QuadResult qn = integrate_adaptive(raw, seeds, 1e-300, 5e-13);
	const double half_integral = qn.value + product_tail(t_cut_, 0);
	c_ = 1.0 / (2.0 * half_integral);

	// one-sided first moment gives ||W||_1 = 2 int_0^inf t w(t) dt
	QuadResult qm = integrate_adaptive([&](double t) { return t * raw(t); }, seeds, 1e-300, 5e-13);
	w1_ = 2.0 * c_ * (qm.value + product_tail(t_cut_, 1));

	// psi(om) = (1 - what(om))/om sampled on a uniform grid, then a clamped
	// cubic spline. Trapezoid sums are alias-free here: the integrands are
	// band-limited to |xi| <= support + om and the grid Nyquist is ~60 gamma.
	const int nt = static_cast<int>(std::ceil(420.0 / 0.1)) ;  // dt = 0.1/gamma
	const double dt = (420.0 / gamma_) / nt;
	std::vector<double> tw(nt + 1), ww(nt + 1);
	for (int i = 0; i <= nt; ++i) {
		tw[i] = i * dt;
		ww[i] = c_ * std::exp(log_product(tw[i]));
	}
	ww[0] *= 0.5;
	ww[nt] *= 0.5;

	const int nom = 2048;
	psi_h_ = support_ / nom;
	psi_y_.assign(nom + 1, 0.0);
	for (int j = 1; j <= nom; ++j) {
		const double om = j * psi_h_;
		double s = 0.0;
		for (int i = 0; i <= nt; ++i) {
			const double sh = std::sin(0.5 * om * tw[i]);
			s += ww[i] * 2.0 * sh * sh;
		}
		psi_y_[j] = 2.0 * dt * s / om;
	}
	double m2 = 0.0, wh = 0.0, whp = 0.0;
	for (int i = 0; i <= nt; ++i) {
		m2 += ww[i] * tw[i] * tw[i];
		wh += ww[i] * std::cos(support_ * tw[i]);
		whp -= ww[i] * tw[i] * std::sin(support_ * tw[i]);
	}
	m2 *= dt;
	wh *= 2.0 * dt;
	whp *= 2.0 * dt;
	const double d0 = m2;  // psi'(0) = int_0^inf t^2 w dt
	const double dn = (-whp * support_ - (1.0 - wh)) / (support_ * support_);
	psi_m_ = spline_coeffs(psi_y_, psi_h_, d0, dn);
}

double WeightKernel::log_product(double t) const {
	t = std::abs(t);
	const size_t idx = static_cast<size_t>(
	    std::partition_point(a_desc_.begin(), a_desc_.end(),
	                         [&](double a) { return a * t >= 0.25; }) -
	    a_desc_.begin());
	double lg = 0.0;
	for (size_t i = 0; i < idx; ++i) {
		const double x = a_desc_[i] * t;
		const double s = std::sin(x) / x;
		if (s == 0.0) return -std::numeric_limits<double>::infinity();
		lg += std::log(std::abs(s));
	}
	const double t2 = t * t, t4 = t2 * t2, t6 = t4 * t2, t8 = t4 * t4, t10 = t8 * t2;
	lg += -(t2 * s2_[idx] / 6.0 + t4 * s4_[idx] / 180.0 + t6 * s6_[idx] / 2835.0 +
	        t8 * s8_[idx] / 37800.0 + t10 * s10_[idx] * (2.0 / 467775.0));
	return 2.0 * lg;
}

double WeightKernel::eval_w(double t) const { return c_ * std::exp(log_product(t)); }

double WeightKernel::product_tail(double T, int k) const {
	double best = std::numeric_limits<double>::infinity();
	double prod_a2 = 1.0;
	for (int m = 1; m <= 6 && m <= N_; ++m) {
		prod_a2 *= a_desc_[m - 1] * a_desc_[m - 1];
		const int p = 2 * m - k - 1;
		if (p < 1) continue;
		best = std::min(best, std::pow(T, -p) / (p * prod_a2));
	}
	return best;
}

std::vector<double> WeightKernel::tail_seeds(double t) const {
	const double knee = 420.0 / gamma_;
	if (t < knee) return stretched_seeds(t, knee, t_cut_, 3.0 / gamma_, 1.35);
	return geometric_seeds(t, t_cut_, std::max(3.0 / gamma_, 0.02 * t), 1.35);
}

double WeightKernel::eval_W(double t) const {
	if (t == 0.0) return 0.5;
	if (t < 0.0) return -eval_W(-t);
	if (t >= t_cut_) return c_ * product_tail(t, 0);  // certified bound region
	QuadResult q = integrate_adaptive([this](double x) { return eval_w(x); },
	                                  tail_seeds(t), 1e-16, 1e-11);
	return q.value + c_ * product_tail(t_cut_, 0);
}

double WeightKernel::eval_I(double t) const {
	if (!(t > 0.0)) throw std::domain_error("eval_I: t > 0 required");
	if (t >= t_cut_) return c_ * product_tail(t, 1);
	QuadResult q = integrate_adaptive([&](double x) { return (x - t) * eval_w(x); },
	                                  tail_seeds(t), 1e-16, 1e-11);
	return q.value + c_ * product_tail(t_cut_, 1);
}

double WeightKernel::psi_spline(double omega) const {
	const int n = static_cast<int>(psi_y_.size()) - 1;
	int i = static_cast<int>(omega / psi_h_);
	i = std::max(0, std::min(i, n - 1));
	const double xl = i * psi_h_, xr = xl + psi_h_;
	const double A = (xr - omega), B = (omega - xl), h = psi_h_;
	return psi_m_[i] * A * A * A / (6.0 * h) + psi_m_[i + 1] * B * B * B / (6.0 * h) +
	       (psi_y_[i] / h - psi_m_[i] * h / 6.0) * A +
	       (psi_y_[i + 1] / h - psi_m_[i + 1] * h / 6.0) * B;
}

std::complex<double> WeightKernel::sigma(double omega) const {
	if (omega == 0.0) return {0.0, 0.0};
	const double am = std::abs(omega);
	if (am >= support_) return {0.0, -1.0 / omega};
	const double sgn = omega > 0.0 ? 1.0 : -1.0;
	return {0.0, -sgn * psi_spline(am)};
}

BoundFunctions reproduce_constants() {
	BoundFunctions b;
	const double e2 = std::exp(2.0);
	auto gW = [&](double eta) { return 35.0 * e2 * std::pow(eta, 4) * envelope_u(2.0 / 7.0, eta) - 0.5; };
	// largest root: scan down from far right until positive, then bisect
	auto largest_root = [](auto f, double hi) {
		double b_ = hi;
		while (f(b_) < 0.0) b_ *= 0.98;
		double a_ = b_;        // f > 0 side
		double c_ = b_ / 0.98; // f < 0 side
		for (int it = 0; it < 200; ++it) {
			const double m = 0.5 * (a_ + c_);
			(f(m) > 0.0 ? a_ : c_) = m;
		}
		return 0.5 * (a_ + c_);
	};
	b.eta_star = largest_root(gW, 1e6);

	double X = 2e5;
	auto integ = [&](double x) { return std::pow(x, 4) * envelope_u(2.0 / 7.0, x); };
	QuadResult q = integrate_adaptive(integ, geometric_seeds(b.eta_star, X, 200.0, 1.25), 1e-300, 1e-12);
	b.K_const = b.eta_star + 70.0 * e2 * (q.value + envelope_tail(2.0 / 7.0, 4, X));

	auto gI = [&](double z) {
		return 130.0 * e2 * std::pow(z, 10) * envelope_u(2.0 / 7.0, z) - 0.5 * b.K_const;
	};
	b.zeta_star = largest_root(gI, 1e7);

	b.eta_bracket_ok = b.eta_star > 14250.0 && b.eta_star < 14251.0;
	b.zeta_bracket_ok = b.zeta_star > 36057.0 && b.zeta_star < 36058.0;
	b.K_within_1pct = std::abs(b.K_const - 14708.0) <= 0.01 * 14708.0;
	return b;
}

double bound_GW(double eta, const BoundFunctions& b) {
	if (eta < 0.0) throw std::domain_error("bound_GW: eta >= 0");
	if (eta <= b.eta_star) return 0.5;
	return 35.0 * std::exp(2.0) * std::pow(eta, 4) * envelope_u(2.0 / 7.0, eta);
}

double bound_GI(double zeta, double gamma, const BoundFunctions& b) {
	if (zeta < 0.0) throw std::domain_error("bound_GI: zeta >= 0");
	if (zeta <= b.zeta_star) return 0.5 * b.K_const / gamma;
	return 130.0 * std::exp(2.0) * std::pow(zeta, 10) * envelope_u(2.0 / 7.0, zeta) / gamma;
}

}
