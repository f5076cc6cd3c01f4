#include "spectraflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace spectraflow {

namespace {

// Kronrod-15 abscissae (positive half) and weights, Gauss-7 weights.
const double xgk[8] = {
	0.991455371120812639206854697526329,
	0.949107912342758524526189684047851,
	0.864864423359769072789712788640926,
	0.741531185599394439863864773280788,
	0.586087235467691130294144838258730,
	0.405845151377397166906606412076961,
	0.207784955007898467600689403773245,
	0.000000000000000000000000000000000};
const double wgk[8] = {
	0.022935322010529224963732008058970,
	0.063092092629978553290700663189204,
	0.104790010322250183839876322541518,
	0.140653259715525918745189590510238,
	0.169004726639267902826583426598550,
	0.190350578064785409913256402421014,
	0.204432940075298892414161999234649,
	0.209482141084727828012999174891714};
const double wg[4] = {
	0.129484966168869693270611432679082,
	0.279705391489276667901467771423780,
	0.381830050505118944950369775488975,
	0.417959183673469387755102040816327};

struct Panel {
	double a, b, value, error;
	bool operator<(const Panel& o) const { return error < o.error; }
};

Panel eval_panel(const std::function<double(double)>& f, double a, double b) {
	const double c = 0.5 * (a + b);
	const double h = 0.5 * (b - a);
	double fv[15];
	fv[7] = f(c);
	for (int j = 0; j < 7; ++j) {
		fv[j] = f(c - h * xgk[j]);
		fv[14 - j] = f(c + h * xgk[j]);
	}
	double resk = wgk[7] * fv[7];
	double resg = wg[3] * fv[7];
	for (int j = 0; j < 7; ++j) {
		resk += wgk[j] * (fv[j] + fv[14 - j]);
		if (j % 2 == 1) resg += wg[(j - 1) / 2] * (fv[j] + fv[14 - j]);
	}
	// QUADPACK-style scaled error estimate
	const double reskh = 0.5 * resk;
	double resasc = wgk[7] * std::abs(fv[7] - reskh);
	for (int j = 0; j < 7; ++j)
		resasc += wgk[j] * (std::abs(fv[j] - reskh) + std::abs(fv[14 - j] - reskh));
	resasc *= std::abs(h);
	double err = std::abs((resk - resg) * h);
	if (resasc != 0.0 && err != 0.0)
		err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
	return {a, b, resk * h, err};
}

}  // namespace

QuadResult gk15_panel(const std::function<double(double)>& f, double a, double b) {
	Panel p = eval_panel(f, a, b);
	return {p.value, p.error, 1};
}

QuadResult integrate_adaptive(const std::function<double(double)>& f,
                              const std::vector<double>& seeds,
                              double abs_tol, double rel_tol, int max_panels) {
	if (seeds.size() < 2) throw std::invalid_argument("integrate_adaptive: need at least one panel");
	std::priority_queue<Panel> heap;
	double total = 0.0, toterr = 0.0;
	for (size_t i = 0; i + 1 < seeds.size(); ++i) {
		if (!(seeds[i] < seeds[i + 1]))
			throw std::invalid_argument("integrate_adaptive: seeds not increasing");
		Panel p = eval_panel(f, seeds[i], seeds[i + 1]);
		total += p.value;
		toterr += p.error;
		heap.push(p);
	}
	int n = static_cast<int>(seeds.size()) - 1;
	while (toterr > std::max(abs_tol, rel_tol * std::abs(total)) && n < max_panels) {
		Panel worst = heap.top();
		heap.pop();
		const double m = 0.5 * (worst.a + worst.b);
		if (m <= worst.a || m >= worst.b) {  // interval at roundoff width
			toterr -= worst.error;
			continue;
		}
		Panel l = eval_panel(f, worst.a, m);
		Panel r = eval_panel(f, m, worst.b);
		total += l.value + r.value - worst.value;
		toterr += l.error + r.error - worst.error;
		heap.push(l);
		heap.push(r);
		++n;
	}
	return {total, toterr, n};
}

std::vector<double> linear_seeds(double a, double b, int n) {
	std::vector<double> s(n + 1);
	for (int i = 0; i <= n; ++i) s[i] = a + (b - a) * i / n;
	return s;
}

std::vector<double> geometric_seeds(double a, double b, double first_step, double ratio) {
	std::vector<double> s{a};
	double step = first_step;
	while (s.back() + step < b) {
		s.push_back(s.back() + step);
		step *= ratio;
	}
	s.push_back(b);
	return s;
}

std::vector<double> stretched_seeds(double a, double mid, double b, double step, double ratio) {
	std::vector<double> s{a};
	while (s.back() + step < mid) s.push_back(s.back() + step);
	if (s.back() < mid) s.push_back(mid);
	double len = step * ratio;
	while (s.back() + len < b) {
		s.push_back(s.back() + len);
		len *= ratio;
	}
	if (s.back() < b) s.push_back(b);
	return s;
}

}
