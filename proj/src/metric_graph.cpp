#include "spectraflow/metric_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spectraflow {

MetricGraph MetricGraph::chain(int L) {
	if (L < 1) throw std::invalid_argument("chain: L >= 1");
	std::vector<int> d(static_cast<size_t>(L) * L);
	for (int i = 0; i < L; ++i)
		for (int j = 0; j < L; ++j) d[static_cast<size_t>(i) * L + j] = std::abs(i - j);
	return MetricGraph(L, std::move(d), false);
}

MetricGraph MetricGraph::periodic_chain(int L) {
	if (L < 1) throw std::invalid_argument("periodic_chain: L >= 1");
	std::vector<int> d(static_cast<size_t>(L) * L);
	for (int i = 0; i < L; ++i)
		for (int j = 0; j < L; ++j) {
			int r = std::abs(i - j);
			d[static_cast<size_t>(i) * L + j] = std::min(r, L - r);
		}
	return MetricGraph(L, std::move(d), true);
}

MetricGraph MetricGraph::grid(int Lx, int Ly) {
	if (Lx < 1 || Ly < 1) throw std::invalid_argument("grid: Lx, Ly >= 1");
	const int n = Lx * Ly;
	std::vector<int> d(static_cast<size_t>(n) * n);
	for (int i = 0; i < n; ++i)
		for (int j = 0; j < n; ++j)
			d[static_cast<size_t>(i) * n + j] =
			    std::abs(i % Lx - j % Lx) + std::abs(i / Lx - j / Lx);
	return MetricGraph(n, std::move(d), false);
}

int MetricGraph::distance(const SiteSet& X, const SiteSet& Y) const {
	if (X.empty() || Y.empty()) throw std::invalid_argument("distance: empty set");
	int best = std::numeric_limits<int>::max();
	for (int x : X)
		for (int y : Y) best = std::min(best, distance(x, y));
	return best;
}

int MetricGraph::diameter() const { return diameter(all_sites()); }

int MetricGraph::diameter(const SiteSet& X) const {
	int d = 0;
	for (int x : X)
		for (int y : X) d = std::max(d, distance(x, y));
	return d;
}

SiteSet MetricGraph::ball(int x, int r) const {
	SiteSet b;
	for (int y = 0; y < n_; ++y)
		if (distance(x, y) <= r) b.push_back(y);
	return b;
}

SiteSet MetricGraph::fatten(const SiteSet& X, int r) const {
	std::vector<char> in(n_, 0);
	for (int x : X)
		for (int y = 0; y < n_; ++y)
			if (distance(x, y) <= r) in[y] = 1;
	SiteSet out;
	for (int y = 0; y < n_; ++y)
		if (in[y]) out.push_back(y);
	return out;
}

SiteSet MetricGraph::complement(const SiteSet& X) const {
	SiteSet out;
	for (int y = 0; y < n_; ++y)
		if (!set_contains(X, y)) out.push_back(y);
	return out;
}

SiteSet MetricGraph::all_sites() const {
	SiteSet out(n_);
	for (int i = 0; i < n_; ++i) out[i] = i;
	return out;
}

double MetricGraph::min_kappa(double nu) const {
	double kappa = 0.0;
	const int dm = diameter();
	for (int x = 0; x < n_; ++x)
		for (int r = 1; r <= std::max(dm, 1); ++r) {
			const double cnt = static_cast<double>(ball(x, r).size());
			kappa = std::max(kappa, cnt / std::pow(static_cast<double>(r), nu));
		}
	return kappa;
}

SiteSet set_union(const SiteSet& a, const SiteSet& b) {
	SiteSet out;
	std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
	return out;
}

SiteSet set_intersection(const SiteSet& a, const SiteSet& b) {
	SiteSet out;
	std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
	return out;
}

SiteSet set_difference(const SiteSet& a, const SiteSet& b) {
	SiteSet out;
	std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
	return out;
}

bool set_contains(const SiteSet& a, int x) {
	return std::binary_search(a.begin(), a.end(), x);
}

bool is_subset(const SiteSet& a, const SiteSet& b) {
	return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}
