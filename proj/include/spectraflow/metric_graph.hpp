#pragma once

#include <vector>

namespace spectraflow {

using SiteSet = std::vector<int>;  // sorted, duplicate-free site indices

// Finite metric graph with integer distances. Site indices follow the
// constructor's enumeration order; operator tensor factors use the same
// order everywhere (site i <-> qubit bit i, little-endian).
class MetricGraph {
public:
	static MetricGraph chain(int L);
	static MetricGraph periodic_chain(int L);
	static MetricGraph grid(int Lx, int Ly);

	int size() const { return n_; }
	int distance(int x, int y) const { return dist_[static_cast<size_t>(x) * n_ + y]; }
	int distance(const SiteSet& X, const SiteSet& Y) const;
	int diameter() const;
	int diameter(const SiteSet& X) const;
	SiteSet ball(int x, int r) const;
	SiteSet fatten(const SiteSet& X, int r) const;
	SiteSet complement(const SiteSet& X) const;
	SiteSet all_sites() const;
	bool is_periodic() const { return periodic_; }

	// minimal kappa with |B_r(x)| <= kappa r^nu for all x and r in 1..diam
	double min_kappa(double nu) const;

private:
	MetricGraph(int n, std::vector<int> dist, bool periodic)
	    : n_(n), dist_(std::move(dist)), periodic_(periodic) {}
	int n_ = 0;
	std::vector<int> dist_;
	bool periodic_ = false;
};

SiteSet set_union(const SiteSet& a, const SiteSet& b);
SiteSet set_intersection(const SiteSet& a, const SiteSet& b);
SiteSet set_difference(const SiteSet& a, const SiteSet& b);
bool set_contains(const SiteSet& a, int x);
bool is_subset(const SiteSet& a, const SiteSet& b);

}
