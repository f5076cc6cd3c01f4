#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "spectraflow/operator_core.hpp"

namespace spectraflow {

// raised when a tracked gap drops below the configured minimum
struct GapClosed : std::runtime_error {
	double s = 0.0;
	double gap = 0.0;
	GapClosed(double s_, double gap_);
};

struct SpectralData {
	Eigen::VectorXd energies;  // ascending
	MatrixXc vectors;          // eigenvector columns, same order
	double lo = 0.0, hi = 0.0;
	double gap = 0.0;
	int sector_first = 0, sector_dim = 0;
	bool interval_set = false;
};

// full eigendecomposition with hermiticity and residual verification
SpectralData diagonalize(const MatrixXc& H);

// select the contiguous index window [first, first+count); records the tight
// enclosing interval and the distance to the complement spectrum; below
// gamma_min throws GapClosed carrying the path position s
SpectralData& track_sector(SpectralData& spec, int first, int count, double gamma_min, double s);

MatrixXc spectral_projection(const SpectralData& spec);

// rotate to the eigenbasis, scale entry (j,k) by f(E_k - E_j), rotate back
MatrixXc multiplier_transform(const SpectralData& spec, const MatrixXc& A,
                              const std::function<cplx(double)>& f);

// tau_t(A) = e^{itH} A e^{-itH}
MatrixXc heisenberg_evolve(const SpectralData& spec, const MatrixXc& A, double t);

// ----- spin-flip blocked engine, for even Hamiltonians at larger L -----
struct SectorSpectralData {
	int L = 0;
	SpectralData s0, s1;  // per-sector eigensystems (tracking fields unused)
	Eigen::VectorXd merged;
	std::vector<std::pair<int, int>> order;  // merged index -> (sector, index)
	double lo = 0.0, hi = 0.0;
	double gap = 0.0;
	int sector_first = 0, sector_dim = 0;
	bool interval_set = false;
};

SectorSpectralData diagonalize_blocked(const std::vector<PauliTerm>& terms, int L);
SectorSpectralData& track_sector(SectorSpectralData& spec, int first, int count,
                                 double gamma_min, double s);

SectorBlocks to_eigenbasis(const SectorSpectralData& spec, const SectorBlocks& A);
SectorBlocks from_eigenbasis(const SectorSpectralData& spec, const SectorBlocks& A);
// entrywise f(E_col - E_row) on blocks already rotated to the eigenbasis
void apply_multiplier_in_eigenbasis(const SectorSpectralData& spec, SectorBlocks& A,
                                    const std::function<cplx(double)>& f);
SectorBlocks multiplier_transform(const SectorSpectralData& spec, const SectorBlocks& A,
                                  const std::function<cplx(double)>& f);
SectorBlocks heisenberg_evolve(const SectorSpectralData& spec, const SectorBlocks& A, double t);
SectorBlocks spectral_projection_blocked(const SectorSpectralData& spec);

}
