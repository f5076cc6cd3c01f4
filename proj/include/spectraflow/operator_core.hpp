#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "spectraflow/metric_graph.hpp"

namespace spectraflow {

using cplx = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// operator with matrix dim 2^|support|; tensor factor j is support[j],
// little-endian (bit 0 = first support site = fastest index)
struct LocalOperator {
	SiteSet support;
	MatrixXc matrix;
};

template <class Scalar>
DenseMatrix<Scalar> kron(const DenseMatrix<Scalar>& A, const DenseMatrix<Scalar>& B) {
	DenseMatrix<Scalar> K(A.rows() * B.rows(), A.cols() * B.cols());
	for (Eigen::Index i = 0; i < A.rows(); ++i)
		for (Eigen::Index j = 0; j < A.cols(); ++j)
			K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
	return K;
}

MatrixXc pauli(char which);  // 'i', 'x', 'y', 'z'

struct PauliTerm {
	cplx coeff;
	std::vector<std::pair<int, char>> ops;  // (site, 'x'|'y'|'z'), distinct sites
};

// full 2^L matrix; site s acts on bit s of the basis index
MatrixXc dense_from_terms(const std::vector<PauliTerm>& terms, int L);
SiteSet term_support(const PauliTerm& term);

// expansion of M over Pauli strings labelled by the given sites; coefficients
// below 1e-14 of the largest are dropped
std::vector<PauliTerm> pauli_decompose(const MatrixXc& M, const SiteSet& sites);

// place M (supported on X, X subset of volume, both sorted) into the volume
MatrixXc embed(const MatrixXc& M, const SiteSet& X, const SiteSet& volume);

// normalized partial trace onto X: Pi_X(A) = (tr_{X^c} A) / 2^{|X^c|},
// the norm-one projection conditional expectation
LocalOperator conditional_expectation(const MatrixXc& A, const SiteSet& X, const SiteSet& volume);

// largest eigenvalue of a Hermitian PSD operator given through matvecs
double lanczos_lambda_max(const std::function<VectorXc(const VectorXc&)>& apply, int dim,
                          std::uint64_t seed = 1234, int max_iter = 120, double tol = 1e-12);
double spectral_norm(const MatrixXc& A);
double commutator_norm(const MatrixXc& A, const MatrixXc& B);

MatrixXc haar_unitary(int dim, std::mt19937_64& rng);

struct DefectEstimate {
	double defect = 0.0;   // ||Pi_X(A) - A||
	double mc_mean = 0.0;  // Haar average of ||[A, 1 (x) U]||, U on X^c
	double mc_se = 0.0;
};
DefectEstimate approximation_defect(const MatrixXc& A, const SiteSet& X, const SiteSet& volume,
                                    int samples, std::uint64_t seed);

// ----- spin-flip sector machinery -----
// Global flip P = prod_x sigma^x. Representatives y in [0, 2^{L-1}) pair with
// the complement ~y; sector vectors are (|y> + s |~y>)/sqrt 2, s = +-1.
// A flip-even operator is block diagonal (b0 on +, b1 on -); a flip-odd
// operator maps between sectors (b0: + -> -, b1: - -> +).
struct SectorBlocks {
	int L = 0;
	bool even = true;
	MatrixXc b0, b1;
};

bool term_flip_even(const PauliTerm& term);
// all terms must share one parity
SectorBlocks flip_sector_blocks(const std::vector<PauliTerm>& terms, int L);
// orthonormal basis columns: y -> (e_y + e_{~y})/sqrt2, then (e_y - e_{~y})/sqrt2
MatrixXc flip_basis(int L);

// ||sum aa* - sum bb*|| for orthonormal families a, b, computed exactly in
// the combined span (both sums are rank-|family| projectors)
double projector_distance(const std::vector<VectorXc>& a, const std::vector<VectorXc>& b);

// algebra on sector-structured operators (blocks track parity composition)
VectorXc sector_apply(const SectorBlocks& A, const VectorXc& x);
SectorBlocks sector_product(const SectorBlocks& A, const SectorBlocks& B);
SectorBlocks sector_adjoint(const SectorBlocks& A);
double sector_norm(const SectorBlocks& A);
// ||AB - BA|| through implicit matvecs, no product matrices formed
double sector_commutator_norm(const SectorBlocks& A, const SectorBlocks& B);
// reassemble in the computational basis (small L diagnostics)
MatrixXc sector_dense(const SectorBlocks& A);
// blocks of embed(M, X, all sites) without forming the 2^L matrix; the
// embedded operator must have definite flip parity (M commutes or
// anticommutes with the flip restricted to X)
SectorBlocks sector_embed(const MatrixXc& M, const SiteSet& X, int L);

}
