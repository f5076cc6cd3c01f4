#include "spectraflow/spectral_engine.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#ifdef SPECTRAFLOW_HAVE_LAPACKE
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>
#endif

namespace spectraflow {

GapClosed::GapClosed(double s_, double gap_)
    : std::runtime_error([&] {
	      std::ostringstream os;
	      os << "gap closed at s = " << s_ << " (gap " << gap_ << ")";
	      return os.str();
      }()),
      s(s_),
      gap(gap_) {}

namespace {

void solve_hermitian(const MatrixXc& H, Eigen::VectorXd& w, MatrixXc& V) {
	const int n = static_cast<int>(H.rows());
#ifdef SPECTRAFLOW_HAVE_LAPACKE
	if (n >= 128) {
		V = H;
		w.resize(n);
		const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, V.data(), n, w.data());
		if (info == 0) return;
		// fall through to the dense Eigen path on failure
	}
#endif
	Eigen::SelfAdjointEigenSolver<MatrixXc> es(H);
	if (es.info() != Eigen::Success) throw std::runtime_error("diagonalize: eigensolver failed");
	w = es.eigenvalues();
	V = es.eigenvectors();
}

// sampled residual and orthonormality verification, O(k n^2)
void verify_eigensystem(const MatrixXc& H, const Eigen::VectorXd& w, const MatrixXc& V) {
	const int n = static_cast<int>(H.rows());
	const double scale = std::max({1.0, std::abs(w(0)), std::abs(w(n - 1))});
	std::vector<int> idx{0, n - 1};
	for (int k = 1; k <= 6; ++k) idx.push_back((k * (n - 1)) / 7);
	for (int j : idx) {
		const double res = (H * V.col(j) - w(j) * V.col(j)).norm();
		if (res > 1e-10 * scale) throw std::runtime_error("diagonalize: residual check failed");
		if (std::abs(V.col(j).norm() - 1.0) > 1e-10)
			throw std::runtime_error("diagonalize: eigenvector not normalized");
	}
	for (size_t a = 1; a < idx.size(); ++a) {
		const cplx ip = V.col(idx[a - 1]).adjoint() * V.col(idx[a]);
		if (idx[a - 1] != idx[a] && std::abs(ip) > 1e-9)
			throw std::runtime_error("diagonalize: eigenvectors not orthogonal");
	}
}

}  // namespace

SpectralData diagonalize(const MatrixXc& H) {
	if (H.rows() != H.cols()) throw std::invalid_argument("diagonalize: square matrix required");
	if ((H - H.adjoint()).norm() > 1e-12 * std::max(1.0, H.norm()))
		throw std::invalid_argument("diagonalize: matrix not Hermitian");
	SpectralData spec;
	solve_hermitian(H, spec.energies, spec.vectors);
	verify_eigensystem(H, spec.energies, spec.vectors);
	return spec;
}

SpectralData& track_sector(SpectralData& spec, int first, int count, double gamma_min, double s) {
	const int n = static_cast<int>(spec.energies.size());
	if (first < 0 || count < 1 || first + count > n)
		throw std::invalid_argument("track_sector: window out of range");
	spec.sector_first = first;
	spec.sector_dim = count;
	spec.lo = spec.energies(first);
	spec.hi = spec.energies(first + count - 1);
	double gap = std::numeric_limits<double>::infinity();
	if (first > 0) gap = std::min(gap, spec.energies(first) - spec.energies(first - 1));
	if (first + count < n)
		gap = std::min(gap, spec.energies(first + count) - spec.energies(first + count - 1));
	spec.gap = gap;
	spec.interval_set = true;
	if (gap < gamma_min) throw GapClosed(s, gap);
	return spec;
}

MatrixXc spectral_projection(const SpectralData& spec) {
	if (!spec.interval_set) throw std::logic_error("spectral_projection: no tracked interval");
	const auto block = spec.vectors.middleCols(spec.sector_first, spec.sector_dim);
	return block * block.adjoint();
}

MatrixXc multiplier_transform(const SpectralData& spec, const MatrixXc& A,
                              const std::function<cplx(double)>& f) {
	const int n = static_cast<int>(spec.energies.size());
	MatrixXc At = spec.vectors.adjoint() * A * spec.vectors;
	for (int k = 0; k < n; ++k)
		for (int j = 0; j < n; ++j) At(j, k) *= f(spec.energies(k) - spec.energies(j));
	return spec.vectors * At * spec.vectors.adjoint();
}

MatrixXc heisenberg_evolve(const SpectralData& spec, const MatrixXc& A, double t) {
	return multiplier_transform(spec, A,
	                            [t](double de) { return std::exp(cplx(0.0, -t * de)); });
}

SectorSpectralData diagonalize_blocked(const std::vector<PauliTerm>& terms, int L) {
	SectorBlocks H = flip_sector_blocks(terms, L);
	if (!H.even) throw std::invalid_argument("diagonalize_blocked: Hamiltonian must be flip-even");
	SectorSpectralData spec;
	spec.L = L;
	for (int sct : {0, 1}) {
		const MatrixXc& B = sct == 0 ? H.b0 : H.b1;
		if ((B - B.adjoint()).norm() > 1e-12 * std::max(1.0, B.norm()))
			throw std::invalid_argument("diagonalize_blocked: block not Hermitian");
		SpectralData& out = sct == 0 ? spec.s0 : spec.s1;
		solve_hermitian(B, out.energies, out.vectors);
		verify_eigensystem(B, out.energies, out.vectors);
	}
	const int h = static_cast<int>(spec.s0.energies.size());
	spec.merged.resize(2 * h);
	spec.order.reserve(2 * h);
	int i = 0, j = 0, k = 0;
	while (i < h || j < h) {
		if (j >= h || (i < h && spec.s0.energies(i) <= spec.s1.energies(j))) {
			spec.merged(k) = spec.s0.energies(i);
			spec.order.push_back({0, i++});
		} else {
			spec.merged(k) = spec.s1.energies(j);
			spec.order.push_back({1, j++});
		}
		++k;
	}
	return spec;
}

SectorSpectralData& track_sector(SectorSpectralData& spec, int first, int count,
                                 double gamma_min, double s) {
	const int n = static_cast<int>(spec.merged.size());
	if (first < 0 || count < 1 || first + count > n)
		throw std::invalid_argument("track_sector: window out of range");
	spec.sector_first = first;
	spec.sector_dim = count;
	spec.lo = spec.merged(first);
	spec.hi = spec.merged(first + count - 1);
	double gap = std::numeric_limits<double>::infinity();
	if (first > 0) gap = std::min(gap, spec.merged(first) - spec.merged(first - 1));
	if (first + count < n)
		gap = std::min(gap, spec.merged(first + count) - spec.merged(first + count - 1));
	spec.gap = gap;
	spec.interval_set = true;
	if (gap < gamma_min) throw GapClosed(s, gap);
	return spec;
}

SectorBlocks to_eigenbasis(const SectorSpectralData& spec, const SectorBlocks& A) {
	SectorBlocks out;
	out.L = A.L;
	out.even = A.even;
	const MatrixXc& W0 = spec.s0.vectors;
	const MatrixXc& W1 = spec.s1.vectors;
	if (A.even) {
		out.b0 = W0.adjoint() * A.b0 * W0;
		out.b1 = W1.adjoint() * A.b1 * W1;
	} else {
		out.b0 = W1.adjoint() * A.b0 * W0;  // maps sector0 -> sector1
		out.b1 = W0.adjoint() * A.b1 * W1;
	}
	return out;
}

SectorBlocks from_eigenbasis(const SectorSpectralData& spec, const SectorBlocks& A) {
	SectorBlocks out;
	out.L = A.L;
	out.even = A.even;
	const MatrixXc& W0 = spec.s0.vectors;
	const MatrixXc& W1 = spec.s1.vectors;
	if (A.even) {
		out.b0 = W0 * A.b0 * W0.adjoint();
		out.b1 = W1 * A.b1 * W1.adjoint();
	} else {
		out.b0 = W1 * A.b0 * W0.adjoint();
		out.b1 = W0 * A.b1 * W1.adjoint();
	}
	return out;
}

void apply_multiplier_in_eigenbasis(const SectorSpectralData& spec, SectorBlocks& A,
                                    const std::function<cplx(double)>& f) {
	const Eigen::VectorXd& e0 = spec.s0.energies;
	const Eigen::VectorXd& e1 = spec.s1.energies;
	const Eigen::VectorXd& r0 = A.even ? e0 : e1;  // row energies of b0
	const int h = static_cast<int>(e0.size());
	for (int k = 0; k < h; ++k)
		for (int j = 0; j < h; ++j) A.b0(j, k) *= f(e0(k) - r0(j));
	const Eigen::VectorXd& r1 = A.even ? e1 : e0;
	for (int k = 0; k < h; ++k)
		for (int j = 0; j < h; ++j) A.b1(j, k) *= f(e1(k) - r1(j));
}

SectorBlocks multiplier_transform(const SectorSpectralData& spec, const SectorBlocks& A,
                                  const std::function<cplx(double)>& f) {
	SectorBlocks out = to_eigenbasis(spec, A);
	apply_multiplier_in_eigenbasis(spec, out, f);
	return from_eigenbasis(spec, out);
}

SectorBlocks heisenberg_evolve(const SectorSpectralData& spec, const SectorBlocks& A, double t) {
	return multiplier_transform(spec, A,
	                            [t](double de) { return std::exp(cplx(0.0, -t * de)); });
}

SectorBlocks spectral_projection_blocked(const SectorSpectralData& spec) {
	if (!spec.interval_set) throw std::logic_error("spectral_projection: no tracked interval");
	const long h = spec.s0.energies.size();
	SectorBlocks P;
	P.L = spec.L;
	P.even = true;
	P.b0 = MatrixXc::Zero(h, h);
	P.b1 = MatrixXc::Zero(h, h);
	for (int m = spec.sector_first; m < spec.sector_first + spec.sector_dim; ++m) {
		const auto [sct, idx] = spec.order[static_cast<size_t>(m)];
		const MatrixXc& W = sct == 0 ? spec.s0.vectors : spec.s1.vectors;
		MatrixXc& B = sct == 0 ? P.b0 : P.b1;
		B.noalias() += W.col(idx) * W.col(idx).adjoint();
	}
	return P;
}

}
