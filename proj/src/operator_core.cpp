#include "spectraflow/operator_core.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace spectraflow {

namespace {

struct TermMasks {
	cplx amp;        // coeff * i^{#Y}
	unsigned flip;   // X and Y sites
	unsigned sign;   // Z and Y sites
};

TermMasks compile_term(const PauliTerm& term) {
	TermMasks m{term.coeff, 0u, 0u};
	int ny = 0;
	for (auto [site, op] : term.ops) {
		const unsigned bit = 1u << site;
		if ((m.flip & bit) || (m.sign & bit)) throw std::invalid_argument("duplicate site in term");
		switch (op) {
		case 'x': m.flip |= bit; break;
		case 'y': m.flip |= bit; m.sign |= bit; ++ny; break;
		case 'z': m.sign |= bit; break;
		default: throw std::invalid_argument("pauli op must be x, y or z");
		}
	}
	const cplx ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
	m.amp *= ipow[ny % 4];
	return m;
}

inline double parity_sign(unsigned x) { return (std::popcount(x) & 1u) ? -1.0 : 1.0; }

}  // namespace

MatrixXc pauli(char which) {
	MatrixXc m(2, 2);
	switch (which) {
	case 'i': m << 1, 0, 0, 1; break;
	case 'x': m << 0, 1, 1, 0; break;
	case 'y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
	case 'z': m << 1, 0, 0, -1; break;
	default: throw std::invalid_argument("pauli: i, x, y or z");
	}
	return m;
}

SiteSet term_support(const PauliTerm& term) {
	SiteSet s;
	for (auto [site, op] : term.ops) s.push_back(site);
	std::sort(s.begin(), s.end());
	return s;
}

MatrixXc dense_from_terms(const std::vector<PauliTerm>& terms, int L) {
	const long dim = 1L << L;
	MatrixXc A = MatrixXc::Zero(dim, dim);
	for (const auto& t : terms) {
		const TermMasks m = compile_term(t);
		for (long x = 0; x < dim; ++x)
			A(x ^ m.flip, x) += m.amp * parity_sign(static_cast<unsigned>(x) & m.sign);
	}
	return A;
}

MatrixXc embed(const MatrixXc& M, const SiteSet& X, const SiteSet& volume) {
	if (!is_subset(X, volume)) throw std::invalid_argument("embed: X must lie in the volume");
	const int k = static_cast<int>(X.size());
	const int L = static_cast<int>(volume.size());
	if (M.rows() != (1L << k)) throw std::invalid_argument("embed: matrix dim mismatch");
	std::vector<int> pos_in, pos_out;
	for (int j = 0; j < L; ++j) {
		if (set_contains(X, volume[j])) pos_in.push_back(j);
		else pos_out.push_back(j);
	}
	const long ni = 1L << k, no = 1L << (L - k);
	std::vector<long> put_in(ni, 0), put_out(no, 0);
	for (long a = 0; a < ni; ++a)
		for (int b = 0; b < k; ++b)
			if (a >> b & 1) put_in[a] |= 1L << pos_in[b];
	for (long c = 0; c < no; ++c)
		for (int b = 0; b < L - k; ++b)
			if (c >> b & 1) put_out[c] |= 1L << pos_out[b];
	MatrixXc R = MatrixXc::Zero(1L << L, 1L << L);
	for (long c = 0; c < no; ++c)
		for (long b = 0; b < ni; ++b) {
			const long col = put_in[b] | put_out[c];
			for (long a = 0; a < ni; ++a) R(put_in[a] | put_out[c], col) = M(a, b);
		}
	return R;
}

LocalOperator conditional_expectation(const MatrixXc& A, const SiteSet& X, const SiteSet& volume) {
	if (!is_subset(X, volume)) throw std::invalid_argument("conditional_expectation: X in volume");
	const int k = static_cast<int>(X.size());
	const int L = static_cast<int>(volume.size());
	if (A.rows() != (1L << L)) throw std::invalid_argument("conditional_expectation: dim mismatch");
	std::vector<int> pos_in, pos_out;
	for (int j = 0; j < L; ++j) {
		if (set_contains(X, volume[j])) pos_in.push_back(j);
		else pos_out.push_back(j);
	}
	const long ni = 1L << k, no = 1L << (L - k);
	std::vector<long> put_in(ni, 0), put_out(no, 0);
	for (long a = 0; a < ni; ++a)
		for (int b = 0; b < k; ++b)
			if (a >> b & 1) put_in[a] |= 1L << pos_in[b];
	for (long c = 0; c < no; ++c)
		for (int b = 0; b < L - k; ++b)
			if (c >> b & 1) put_out[c] |= 1L << pos_out[b];
	MatrixXc T = MatrixXc::Zero(ni, ni);
	for (long c = 0; c < no; ++c)
		for (long b = 0; b < ni; ++b) {
			const long col = put_in[b] | put_out[c];
			for (long a = 0; a < ni; ++a) T(a, b) += A(put_in[a] | put_out[c], col);
		}
	T /= static_cast<double>(no);
	return {X, std::move(T)};
}

double lanczos_lambda_max(const std::function<VectorXc(const VectorXc&)>& apply, int dim,
                          std::uint64_t seed, int max_iter, double tol) {
	if (dim == 1) {
		VectorXc e(1);
		e(0) = 1.0;
		return std::real(apply(e)(0));
	}
	std::mt19937_64 rng(seed);
	std::normal_distribution<double> g;
	VectorXc v(dim);
	for (int i = 0; i < dim; ++i) v(i) = cplx(g(rng), g(rng));
	v.normalize();
	std::vector<VectorXc> basis;
	std::vector<double> alpha, beta;
	double prev = 0.0;
	for (int it = 0; it < max_iter; ++it) {
		basis.push_back(v);
		VectorXc w = apply(v);
		const double a = std::real(v.dot(w));
		alpha.push_back(a);
		for (int pass = 0; pass < 2; ++pass)
			for (const auto& b : basis) w -= b.dot(w) * b;
		const double nb = w.norm();
		const int kk = static_cast<int>(alpha.size());
		Eigen::MatrixXd T = Eigen::MatrixXd::Zero(kk, kk);
		for (int i = 0; i < kk; ++i) {
			T(i, i) = alpha[i];
			if (i + 1 < kk) T(i, i + 1) = T(i + 1, i) = beta[i];
		}
		const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(T)
		                        .eigenvalues()
		                        .maxCoeff();
		if (nb < 1e-13 * std::max(1.0, std::abs(a))) return lmax;
		if (it > 3 && std::abs(lmax - prev) <= tol * std::max(std::abs(lmax), 1e-300)) return lmax;
		prev = lmax;
		beta.push_back(nb);
		v = w / nb;
		if (static_cast<int>(basis.size()) >= dim) break;
	}
	return prev;
}

double spectral_norm(const MatrixXc& A) {
	if (A.rows() != A.cols()) throw std::invalid_argument("spectral_norm: square only");
	const int n = static_cast<int>(A.rows());
	if (n <= 128) return Eigen::JacobiSVD<MatrixXc>(A).singularValues()(0);
	auto apply = [&](const VectorXc& x) { return VectorXc(A.adjoint() * (A * x)); };
	const double l = lanczos_lambda_max(apply, n);
	return std::sqrt(std::max(0.0, l));
}

double commutator_norm(const MatrixXc& A, const MatrixXc& B) {
	MatrixXc C = A * B;
	C.noalias() -= B * A;
	return spectral_norm(C);
}

MatrixXc haar_unitary(int dim, std::mt19937_64& rng) {
	std::normal_distribution<double> g;
	MatrixXc Z(dim, dim);
	for (int i = 0; i < dim; ++i)
		for (int j = 0; j < dim; ++j) Z(i, j) = cplx(g(rng), g(rng));
	Eigen::HouseholderQR<MatrixXc> qr(Z);
	MatrixXc Q = qr.householderQ();
	MatrixXc R = qr.matrixQR().triangularView<Eigen::Upper>();
	for (int i = 0; i < dim; ++i) {
		const cplx r = R(i, i);
		Q.col(i) *= (r == cplx(0.0) ? 1.0 : r / std::abs(r));
	}
	return Q;
}

DefectEstimate approximation_defect(const MatrixXc& A, const SiteSet& X, const SiteSet& volume,
                                    int samples, std::uint64_t seed) {
	DefectEstimate out;
	LocalOperator proj = conditional_expectation(A, X, volume);
	out.defect = spectral_norm(embed(proj.matrix, X, volume) - A);
	const SiteSet Xc = [&] {
		SiteSet c;
		for (int s : volume)
			if (!set_contains(X, s)) c.push_back(s);
		return c;
	}();
	const int m = static_cast<int>(Xc.size());
	std::mt19937_64 rng(seed);
	double sum = 0.0, sumsq = 0.0;
	for (int s = 0; s < samples; ++s) {
		MatrixXc U = haar_unitary(1 << m, rng);
		MatrixXc Ufull = embed(U, Xc, volume);
		const double c = spectral_norm(A * Ufull - Ufull * A);
		sum += c;
		sumsq += c * c;
	}
	out.mc_mean = sum / samples;
	if (samples > 1) {
		const double var = std::max(0.0, (sumsq - sum * sum / samples) / (samples - 1));
		out.mc_se = std::sqrt(var / samples);
	}
	return out;
}

bool term_flip_even(const PauliTerm& term) {
	int nzy = 0;
	for (auto [site, op] : term.ops)
		if (op == 'z' || op == 'y') ++nzy;
	return nzy % 2 == 0;
}

SectorBlocks flip_sector_blocks(const std::vector<PauliTerm>& terms, int L) {
	if (terms.empty()) throw std::invalid_argument("flip_sector_blocks: no terms");
	SectorBlocks S;
	S.L = L;
	S.even = term_flip_even(terms.front());
	const long half = 1L << (L - 1);
	const unsigned mask = (1u << L) - 1u;
	S.b0 = MatrixXc::Zero(half, half);
	S.b1 = MatrixXc::Zero(half, half);
	for (const auto& t : terms) {
		if (term_flip_even(t) != S.even)
			throw std::invalid_argument("flip_sector_blocks: mixed parity terms");
		const TermMasks m = compile_term(t);
		for (long y = 0; y < half; ++y) {
			const cplx phi = m.amp * parity_sign(static_cast<unsigned>(y) & m.sign);
			const unsigned xp = static_cast<unsigned>(y) ^ m.flip;
			if (xp < half) {
				if (S.even) {
					S.b0(xp, y) += phi;
					S.b1(xp, y) += phi;
				} else {
					S.b0(xp, y) += phi;  // + -> -
					S.b1(xp, y) += phi;  // - -> +
				}
			} else {
				const unsigned rep = xp ^ mask;
				if (S.even) {
					S.b0(rep, y) += phi;
					S.b1(rep, y) -= phi;
				} else {
					S.b0(rep, y) -= phi;  // + -> - picks up -1
					S.b1(rep, y) += phi;  // - -> + picks up +1
				}
			}
		}
	}
	return S;
}

MatrixXc flip_basis(int L) {
	const long dim = 1L << L, half = dim / 2;
	const unsigned mask = static_cast<unsigned>(dim - 1);
	MatrixXc V = MatrixXc::Zero(dim, dim);
	const double r = 1.0 / std::sqrt(2.0);
	for (long y = 0; y < half; ++y) {
		V(y, y) = r;
		V(y ^ mask, y) = r;
		V(y, half + y) = r;
		V(y ^ mask, half + y) = -r;
	}
	return V;
}

double projector_distance(const std::vector<VectorXc>& a, const std::vector<VectorXc>& b) {
	if (a.empty() && b.empty()) return 0.0;
	const long n = a.empty() ? b.front().size() : a.front().size();
	std::vector<VectorXc> basis;
	auto absorb = [&](const VectorXc& v) {
		VectorXc r = v;
		for (const auto& q : basis) r -= (q.adjoint() * v)(0) * q;
		// second pass for orthogonality at roundoff level
		for (const auto& q : basis) r -= (q.adjoint() * r)(0) * q;
		const double nr = r.norm();
		if (nr > 1e-12) basis.push_back(r / nr);
	};
	for (const auto& v : a) absorb(v);
	for (const auto& v : b) absorb(v);
	const int m = static_cast<int>(basis.size());
	if (m == 0) return 0.0;
	MatrixXc Q(n, m);
	for (int j = 0; j < m; ++j) Q.col(j) = basis[static_cast<size_t>(j)];
	MatrixXc M = MatrixXc::Zero(m, m);
	for (const auto& v : a) {
		VectorXc c = Q.adjoint() * v;
		M.noalias() += c * c.adjoint();
	}
	for (const auto& v : b) {
		VectorXc c = Q.adjoint() * v;
		M.noalias() -= c * c.adjoint();
	}
	Eigen::SelfAdjointEigenSolver<MatrixXc> es(M, Eigen::EigenvaluesOnly);
	return es.eigenvalues().cwiseAbs().maxCoeff();
}

static void check_sector_compat(const SectorBlocks& A, const SectorBlocks& B) {
	if (A.L != B.L || A.b0.rows() != B.b0.rows())
		throw std::invalid_argument("sector blocks: size mismatch");
}

// full matrices in the flip basis: even A = diag(b0, b1),
// odd A = [[0, b1], [b0, 0]] with b0 mapping sector + to sector -
SectorBlocks sector_product(const SectorBlocks& A, const SectorBlocks& B) {
	check_sector_compat(A, B);
	SectorBlocks C;
	C.L = A.L;
	C.even = (A.even == B.even);
	if (A.even && B.even) {
		C.b0 = A.b0 * B.b0;
		C.b1 = A.b1 * B.b1;
	} else if (!A.even && !B.even) {
		C.b0 = A.b1 * B.b0;
		C.b1 = A.b0 * B.b1;
	} else if (A.even) {  // even * odd
		C.b0 = A.b1 * B.b0;
		C.b1 = A.b0 * B.b1;
	} else {  // odd * even
		C.b0 = A.b0 * B.b0;
		C.b1 = A.b1 * B.b1;
	}
	return C;
}

SectorBlocks sector_adjoint(const SectorBlocks& A) {
	SectorBlocks C;
	C.L = A.L;
	C.even = A.even;
	if (A.even) {
		C.b0 = A.b0.adjoint();
		C.b1 = A.b1.adjoint();
	} else {
		C.b0 = A.b1.adjoint();
		C.b1 = A.b0.adjoint();
	}
	return C;
}

double sector_norm(const SectorBlocks& A) {
	return std::max(spectral_norm(A.b0), spectral_norm(A.b1));
}

namespace {

// y = A x on the split vector x = [x0; x1]
void sector_apply(const SectorBlocks& A, const VectorXc& x, VectorXc& y) {
	const long h = A.b0.rows();
	if (A.even) {
		y.head(h).noalias() = A.b0 * x.head(h);
		y.tail(h).noalias() = A.b1 * x.tail(h);
	} else {
		y.head(h).noalias() = A.b1 * x.tail(h);
		y.tail(h).noalias() = A.b0 * x.head(h);
	}
}

void sector_apply_adjoint(const SectorBlocks& A, const VectorXc& x, VectorXc& y) {
	const long h = A.b0.rows();
	if (A.even) {
		y.head(h).noalias() = A.b0.adjoint() * x.head(h);
		y.tail(h).noalias() = A.b1.adjoint() * x.tail(h);
	} else {
		y.head(h).noalias() = A.b0.adjoint() * x.tail(h);
		y.tail(h).noalias() = A.b1.adjoint() * x.head(h);
	}
}

}  // namespace

VectorXc sector_apply(const SectorBlocks& A, const VectorXc& x) {
	if (x.size() != 2 * A.b0.rows()) throw std::invalid_argument("sector_apply: size mismatch");
	VectorXc y(x.size());
	sector_apply(A, x, y);
	return y;
}

double sector_commutator_norm(const SectorBlocks& A, const SectorBlocks& B) {
	check_sector_compat(A, B);
	const long dim = 2 * A.b0.rows();
	VectorXc ax(dim), bx(dim), c(dim), t(dim), out(dim);
	auto apply_ctc = [&](const VectorXc& x) {
		sector_apply(B, x, bx);
		sector_apply(A, bx, c);
		sector_apply(A, x, ax);
		sector_apply(B, ax, t);
		c -= t;  // c = (AB - BA) x
		sector_apply_adjoint(A, c, out);
		sector_apply_adjoint(B, c, t);
		VectorXc y(dim);
		sector_apply_adjoint(B, out, y);  // reuse: y = B† A† c
		sector_apply_adjoint(A, t, out);  // out = A† B† c
		return VectorXc(y - out);
	};
	return std::sqrt(std::max(0.0, lanczos_lambda_max(apply_ctc, static_cast<int>(dim))));
}

MatrixXc sector_dense(const SectorBlocks& A) {
	const long h = A.b0.rows(), dim = 2 * h;
	MatrixXc full = MatrixXc::Zero(dim, dim);
	if (A.even) {
		full.topLeftCorner(h, h) = A.b0;
		full.bottomRightCorner(h, h) = A.b1;
	} else {
		full.bottomLeftCorner(h, h) = A.b0;
		full.topRightCorner(h, h) = A.b1;
	}
	MatrixXc V = flip_basis(A.L);
	return V * full * V.adjoint();
}

std::vector<PauliTerm> pauli_decompose(const MatrixXc& M, const SiteSet& sites) {
	const int k = static_cast<int>(sites.size());
	const long dim = 1L << k;
	if (M.rows() != dim || M.cols() != dim)
		throw std::invalid_argument("pauli_decompose: matrix does not match the site count");
	static const char labels[4] = {'i', 'x', 'y', 'z'};
	const long strings = 1L << (2 * k);
	std::vector<cplx> coeffs(static_cast<size_t>(strings));
	double peak = 0.0;
	for (long code = 0; code < strings; ++code) {
		MatrixXc P = MatrixXc::Identity(1, 1);
		for (int j = 0; j < k; ++j) P = kron<cplx>(pauli(labels[(code >> (2 * j)) & 3]), P);
		const cplx c = P.conjugate().cwiseProduct(M).sum() / static_cast<double>(dim);
		coeffs[static_cast<size_t>(code)] = c;
		peak = std::max(peak, std::abs(c));
	}
	std::vector<PauliTerm> out;
	for (long code = 0; code < strings; ++code) {
		const cplx c = coeffs[static_cast<size_t>(code)];
		if (std::abs(c) <= 1e-14 * peak || c == cplx(0.0, 0.0)) continue;
		PauliTerm t;
		t.coeff = c;
		for (int j = 0; j < k; ++j) {
			const char w = labels[(code >> (2 * j)) & 3];
			if (w != 'i') t.ops.emplace_back(sites[static_cast<size_t>(j)], w);
		}
		out.push_back(std::move(t));
	}
	return out;
}

SectorBlocks sector_embed(const MatrixXc& M, const SiteSet& X, int L) {
	const int k = static_cast<int>(X.size());
	if (L < 1) throw std::invalid_argument("sector_embed: L must be positive");
	for (int j = 0; j < k; ++j)
		if (X[static_cast<size_t>(j)] < 0 || X[static_cast<size_t>(j)] >= L ||
		    (j > 0 && X[static_cast<size_t>(j)] <= X[static_cast<size_t>(j - 1)]))
			throw std::invalid_argument("sector_embed: support must be sorted inside [0, L)");
	const long ldim = 1L << k;
	if (M.rows() != ldim || M.cols() != ldim)
		throw std::invalid_argument("sector_embed: matrix does not match the support");
	MatrixXc F = MatrixXc::Identity(1, 1);
	for (int j = 0; j < k; ++j) F = kron<cplx>(pauli('x'), F);
	const MatrixXc FMF = F * M * F;
	const double scale = std::max(1.0, M.norm());
	const bool even = (FMF - M).norm() <= 1e-12 * scale;
	if (!even && (FMF + M).norm() > 1e-12 * scale)
		throw std::invalid_argument("sector_embed: operator has no definite flip parity");
	SectorBlocks S;
	S.L = L;
	S.even = even;
	const long half = 1L << (L - 1);
	const long mask_all = (1L << L) - 1;
	long mask_x = 0;
	for (int x : X) mask_x |= 1L << x;
	const long mask_out = mask_all & ~mask_x;
	S.b0 = MatrixXc::Zero(half, half);
	S.b1 = MatrixXc::Zero(half, half);
	auto local = [&](long b) {
		int v = 0;
		for (int j = 0; j < k; ++j)
			if (b & (1L << X[static_cast<size_t>(j)])) v |= 1 << j;
		return v;
	};
	// row r of the embedded matrix is nonzero only on columns sharing its
	// bits outside X; columns past the representative range fold back with
	// the sign pattern b0 = E + O, b1 = E - O in either parity
	for (long r = 0; r < half; ++r) {
		const long rout = r & mask_out;
		const int rl = local(r);
		long sub = mask_x;
		while (true) {
			const long cfull = rout | sub;
			const cplx v = M(rl, local(cfull));
			if (v != cplx(0.0, 0.0)) {
				if (cfull < half) {
					S.b0(r, cfull) += v;
					S.b1(r, cfull) += v;
				} else {
					const long rep = cfull ^ mask_all;
					S.b0(r, rep) += v;
					S.b1(r, rep) -= v;
				}
			}
			if (sub == 0) break;
			sub = (sub - 1) & mask_x;
		}
	}
	return S;
}

}
