#pragma once

#include "ncpb/harmonic.hpp"
#include "ncpb/hyperstate.hpp"

#include <optional>
#include <vector>

namespace ncpb {

/// (+)_j M_{s_j} as block-diagonal matrices, with the unnormalized trace.
struct MultiMatrix {
    std::vector<Index> blocks;
    std::vector<Index> offsets;
    Index size = 0;

    explicit MultiMatrix(std::vector<Index> sizes = {});
    Index dim() const;  // sum s_j^2
    Mat block(const Mat& x, std::size_t j) const;
    Mat from_blocks(const std::vector<Mat>& xs) const;
    double off_block_norm(const Mat& x) const;
    /// Concatenated column-stacked blocks; the HS coordinates of x.
    Vec coords(const Mat& x) const;
    Mat from_coords(const Vec& c) const;
    Mat unit(Index k) const { return from_coords(Vec::Unit(dim(), k)); }
    Mat random_element(Rng& rng) const;
};

/// M -> A given by the images of the GNS basis of M.
struct Inclusion {
    GnsPtr m;
    MultiMatrix a;
    std::vector<Mat> images;  // iota(b_k)

    Mat iota(const Mat& x) const;
    /// c_i with Tr_A(iota(y)) = sum_i c_i Tr(y_i).
    std::vector<double> multiplicities() const;
};

/// Block j of A is U_j ((+)_i x_i (x) 1_{mult[i][j]}) U_j^*; unitaries may be empty.
Inclusion embed_by_multiplicities(const GnsPtr& m, const std::vector<Index>& a_blocks,
                                  const std::vector<std::vector<Index>>& mult, const std::vector<Mat>& unitaries);
/// A = B(L^2(M)), iota = L.
Inclusion embed_left_regular(const GnsPtr& m);

/// A faithful hyperstate zeta(a) = Tr_A(rho a) on an inclusion M in A.
struct InclusionState {
    Inclusion inc;
    Mat rho;
    Mat rho_sqrt;
    Mat log_rho;
    double condition = 1;
    Mat emb;  // isometry L^2(M) -> L^2(A, zeta), hat(x) -> iota(x) 1_zeta

    cd zeta(const Mat& a) const { return (rho * a).trace(); }
    /// a 1_zeta in HS coordinates (a rho^{1/2}).
    Vec vector(const Mat& a) const { return inc.a.coords(a * rho_sqrt); }
    Mat e() const { return emb * emb.adjoint(); }
};

/// Validates iota (unital *-homomorphism), rho > 0 with condition <= 1e12, zeta o iota = tau.
InclusionState build_inclusion(Inclusion inc, Mat rho);
/// rho = iota(d), d central with d_i = w_i / c_i: the trace-like extension of tau.
Mat trace_like_density(const Inclusion& inc);

struct ModularData {
    Mat delta;      // on HS coordinates of L^2(A, zeta)
    Mat log_delta;  // ad(log rho)
    RVec eigenvalues;
    Mat eigenvectors;
    double unit_residual = 0;       // ||Delta 1_zeta - 1_zeta||
    double s_residual = 0;          // max ||J Delta^{1/2} a 1_zeta - a^* 1_zeta||
    double log_residual = 0;        // ||exp(log Delta) - Delta||
    double flow_multiplicative = 0;
    double flow_star = 0;
    double flow_invariance = 0;
};
ModularData modular_data(const InclusionState& s);
/// sigma_t(a) = rho^{it} a rho^{-it}.
Mat modular_flow(const InclusionState& s, const Mat& a, double t);

struct VnEntropy {
    double value = 0;           // -Tr A log A
    double weight_formula = 0;  // -sum ||z_n||^2 log ||z_n||^2
    Index rank = 0;
};
VnEntropy vn_entropy(const Hyperstate& phi);
double vn_entropy_density(const Mat& a);

struct EntropySequence {
    std::vector<double> h;  // h[n-1] = H(phi^{*n})
    double h_estimate = 0;  // min_n H_n / n
    double subadditivity_violation = 0;  // max(H_{m+n} - H_m - H_n, 0)
};
/// Requires regular phi.
EntropySequence entropy_sequence(const Hyperstate& phi, int n);

struct FurstenbergEntropy {
    double value = 0;  // commutator route
    double spectral = 0;
    double finite_difference = 0;
    std::vector<double> truncations;  // spectral route restricted to [1/m, m], m = 1, 2, 4, ...
    double imaginary_part = 0;
    double route_gap = 0;
};
/// Throws NumericalError when the spectral and commutator routes differ by more than 1e-8.
FurstenbergEntropy furstenberg_entropy(const Hyperstate& phi, const InclusionState& s);
FurstenbergEntropy furstenberg_entropy(const Hyperstate& phi, const InclusionState& s, const ModularData& md);

/// Density of phi * zeta: sum_n iota(z_n^*) rho iota(z_n).
Mat stationary_map(const Hyperstate& phi, const Inclusion& inc, const Mat& rho);
double stationarity_residual(const Hyperstate& phi, const InclusionState& s);

struct StationarySolution {
    Mat rho;
    bool faithful = false;
    double residual = 0;
    double entropy = 0;
    Index fixed_dim = 0;  // dim Fix of the dual map on A
    Index free_dim = 0;   // dimension of the stationary family after the constraints
    int newton_steps = 0;
};
/// Stationary rho of maximal von Neumann entropy. Requires regular phi.
StationarySolution stationary_state_solve(const Hyperstate& phi, const Inclusion& inc);

struct AdditivityReport {
    double h_phi = 0, h_psi = 0, h_conv = 0;
    double residual = 0;             // |h_{phi*psi} - h_phi - h_psi|
    std::vector<double> powers;      // h_{psi^{*n}}, n = 1..n_max
    double power_residual = 0;       // max_n |h_{psi^{*n}} - n h_psi|
};
/// Requires regular psi and a psi-stationary zeta (residual <= 1e-9).
AdditivityReport entropy_additivity_check(const Hyperstate& phi, const Hyperstate& psi, const InclusionState& s, int n_max = 4);

struct BoundsReport {
    double h = 0;
    double vn = 0;
    bool stationary = false;
    double fekete = 0;  // min_n H(phi^{*n}) / n when stationary
    bool holds = false;
};
BoundsReport entropy_bounds_check(const Hyperstate& phi, const InclusionState& s, int n_max = 6);

struct GapBound {
    double h = 0;
    double t_value = 0;  // <T 1_zeta, 1_zeta>
    double bound = 0;    // -2 log t_value
    bool holds = false;
    bool contraction = false;
};
/// phi(T) = sum_k <T (a_k^*)^, (a_k^*)^>; requires sum a^* a = sum a a^* = 1.
GapBound entropy_gap_bound(const std::vector<Mat>& family, const InclusionState& s);

struct ZeroEntropy {
    double h = 0;
    Index harmonic_dim = 0;
    Index algebra_dim = 0;
    bool h_zero = false;
    bool fix_equals_m = false;
    bool agree = false;
};
/// Realizes M in B_phi through the boundary's matrix units; requires faithful zeta
/// and a regular strongly generating phi.
ZeroEntropy zero_entropy_check(const Hyperstate& phi, const BoundaryAlgebra& b);
/// The inclusion M -> B_phi with the stationary state, in matrix-unit coordinates.
InclusionState boundary_inclusion(const Hyperstate& phi, const BoundaryAlgebra& b);

}  // namespace ncpb
