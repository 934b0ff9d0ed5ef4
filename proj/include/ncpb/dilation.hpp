#pragma once

#include "ncpb/linalg.hpp"
#include "ncpb/star_algebra.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ncpb {

using LinearMap = std::function<Mat(const Mat&)>;

/// phi(x) = sum_k K_k^* x K_k restricted to a *-subalgebra A_0 of B(H_0).
struct UcpMap {
    BlockStructure algebra;
    std::vector<Mat> kraus;
    double unital_residual = 0;
    double choi_min = 0;
    double invariance_residual = 0;  // phi(A_0) in A_0

    Index dim() const { return algebra.dim; }
    Mat operator()(const Mat& x) const;
};

/// Validates unitality, complete positivity and invariance of the algebra (1e-10).
/// An empty algebra basis means A_0 = B(H_0).
UcpMap ucp_from_kraus(std::vector<Mat> kraus, const std::vector<Mat>& algebra_basis = {});

/// One Stinespring step for phi on A in B(H), H_new = (+)_s C^{m_s} (x) C^{r_s}.
struct DilationStage {
    Index dim_h = 0;          // dim H_n
    Mat v;                    // V_n: H_{n-1} -> H_n
    BlockStructure prev;      // A_{n-1}
    std::vector<Index> ranks;  // r_s, one per block of A_{n-1}
    BlockStructure algebra;   // A_n in B(H_n)

    struct Residuals {
        double gram_min = 0;        // most negative Gram eigenvalue, relative
        double isometry = 0;        // ||V^* V - 1||
        double relation_a = 0;      // V^* pi(x) V = phi_{n-1}(x)
        double relation_b = 0;      // V^* A_n V inside A_{n-1}
        bool relation_b_onto = false;
        double relation_c = 0;      // phi_n(pi(x)) = pi(phi_{n-1}(x))
        double relation_d = -1;     // across to the next stage; -1 when absent
        double monotonicity = -1;   // ||Q P - P||, P = pi_{n+1}(V_n V_n^*), Q = V_{n+1} V_{n+1}^*
        double central_support = 0;  // min_t ||z_t V||
        double homomorphism = 0;    // pi unital *-homomorphism on a basis
        double closure = 0;         // A_n closed under products (sampled)
        std::optional<double> compression_closure;  // subspace angle, small stages only
    } residuals;

    Mat pi(const Mat& x) const;  // x in A_{n-1}
};

/// phi_prev acts on A (matrix units via `a`) and must be u.c.p.
DilationStage stinespring_step(const BlockStructure& a, const LinearMap& phi_prev, std::uint64_t seed = 7);

struct HarStability {
    std::vector<Index> fix_dims;  // stage 0 .. depth
    std::vector<bool> full_solve;
    double pi_fixed = 0;       // ||phi_n(pi_n(x)) - pi_n(x)|| over x in Fix(phi_{n-1})
    double compression = 0;    // ||V^* pi_n(x) V - x||
    double isometry = 0;       // relative | ||V^* X V|| - ||X|| | over X in Fix(phi_n)
    bool stable = false;
};

struct Dilation {
    UcpMap base;
    std::vector<DilationStage> stages;
    int requested_depth = 0;
    bool truncated = false;
    std::string truncation_reason;
    std::vector<double> bhat;  // bhat[k-1]: max over samples of ||phi_0^k(x) - W_k^* Pi_k(x) W_k||

    /// phi_n on A_n (n = 0 is the base map).
    Mat phi(std::size_t n, const Mat& x) const;
    const BlockStructure& algebra(std::size_t n) const { return n == 0 ? base.algebra : stages[n - 1].algebra; }
};

/// Iterated Stinespring dilation to `depth` stages; stops early (truncated) when
/// a Gram block or H_n would exceed dim_cap.
Dilation bhat_dilate(const UcpMap& phi0, int depth, Index dim_cap = 4096);

/// Fixed spaces per stage and the compression checks between them.
HarStability har_stability_check(const Dilation& d);

}  // namespace ncpb
