#pragma once

#include "ncpb/hyperstate.hpp"
#include "ncpb/star_algebra.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ncpb {

struct HarmonicSpace {
    Superoperator p;
    std::vector<Mat> basis;  // HS-orthonormal
    Mat cols;                // D^2 x dim, the vectorized basis
    bool contains_m = false;
    double spectral_gap = 0;  // smallest singular value of P - id kept as nonzero

    Index dim() const { return Index(basis.size()); }
    double distance(const Mat& t) const;  // HS distance of t from the span
};

/// Fix(P) = ker(P - id). Throws NumericalError when a singular value of
/// P - id sits within three decades above the rank threshold.
HarmonicSpace fixed_space(const Superoperator& p);

/// Projection onto ker(P - 1) along range(P - 1) for a square matrix whose
/// eigenvalue 1 is semisimple (true for power-bounded maps).
Mat eigenvalue_one_projection(const Mat& p, const char* who);

/// Spectral projection onto Fix(P) along range(P - id).
Superoperator cesaro_expectation(const Superoperator& p);
/// (1/N) sum_{n=1}^N P^n(T), the iteration oracle.
Mat cesaro_average(const Superoperator& p, const Mat& t, int n);

/// Range of a u.c.p. idempotent E with the Choi-Effros product x.y = E(xy).
/// Coordinates are taken in a basis orthonormal for omega(y^* . x), omega = Tr/D.
struct BoundaryAlgebra {
    HarmonicSpace harmonic;
    Superoperator expectation;
    std::vector<Mat> basis;     // omega-orthonormal, as operators on L^2(M)
    std::vector<Mat> left_reg;  // left_reg[i](k, j): coefficient of basis k in basis_i . basis_j
    Vec unit;                   // coordinates of 1
    BlockStructure structure;   // Wedderburn form of the left regular representation
    std::vector<Index> blocks;
    Index center_dim = 0;
    Vec zeta;  // zeta(basis_i) = <basis_i 1^, 1^>
    bool zeta_faithful = false;
    double zeta_min_eig = 0;

    struct Residuals {
        double idempotent = 0;
        double unital = 0;
        double choi_min = 0;
        double range = 0;
        double associativity = 0;
        double involution = 0;
        double positivity = 0;      // most negative spectrum of x.x^* (sign flipped)
        double stationarity = 0;
    } residuals;

    Index dim() const { return Index(basis.size()); }
    Mat product(const Mat& x, const Mat& y) const { return expectation.apply(x * y); }
    Vec coords(const Mat& x) const;
    Mat element(const Vec& c) const;
    /// Matrix unit e^t_{ab} of the boundary, as an operator on L^2(M).
    Mat matrix_unit(std::size_t t, Index a, Index b) const;

private:
    friend BoundaryAlgebra boundary_build(const Hyperstate& phi);
    friend BoundaryAlgebra boundary_from_superop(const Superoperator& p);
    Mat pinv_;
};

BoundaryAlgebra boundary_build(const Hyperstate& phi);
BoundaryAlgebra boundary_from_superop(const Superoperator& p);

struct RelativeCommutant {
    std::vector<Mat> basis;
    Index dim = 0;
    bool equals_center = false;
    double center_angle = 0;
};
/// Boundary elements commuting with L(M) under the Choi-Effros product.
RelativeCommutant relative_commutant(const BoundaryAlgebra& b);

struct DoubleErgodicity {
    Index intersection_dim = 0;
    Index center_dim = 0;
    bool equals_center = false;
    double angle = 0;
    double containment = 0;  // distance of L(Z(M)) from the intersection
};
/// Requires regular strongly generating phi.
DoubleErgodicity double_ergodicity(const Hyperstate& phi);
/// Same computation without the precondition (negative controls).
DoubleErgodicity double_ergodicity_unchecked(const Hyperstate& phi);

struct MvResult {
    Mat result;
    double center_distance = 0;
    double commutator = 0;
    std::optional<cd> lambda;
    double scalar_residual = 0;  // ||E°E(T) - lambda 1||, factors only
};
MvResult mv_project(const Hyperstate& phi, const Mat& t);

/// Convex-hull averaging over sampled words w (J v^* J) T (J v J) w^*; the last
/// letter of each word is averaged exactly. Requires a unitary source family.
struct HullEstimate {
    Mat average;
    cd lambda;              // <average 1^, 1^>
    double scalar_distance;  // ||average - (Tr(average)/D) 1||
    int samples;
    int word_length;
};
HullEstimate mv_hull_oracle(const Hyperstate& phi, const Mat& t, int samples, int word_length, Rng& rng);

struct InnerDerivation {
    Mat c;
    Mat z;
    double commutator_residual = 0;  // max_x ||[L(x), c] - [L(x), T]||
    double central_defect = 0;       // ||E°(T) - z||
    bool bound_applicable = false;
    double c_norm = 0;
    double bound = 0;  // sup_{n <= 64} ||T - (P°)^n(T)||
    bool bound_holds = true;
};
InnerDerivation derivation_inner_part(const Hyperstate& phi, const Mat& t);

enum class FoguelVerdict { Agree, Disagree, Inconclusive };
std::string to_string(FoguelVerdict v);

struct FoguelReport {
    std::vector<std::vector<double>> norms;  // norms[probe][n-1]
    Index harmonic_dim = 0;
    Index algebra_dim = 0;
    double final_max = 0;
    bool decays = false;
    bool fix_equals_m = false;
    FoguelVerdict verdict = FoguelVerdict::Inconclusive;
};
FoguelReport foguel_test(const Hyperstate& psi, const std::vector<Mat>& probes, int n_max);

struct TensorSplit {
    Index dim1 = 0, dim2 = 0, dim_product = 0;
    bool equal = false;
    double angle = 0;
};
TensorSplit tensor_split_check(const Hyperstate& phi1, const Hyperstate& phi2);

/// M1 (x) M2 with the product trace, blocks ordered (i, j) with i major.
TracialAlgebra tensor_algebra(const TracialAlgebra& a, const TracialAlgebra& b);
Mat tensor_element(const TracialAlgebra& a, const TracialAlgebra& b, const Mat& x, const Mat& y);
Hyperstate tensor_hyperstate(const Hyperstate& phi1, const Hyperstate& phi2, const GnsPtr& product);

}  // namespace ncpb
