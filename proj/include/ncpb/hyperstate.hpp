#pragma once

#include "ncpb/algebra.hpp"

#include <memory>
#include <mutex>
#include <utility>
#include <vector>

namespace ncpb {

/// z_n = sqrt(a_n) y_n^*, weights a_n = ||z_n||_2^2, sorted descending.
struct StandardForm {
    std::vector<Mat> z;
    std::vector<double> weights;
};

using KrausFamily = std::vector<std::pair<Mat, double>>;

/// A state on B(L^2(M, tau)) extending tau, phi(T) = Tr(A T).
class Hyperstate {
public:
    /// Validates positivity, unit trace and the extension property.
    static Hyperstate from_density(GnsPtr g, Mat density);
    /// No validation; used to inject deliberately broken inputs.
    static Hyperstate from_density_unchecked(GnsPtr g, Mat density);

    const GnsSpace& gns() const { return *gns_; }
    const GnsPtr& gns_ptr() const { return gns_; }
    const Mat& density() const { return density_; }
    cd operator()(const Mat& t) const { return (density_ * t).trace(); }

    /// Computed once, shared by copies.
    const StandardForm& standard_form() const;

    /// max_k |Tr(A L(b_k)) - tau(b_k)|.
    double extension_residual() const;
    double trace_residual() const { return std::abs(density_.trace() - 1.0); }
    double min_eigenvalue() const { return min_herm_eig(density_); }

    /// The family the state was built from, when built by from_kraus.
    const KrausFamily& source_family() const { return source_; }
    /// True when the source family consists of scaled unitaries.
    bool from_unitary_family(double tol = 1e-10) const;

private:
    Hyperstate(GnsPtr g, Mat density) : gns_(std::move(g)), density_(std::move(density)), cache_(std::make_shared<Cache>()) {}
    friend Hyperstate from_kraus(const GnsPtr& g, const KrausFamily& family);

    struct Cache {
        std::once_flag once;
        StandardForm sf;
    };
    GnsPtr gns_;
    Mat density_;
    KrausFamily source_;
    std::shared_ptr<Cache> cache_;
};

/// phi(T) = sum_w <T (x^*)^, (x^*)^>; requires sum_w w x^* x = 1.
Hyperstate from_kraus(const GnsPtr& g, const KrausFamily& family);
/// phi_e(T) = <T 1^, 1^>.
Hyperstate identity_hyperstate(const GnsPtr& g);
StandardForm standard_form(const Hyperstate& phi);

/// Linear map on B(L^2) stored as a D^2 x D^2 matrix on column-stacked operators.
struct Superoperator {
    GnsPtr gns;
    Mat matrix;
    bool unital = false;
    bool completely_positive = false;
    bool bimodular = false;

    Index dim() const { return gns->dim(); }
    Mat apply(const Mat& t) const { return unvec(matrix * vec(t), dim()); }
    /// Choi[(i,k),(j,l)] = Phi(E_ij)_{kl}.
    Mat choi() const;
    Superoperator dual() const;
    Superoperator then(const Superoperator& first) const;  // this o first

    double unital_residual() const;
    double choi_min_eigenvalue() const;
    /// Exhaustive check over basis x, y: ||S(L(x) T L(y)) - L(x) S(T) L(y)||.
    double bimodularity_residual() const;
};

/// T -> sum_k A_k T B_k as a superoperator matrix.
Mat kraus_matrix(const std::vector<Mat>& a, const std::vector<Mat>& b);

Superoperator identity_superop(const GnsPtr& g);
/// P_phi(T) = sum_n (J z_n^* J) T (J z_n J).
Superoperator poisson_superop(const Hyperstate& phi);
/// Kraus operators J z_n J of P_phi (so P_phi(T) = sum K^* T K).
std::vector<Mat> poisson_kraus(const Hyperstate& phi);
/// P_phi^o(T) = sum_n L(z_n) T L(z_n^*); requires regular phi.
Superoperator opposite_superop(const Hyperstate& phi);

Hyperstate convolve(const Hyperstate& phi, const Hyperstate& psi);
Hyperstate convolution_power(const Hyperstate& phi, int n);
/// Standard family {z_n^*}; requires regular phi.
Hyperstate conjugate(const Hyperstate& phi);
/// Convex combination t phi + (1 - t) psi.
Hyperstate mix(const Hyperstate& phi, const Hyperstate& psi, double t);

struct Classification {
    bool regular = false;
    bool generating = false;
    bool strongly_generating = false;
    bool symmetric = false;
    double regular_residual = 0;
    Index generated_dim = 0;
    Index strongly_generated_dim = 0;
};
Classification classify(const Hyperstate& phi);
/// ||sum z_n z_n^* - 1||.
double regularity_residual(const Hyperstate& phi);

}  // namespace ncpb
