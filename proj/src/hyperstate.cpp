#include "ncpb/hyperstate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ncpb {

namespace {

constexpr double kStateTol = 1e-10;

void validate_density(const GnsSpace& g, const Mat& a, double ext_res) {
    if (a.rows() != g.dim() || a.cols() != g.dim()) throw ValidationError("hyperstate.density: wrong dimension");
    if ((a - a.adjoint()).norm() > kStateTol) throw ValidationError("hyperstate.density: not Hermitian");
    double me = min_herm_eig(a);
    if (me < -kStateTol) {
        std::ostringstream os;
        os << "hyperstate.density: not positive (min eigenvalue " << me << ")";
        throw ValidationError(os.str());
    }
    if (std::abs(a.trace() - 1.0) > kStateTol) throw ValidationError("hyperstate.density: trace is not 1");
    if (ext_res > kStateTol) {
        std::ostringstream os;
        os << "hyperstate.density: does not extend tau (residual " << ext_res << ")";
        throw ValidationError(os.str());
    }
}

}  // namespace

Hyperstate Hyperstate::from_density(GnsPtr g, Mat density) {
    Hyperstate h(std::move(g), std::move(density));
    validate_density(*h.gns_, h.density_, h.extension_residual());
    return h;
}

Hyperstate Hyperstate::from_density_unchecked(GnsPtr g, Mat density) {
    return Hyperstate(std::move(g), std::move(density));
}

double Hyperstate::extension_residual() const {
    double r = 0;
    for (const Mat& b : gns_->basis()) {
        cd lhs = (density_ * gns_->left(b)).trace();
        r = std::max(r, std::abs(lhs - gns_->algebra().trace(b)));
    }
    return r;
}

bool Hyperstate::from_unitary_family(double tol) const {
    if (source_.empty()) return false;
    for (const auto& [x, w] : source_) {
        Mat p = x.adjoint() * x;
        cd s = p(0, 0);
        if (std::abs(s) < tol) return false;
        if ((p - s * Mat::Identity(p.rows(), p.cols())).norm() > tol * std::max(1.0, std::abs(s))) return false;
        if ((x * x.adjoint() - p).norm() > tol * std::max(1.0, std::abs(s))) return false;
    }
    return true;
}

const StandardForm& Hyperstate::standard_form() const {
    std::call_once(cache_->once, [this] { cache_->sf = ncpb::standard_form(*this); });
    return cache_->sf;
}

StandardForm standard_form(const Hyperstate& phi) {
    const GnsSpace& g = phi.gns();
    HermEig e = herm_eig(phi.density());
    StandardForm sf;
    const Index d = e.values.size();
    double top = d ? e.values(d - 1) : 0.0;
    for (Index i = d - 1; i >= 0; --i) {
        double a = e.values(i);
        if (a <= 1e-12 * top) break;
        sf.z.push_back(std::sqrt(a) * g.element(e.vectors.col(i)).adjoint());
        sf.weights.push_back(a);
    }
    return sf;
}

Hyperstate from_kraus(const GnsPtr& g, const KrausFamily& family) {
    const TracialAlgebra& m = g->algebra();
    if (family.empty()) throw ValidationError("hyperstate.kraus: empty family");
    Mat norm = Mat::Zero(m.size(), m.size());
    Mat a = Mat::Zero(g->dim(), g->dim());
    for (std::size_t i = 0; i < family.size(); ++i) {
        const auto& [x, w] = family[i];
        if (!(w > 0) || !std::isfinite(w)) {
            std::ostringstream os;
            os << "hyperstate.kraus[" << i << "].weight: must be positive";
            throw ValidationError(os.str());
        }
        if (m.off_block_norm(x) > 1e-12) {
            std::ostringstream os;
            os << "hyperstate.kraus[" << i << "].matrix: not an element of M";
            throw ValidationError(os.str());
        }
        norm += w * x.adjoint() * x;
        Vec v = g->hat(x.adjoint());
        a += w * v * v.adjoint();
    }
    double res = (norm - m.identity()).norm();
    if (res > 1e-10) {
        std::ostringstream os;
        os << "hyperstate.kraus: sum w x^* x != 1 (residual " << res << ")";
        throw ValidationError(os.str());
    }
    Hyperstate h(g, a);
    h.source_ = family;
    return h;
}

Hyperstate identity_hyperstate(const GnsPtr& g) {
    return from_kraus(g, {{g->algebra().identity(), 1.0}});
}

Mat kraus_matrix(const std::vector<Mat>& a, const std::vector<Mat>& b) {
    const Index d = a.empty() ? 0 : a[0].rows();
    Mat s = Mat::Zero(d * d, d * d);
    for (std::size_t k = 0; k < a.size(); ++k) s += kron(b[k].transpose(), a[k]);
    return s;
}

Mat Superoperator::choi() const {
    const Index d = dim();
    Mat c(d * d, d * d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j)
            for (Index k = 0; k < d; ++k)
                for (Index l = 0; l < d; ++l) c(i * d + k, j * d + l) = matrix(k + l * d, i + j * d);
    return c;
}

Superoperator Superoperator::dual() const {
    Superoperator s{gns, matrix.adjoint()};
    return s;
}

Superoperator Superoperator::then(const Superoperator& first) const {
    Superoperator s{gns, matrix * first.matrix};
    s.unital = unital && first.unital;
    s.completely_positive = completely_positive && first.completely_positive;
    s.bimodular = bimodular && first.bimodular;
    return s;
}

double Superoperator::unital_residual() const {
    Mat one = Mat::Identity(dim(), dim());
    return (apply(one) - one).norm();
}

double Superoperator::choi_min_eigenvalue() const {
    return min_herm_eig(choi());
}

double Superoperator::bimodularity_residual() const {
    Rng rng(17);
    const Index d = dim();
    Mat t = random_gaussian(d, d, rng);
    double r = 0;
    for (const Mat& x : gns->basis()) {
        Mat lx = gns->left(x);
        for (const Mat& y : gns->basis()) {
            Mat ly = gns->left(y);
            r = std::max(r, (apply(lx * t * ly) - lx * apply(t) * ly).norm());
        }
    }
    return r;
}

Superoperator identity_superop(const GnsPtr& g) {
    const Index d = g->dim();
    Superoperator s{g, Mat::Identity(d * d, d * d), true, true, true};
    return s;
}

std::vector<Mat> poisson_kraus(const Hyperstate& phi) {
    std::vector<Mat> k;
    for (const Mat& z : phi.standard_form().z) k.push_back(phi.gns().conjugate_by_j(phi.gns().left(z)));
    return k;
}

Superoperator poisson_superop(const Hyperstate& phi) {
    std::vector<Mat> k = poisson_kraus(phi), kd;
    for (const Mat& x : k) kd.push_back(x.adjoint());
    Superoperator s{phi.gns_ptr(), kraus_matrix(kd, k)};
    // CP by Kraus form; unitality and bimodularity are checked on probes.
    s.completely_positive = true;
    s.unital = s.unital_residual() <= 1e-10;
    Rng rng(29);
    const Index d = s.dim();
    const TracialAlgebra& m = phi.gns().algebra();
    Mat a = phi.gns().left(m.random_element(rng)), b = phi.gns().left(m.random_element(rng));
    Mat t = random_gaussian(d, d, rng);
    s.bimodular = (s.apply(a * t * b) - a * s.apply(t) * b).norm() <= 1e-10 * std::max(1.0, t.norm());
    if (!s.unital || !s.bimodular) throw NumericalError("poisson_superop: unitality or bimodularity check failed");
    return s;
}

double regularity_residual(const Hyperstate& phi) {
    const TracialAlgebra& m = phi.gns().algebra();
    Mat s = Mat::Zero(m.size(), m.size());
    for (const Mat& z : phi.standard_form().z) s += z * z.adjoint();
    return (s - m.identity()).norm();
}

Superoperator opposite_superop(const Hyperstate& phi) {
    double r = regularity_residual(phi);
    if (r > 1e-10) {
        std::ostringstream os;
        os << "opposite_superop: hyperstate is not regular (residual " << r << ")";
        throw PreconditionError(os.str());
    }
    std::vector<Mat> a, b;
    for (const Mat& z : phi.standard_form().z) {
        a.push_back(phi.gns().left(z));
        b.push_back(phi.gns().left(z.adjoint()));
    }
    Superoperator s{phi.gns_ptr(), kraus_matrix(a, b)};
    s.completely_positive = true;
    s.unital = s.unital_residual() <= 1e-10;
    // commutes with L(M)' multiplications, i.e. R(M)-bimodular; not L(M)-bimodular
    s.bimodular = false;
    return s;
}

Hyperstate convolve(const Hyperstate& phi, const Hyperstate& psi) {
    if (phi.gns_ptr() != psi.gns_ptr() && phi.gns().algebra().blocks() != psi.gns().algebra().blocks())
        throw ValidationError("convolve: hyperstates live on different spaces");
    // A_{phi*psi} = P_psi^dagger(A_phi), P^dagger(X) = sum K X K^*
    Mat a = Mat::Zero(phi.gns().dim(), phi.gns().dim());
    for (const Mat& k : poisson_kraus(psi)) a += k * phi.density() * k.adjoint();
    return Hyperstate::from_density_unchecked(phi.gns_ptr(), 0.5 * (a + a.adjoint()));
}

Hyperstate convolution_power(const Hyperstate& phi, int n) {
    if (n < 0) throw ValidationError("convolution_power: negative exponent");
    Hyperstate out = identity_hyperstate(phi.gns_ptr());
    for (int i = 0; i < n; ++i) out = convolve(out, phi);
    return out;
}

Hyperstate conjugate(const Hyperstate& phi) {
    double r = regularity_residual(phi);
    if (r > 1e-10) {
        std::ostringstream os;
        os << "conjugate: hyperstate is not regular (residual " << r << ")";
        throw PreconditionError(os.str());
    }
    KrausFamily fam;
    for (const Mat& z : phi.standard_form().z) fam.push_back({z.adjoint(), 1.0});
    return from_kraus(phi.gns_ptr(), fam);
}

Hyperstate mix(const Hyperstate& phi, const Hyperstate& psi, double t) {
    return Hyperstate::from_density(phi.gns_ptr(), t * phi.density() + (1.0 - t) * psi.density());
}

Classification classify(const Hyperstate& phi) {
    Classification c;
    const auto& z = phi.standard_form().z;
    const GnsPtr& g = phi.gns_ptr();
    c.regular_residual = regularity_residual(phi);
    c.regular = c.regular_residual <= 1e-10;
    c.generated_dim = generated_subalgebra(g, z, true).dim();
    c.strongly_generated_dim = generated_subalgebra(g, z, false).dim();
    c.generating = c.generated_dim == g->dim();
    c.strongly_generating = c.strongly_generated_dim == g->dim();
    if (c.regular) c.symmetric = (conjugate(phi).density() - phi.density()).norm() <= 1e-10;
    return c;
}

}  // namespace ncpb
