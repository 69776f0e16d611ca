#pragma once

#include <complex>
#include <string>

#include <Eigen/Dense>

namespace ed3 {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;

/// Tolerance used for the Hermitian, unit-trace and PSD checks on density matrices.
inline constexpr double kDensityTolerance = 1e-9;

/// Throws InvalidArgument unless `m` is square, non-empty and all-finite.
void require_square_finite(const ComplexMatrix &m, const char *what);
void require_square_finite(const RealMatrix &m, const char *what);

/// Sum of singular values.
double trace_norm(const ComplexMatrix &m);
double trace_norm(const RealMatrix &m);

/// Sum of |eigenvalues| for a Hermitian matrix. Agrees with trace_norm on Hermitian input.
double trace_norm_hermitian(const ComplexMatrix &m);

/// Normalized ket. Basis order for two qubits is {HH, HV, VH, VV}.
class PureState {
   public:
    /// Throws unless the amplitudes have unit 2-norm within 1e-12.
    explicit PureState(ComplexVector amplitudes);

    const ComplexVector &amplitudes() const { return amplitudes_; }
    Eigen::Index dim() const { return amplitudes_.size(); }

   private:
    ComplexVector amplitudes_;
};

/// Hermitian, positive semidefinite, unit-trace complex matrix.
class DensityMatrix {
   public:
    /// Validates the invariants within kDensityTolerance and throws InvalidArgument otherwise.
    /// The stored matrix is symmetrized, (m + m^H) / 2.
    explicit DensityMatrix(const ComplexMatrix &m);

    const ComplexMatrix &matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }
    Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    friend bool operator==(const DensityMatrix &a, const DensityMatrix &b) { return a.m_ == b.m_; }

   private:
    ComplexMatrix m_;
};

/// Element-wise moduli of a density matrix. Entries are nonnegative and finite.
class AbsoluteMatrix {
   public:
    explicit AbsoluteMatrix(RealMatrix m);

    const RealMatrix &matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    friend bool operator==(const AbsoluteMatrix &a, const AbsoluteMatrix &b) { return a.m_ == b.m_; }

   private:
    RealMatrix m_;
};

/// Returns a description of the first violated density-matrix invariant, or empty if none.
std::string check_density_invariants(const ComplexMatrix &m, double tol = kDensityTolerance);

AbsoluteMatrix elementwise_abs(const DensityMatrix &rho);

DensityMatrix density_of(const PureState &psi);

/// (|HH> + |VV>) / sqrt(2).
PureState bell_state();

/// Two-qubit computational basis state; index in {0: HH, 1: HV, 2: VH, 3: VV}.
PureState basis_state(int index);

/// (1 - 2 lambda) |psi><psi| + lambda |HH><HH| + lambda |VV><VV| for the Bell state psi.
/// The (1,4) coherence becomes 0.5 - lambda while the populations stay at 0.5.
DensityMatrix erroneous_state(double lambda);

/// U rho U^H. U must be unitary of matching dimension.
DensityMatrix conjugate(const DensityMatrix &rho, const ComplexMatrix &unitary);

}  // namespace ed3
