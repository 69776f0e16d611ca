#include "ed3/linalg.hpp"

#include <cmath>
#include <sstream>

#include "ed3/error.hpp"

namespace ed3 {

namespace {

template <typename Derived>
void require_square_finite_impl(const Eigen::MatrixBase<Derived> &m, const char *what) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
        std::ostringstream msg;
        msg << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
        throw InvalidArgument(msg.str());
    }
    if (!m.allFinite()) {
        throw InvalidArgument(std::string(what) + ": matrix has non-finite entries");
    }
}

}  // namespace

void require_square_finite(const ComplexMatrix &m, const char *what) { require_square_finite_impl(m, what); }
void require_square_finite(const RealMatrix &m, const char *what) { require_square_finite_impl(m, what); }

double trace_norm(const ComplexMatrix &m) {
    require_square_finite(m, "trace_norm");
    Eigen::BDCSVD<ComplexMatrix> svd(m);
    return svd.singularValues().sum();
}

double trace_norm(const RealMatrix &m) {
    require_square_finite(m, "trace_norm");
    Eigen::BDCSVD<RealMatrix> svd(m);
    return svd.singularValues().sum();
}

double trace_norm_hermitian(const ComplexMatrix &m) {
    require_square_finite(m, "trace_norm_hermitian");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().sum();
}

PureState::PureState(ComplexVector amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() == 0 || !amplitudes_.allFinite()) {
        throw InvalidArgument("PureState: amplitudes must be non-empty and finite");
    }
    if (std::abs(amplitudes_.norm() - 1.0) > 1e-12) {
        throw InvalidArgument("PureState: amplitudes are not normalized");
    }
}

std::string check_density_invariants(const ComplexMatrix &m, double tol) {
    if (m.rows() == 0 || m.rows() != m.cols()) return "not a non-empty square matrix";
    if (!m.allFinite()) return "non-finite entries";
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) return "not Hermitian";
    if (std::abs(m.trace() - Complex(1.0)) > tol) return "trace differs from 1";
    ComplexMatrix herm = (m + m.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(herm, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -tol) return "not positive semidefinite";
    return {};
}

DensityMatrix::DensityMatrix(const ComplexMatrix &m) {
    if (auto problem = check_density_invariants(m); !problem.empty()) {
        throw InvalidArgument("DensityMatrix: " + problem);
    }
    m_ = (m + m.adjoint()) / 2.0;
}

AbsoluteMatrix::AbsoluteMatrix(RealMatrix m) : m_(std::move(m)) {
    require_square_finite(m_, "AbsoluteMatrix");
    if (m_.minCoeff() < 0.0) {
        throw InvalidArgument("AbsoluteMatrix: negative entry");
    }
}

AbsoluteMatrix elementwise_abs(const DensityMatrix &rho) { return AbsoluteMatrix(rho.matrix().cwiseAbs()); }

DensityMatrix density_of(const PureState &psi) {
    const auto &v = psi.amplitudes();
    return DensityMatrix(v * v.adjoint());
}

PureState bell_state() {
    ComplexVector v = ComplexVector::Zero(4);
    v(0) = v(3) = 1.0 / std::sqrt(2.0);
    return PureState(v);
}

PureState basis_state(int index) {
    if (index < 0 || index > 3) throw InvalidArgument("basis_state: index must be in [0, 3]");
    ComplexVector v = ComplexVector::Zero(4);
    v(index) = 1.0;
    return PureState(v);
}

DensityMatrix erroneous_state(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 0.5)) {
        throw InvalidArgument("erroneous_state: lambda must lie in [0, 0.5]");
    }
    ComplexMatrix m = (1.0 - 2.0 * lambda) * density_of(bell_state()).matrix();
    m(0, 0) += lambda;
    m(3, 3) += lambda;
    return DensityMatrix(m);
}

DensityMatrix conjugate(const DensityMatrix &rho, const ComplexMatrix &unitary) {
    if (unitary.rows() != rho.dim() || unitary.cols() != rho.dim()) {
        throw InvalidArgument("conjugate: unitary dimension mismatch");
    }
    const auto n = unitary.rows();
    if ((unitary.adjoint() * unitary - ComplexMatrix::Identity(n, n)).norm() > 1e-10) {
        throw InvalidArgument("conjugate: matrix is not unitary");
    }
    return DensityMatrix(unitary * rho.matrix() * unitary.adjoint());
}

}  // namespace ed3
