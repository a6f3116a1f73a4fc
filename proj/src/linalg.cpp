#include "qfc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace qfc {

Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0.0, 1.0,
         1.0, 0.0;
    return m;
}

Matrix pauli_y() {
    Matrix m(2, 2);
    m << 0.0, Complex(0.0, -1.0),
         Complex(0.0, 1.0), 0.0;
    return m;
}

Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1.0, 0.0,
         0.0, -1.0;
    return m;
}

bool all_finite(const Matrix& m) {
    return m.allFinite();
}

double hermiticity_deviation(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double unitarity_deviation(const Matrix& m) {
    return (m.adjoint() * m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

double min_eigenvalue_hermitian(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("min_eigenvalue_hermitian: eigensolver failed");
    }
    return solver.eigenvalues().minCoeff();
}

// --------------------------- PureState ----------------------------------------

PureState::PureState(Vector amplitudes, const Tolerances& tol) : amps_(std::move(amplitudes)) {
    if (amps_.size() == 0) throw std::invalid_argument("PureState: empty amplitude vector");
    if (!amps_.allFinite()) throw std::invalid_argument("PureState: non-finite amplitudes");
    const double n = amps_.norm();
    if (std::abs(n - 1.0) > tol.norm) {
        throw std::invalid_argument("PureState: norm deviates from 1 by " + std::to_string(std::abs(n - 1.0)));
    }
    amps_ /= n;
}

// --------------------------- DensityMatrix ------------------------------------

DensityMatrix::DensityMatrix(Matrix m, const Tolerances& tol) : mat_(std::move(m)) {
    if (mat_.rows() != mat_.cols() || mat_.rows() == 0) {
        throw std::invalid_argument("DensityMatrix: matrix must be square and non-empty");
    }
    if (!mat_.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite entries");
    const double herm_dev = hermiticity_deviation(mat_);
    if (herm_dev > tol.herm) {
        throw std::invalid_argument("DensityMatrix: Hermiticity deviation " + std::to_string(herm_dev));
    }
    mat_ = 0.5 * (mat_ + mat_.adjoint().eval());
    const double tr = mat_.trace().real();
    if (std::abs(tr - 1.0) > tol.trace) {
        throw std::invalid_argument("DensityMatrix: trace deviates from 1 by " + std::to_string(std::abs(tr - 1.0)));
    }
    mat_ /= tr;
    const double min_eig = min_eigenvalue_hermitian(mat_);
    if (min_eig < -tol.psd) {
        throw std::invalid_argument("DensityMatrix: negative eigenvalue " + std::to_string(min_eig));
    }
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
    Matrix m = psi.amplitudes() * psi.amplitudes().adjoint();
    return DensityMatrix(std::move(m), RawTag{});
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
    if (dim <= 0) throw std::invalid_argument("maximally_mixed: dim must be > 0");
    return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim), RawTag{});
}

// --------------------------- Tensor / partial trace ---------------------------

Matrix tensor(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols()) {
        throw std::invalid_argument("tensor: factors must be square");
    }
    Matrix out = Eigen::kroneckerProduct(a, b);
    return out;
}

Vector tensor(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Index i = 0; i < a.size(); ++i) {
        out.segment(i * b.size(), b.size()) = a(i) * b;
    }
    return out;
}

Matrix partial_trace(const Matrix& m, Index d_left, Index d_right, Subsystem keep) {
    if (d_left <= 0 || d_right <= 0) throw std::invalid_argument("partial_trace: dims must be > 0");
    if (m.rows() != d_left * d_right || m.cols() != d_left * d_right) {
        throw std::invalid_argument("partial_trace: operator dimension does not factor as d_left*d_right");
    }
    if (keep == Subsystem::Left) {
        Matrix out = Matrix::Zero(d_left, d_left);
        for (Index i = 0; i < d_left; ++i)
            for (Index k = 0; k < d_left; ++k)
                for (Index b = 0; b < d_right; ++b)
                    out(i, k) += m(i * d_right + b, k * d_right + b);
        return out;
    }
    Matrix out = Matrix::Zero(d_right, d_right);
    for (Index i = 0; i < d_right; ++i)
        for (Index k = 0; k < d_right; ++k)
            for (Index a = 0; a < d_left; ++a)
                out(i, k) += m(a * d_right + i, a * d_right + k);
    return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, Index d_left, Index d_right, Subsystem keep,
                            const Tolerances& tol) {
    return DensityMatrix(partial_trace(rho.matrix(), d_left, d_right, keep), tol);
}

// --------------------------- Scalar functionals -------------------------------

double purity(const DensityMatrix& rho) {
    return (rho.matrix() * rho.matrix()).trace().real();
}

double fidelity_to_target(const Matrix& rho, const Matrix& target) {
    if (rho.rows() != target.rows()) throw std::invalid_argument("fidelity_to_target: dimension mismatch");
    return (rho * target).trace().real();
}

double fidelity_to_target(const DensityMatrix& rho, const DensityMatrix& target, const Tolerances& tol) {
    const double target_purity = purity(target);
    if (std::abs(target_purity - 1.0) > 100 * tol.psd) {
        throw std::invalid_argument("fidelity_to_target: target is not pure (Tr(t^2) = " +
                                    std::to_string(target_purity) + ")");
    }
    return fidelity_to_target(rho.matrix(), target.matrix());
}

// --------------------------- Bloch representation -----------------------------

BlochVector to_bloch_raw(const Matrix& rho) {
    if (rho.rows() != 2 || rho.cols() != 2) throw std::invalid_argument("to_bloch: requires a 2x2 state");
    BlochVector r;
    r.x = (rho * pauli_x()).trace().real();
    r.y = (rho * pauli_y()).trace().real();
    r.z = (rho * pauli_z()).trace().real();
    return r;
}

BlochVector to_bloch(const DensityMatrix& rho) { return to_bloch_raw(rho.matrix()); }

Matrix from_bloch_raw(const BlochVector& r) {
    return 0.5 * (Matrix::Identity(2, 2) + r.x * pauli_x() + r.y * pauli_y() + r.z * pauli_z());
}

DensityMatrix from_bloch(const BlochVector& r, const Tolerances& tol) {
    if (r.norm_sq() > 1.0 + tol.bloch) {
        throw std::invalid_argument("from_bloch: |r| exceeds the unit ball");
    }
    Tolerances t = tol;
    // |r| = 1 + eps maps to min eigenvalue -eps/2; allow the declared slack.
    t.psd = std::max(t.psd, tol.bloch);
    return DensityMatrix(from_bloch_raw(r), t);
}

// --------------------------- Spin / Fock operators ----------------------------

SpinOperators spin_operators(int n_atoms) {
    if (n_atoms < 1) throw std::invalid_argument("spin_operators: n_atoms must be >= 1");
    const Index dim = n_atoms + 1;
    const double j = 0.5 * n_atoms;
    SpinOperators ops;
    ops.n_atoms = n_atoms;
    ops.dim = dim;
    // Basis index i carries eigenvalue m_i = i - j, ascending. At N = 1 this
    // gives fz = -sigma_z/2 and fy = -sigma_y/2.
    ops.fz = Matrix::Zero(dim, dim);
    Matrix raise = Matrix::Zero(dim, dim);
    for (Index i = 0; i < dim; ++i) {
        const double m = static_cast<double>(i) - j;
        ops.fz(i, i) = m;
        if (i + 1 < dim) {
            raise(i + 1, i) = std::sqrt(j * (j + 1) - m * (m + 1));
        }
    }
    const Matrix lower = raise.adjoint();
    ops.fy = (raise - lower) / Complex(0.0, 2.0);
    return ops;
}

FockOperators annihilation(int cutoff) {
    if (cutoff < 1) throw std::invalid_argument("annihilation: cutoff must be >= 1");
    FockOperators ops;
    ops.cutoff = cutoff;
    ops.lowering = Matrix::Zero(cutoff + 1, cutoff + 1);
    for (Index k = 1; k <= cutoff; ++k) {
        ops.lowering(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    return ops;
}

// --------------------------- Matrix exponential -------------------------------

Matrix matrix_exponential(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("matrix_exponential: matrix must be square");
    if (!m.allFinite()) throw std::invalid_argument("matrix_exponential: non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (hermiticity_deviation(m) <= 1e-13 * scale) {
        // Hermitian: exp(m) = V exp(diag) V†
        Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
        return solver.eigenvectors() *
               solver.eigenvalues().array().exp().matrix().asDiagonal() *
               solver.eigenvectors().adjoint();
    }
    const Matrix im = Complex(0.0, 1.0) * m;
    if (hermiticity_deviation(im) <= 1e-13 * scale) {
        // Skew-Hermitian: m = -i h with h Hermitian, exp(m) = V exp(-i diag) V†
        Eigen::SelfAdjointEigenSolver<Matrix> solver(im);
        const Eigen::VectorXcd phases =
            (Complex(0.0, -1.0) * solver.eigenvalues().cast<Complex>().array()).exp();
        return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
    }
    return m.exp();
}

} // namespace qfc
