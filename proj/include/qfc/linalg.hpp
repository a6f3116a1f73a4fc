// linalg.hpp — Complex dense linear algebra and quantum-state primitives:
// tensor products, partial trace, purity/fidelity, Bloch representation,
// spin and truncated-Fock operators, matrix exponential.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qfc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

// Validation tolerances for state types. All configurable per call site.
struct Tolerances {
    double herm = 1e-9;
    double trace = 1e-9;
    double psd = 1e-9;
    double norm = 1e-9;
    double bloch = 1e-9;
};

// --------------------------- Basic constructors ------------------------------

inline Vector basis_ket(Index dim, Index i) {
    if (dim <= 0) throw std::invalid_argument("basis_ket: dim must be > 0");
    if (i < 0 || i >= dim) throw std::out_of_range("basis_ket: index out of range");
    Vector v = Vector::Zero(dim);
    v(i) = 1.0;
    return v;
}

// |i><j| in dim-dimensional space
inline Matrix basis_op(Index dim, Index i, Index j) {
    if (dim <= 0) throw std::invalid_argument("basis_op: dim must be > 0");
    if (i < 0 || i >= dim || j < 0 || j >= dim) throw std::out_of_range("basis_op: index out of range");
    Matrix m = Matrix::Zero(dim, dim);
    m(i, j) = 1.0;
    return m;
}

inline Matrix projector(Index dim, Index i) { return basis_op(dim, i, i); }

// Pauli matrices in the computational basis (|0>, |1>)
Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();

// --------------------------- Generic matrix checks ---------------------------

bool all_finite(const Matrix& m);
double hermiticity_deviation(const Matrix& m);   // max |m - m†| entrywise
double unitarity_deviation(const Matrix& m);     // max |m†m - I| entrywise
double min_eigenvalue_hermitian(const Matrix& m);

// --------------------------- State types -------------------------------------

class PureState {
public:
    PureState(Vector amplitudes, const Tolerances& tol = {});
    static PureState computational(Index dim, Index i) { return PureState(basis_ket(dim, i)); }

    Index dim() const { return amps_.size(); }
    const Vector& amplitudes() const { return amps_; }

private:
    Vector amps_;
};

// Hermitian, unit-trace, positive operator. Construction repairs small
// Hermiticity/trace drift and rejects anything outside tolerance.
class DensityMatrix {
public:
    explicit DensityMatrix(Matrix m, const Tolerances& tol = {});
    static DensityMatrix from_pure(const PureState& psi);
    static DensityMatrix pure(Index dim, Index i) { return from_pure(PureState::computational(dim, i)); }
    static DensityMatrix maximally_mixed(Index dim);

    Index dim() const { return mat_.rows(); }
    const Matrix& matrix() const { return mat_; }

private:
    struct RawTag {};
    DensityMatrix(Matrix m, RawTag) : mat_(std::move(m)) {}
    Matrix mat_;
};

struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double norm_sq() const { return x * x + y * y + z * z; }
};

// --------------------------- Operations --------------------------------------

// Kronecker product; left factor is the slow index.
Matrix tensor(const Matrix& a, const Matrix& b);
Vector tensor(const Vector& a, const Vector& b);

enum class Subsystem { Left, Right };

// Partial trace of an operator on a bipartite space of dims (d_left, d_right),
// keeping the named subsystem.
Matrix partial_trace(const Matrix& m, Index d_left, Index d_right, Subsystem keep);
DensityMatrix partial_trace(const DensityMatrix& rho, Index d_left, Index d_right, Subsystem keep,
                            const Tolerances& tol = {});

double purity(const DensityMatrix& rho);

// Tr(rho * target) for a pure target.
double fidelity_to_target(const DensityMatrix& rho, const DensityMatrix& target,
                          const Tolerances& tol = {});
double fidelity_to_target(const Matrix& rho, const Matrix& target);

BlochVector to_bloch(const DensityMatrix& rho);
BlochVector to_bloch_raw(const Matrix& rho);
DensityMatrix from_bloch(const BlochVector& r, const Tolerances& tol = {});
Matrix from_bloch_raw(const BlochVector& r);

// Collective spin-N/2 operators. Basis index i corresponds to the F_z
// eigenvalue m = i - N/2 (ascending), so for N = 1:
//   fz = -sigma_z/2, fy = -sigma_y/2
struct SpinOperators {
    int n_atoms = 1;
    Index dim = 2;
    Matrix fz;
    Matrix fy;
};
SpinOperators spin_operators(int n_atoms);

// Truncated bosonic lowering operator on occupation levels 0..cutoff.
struct FockOperators {
    int cutoff = 1;
    Matrix lowering;
};
FockOperators annihilation(int cutoff);

// exp(m). Eigendecomposition route for (skew-)Hermitian input, Pade
// scaling-and-squaring otherwise.
Matrix matrix_exponential(const Matrix& m);

} // namespace qfc
