#include "qfc/rng.hpp"

#include <Eigen/QR>

#include <cmath>

namespace qfc {

Matrix ginibre(Index rows, Index cols, RngEngine& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix g(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            g(i, j) = Complex(dist(rng), dist(rng));
    return g;
}

Matrix random_unitary(Index dim, RngEngine& rng) {
    const Matrix g = ginibre(dim, dim, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < dim; ++i) {
        const Complex d = r(i, i);
        const double a = std::abs(d);
        q.col(i) *= (a > 0.0) ? d / a : Complex(1.0, 0.0);
    }
    return q;
}

PureState random_pure_state(Index dim, RngEngine& rng) {
    Vector v = ginibre(dim, 1, rng).col(0);
    v /= v.norm();
    return PureState(std::move(v));
}

DensityMatrix random_density_matrix(Index dim, RngEngine& rng) {
    const Matrix g = ginibre(dim, dim, rng);
    Matrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return DensityMatrix(std::move(rho));
}

} // namespace qfc
