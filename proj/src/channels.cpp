#include "qfc/channels.hpp"

#include <cmath>

namespace qfc::channels {

KrausChannel::KrausChannel(Index dim, std::vector<Matrix> operators, double tol_cptp)
    : dim_(dim), ops_(std::move(operators)) {
    if (dim_ <= 0) throw std::invalid_argument("KrausChannel: dim must be > 0");
    if (ops_.empty()) throw std::invalid_argument("KrausChannel: need at least one operator");
    Matrix sum = Matrix::Zero(dim_, dim_);
    for (const auto& op : ops_) {
        if (op.rows() != dim_ || op.cols() != dim_) {
            throw std::invalid_argument("KrausChannel: operator dimension mismatch");
        }
        if (!op.allFinite()) throw std::invalid_argument("KrausChannel: non-finite operator");
        sum += op.adjoint() * op;
    }
    const double dev = (sum - Matrix::Identity(dim_, dim_)).cwiseAbs().maxCoeff();
    if (dev > tol_cptp) {
        throw std::invalid_argument("KrausChannel: completeness violated by " + std::to_string(dev));
    }
}

CoherentFeedbackStep::CoherentFeedbackStep(Index plant, Index anc, Matrix u, PureState init)
    : CoherentFeedbackStep(plant, anc, std::move(u), std::move(init),
                           Matrix::Identity(anc, anc)) {}

CoherentFeedbackStep::CoherentFeedbackStep(Index plant, Index anc, Matrix u, PureState init,
                                           Matrix basis)
    : plant_dim(plant), anc_dim(anc), unitary(std::move(u)), anc_init(std::move(init)),
      anc_basis(std::move(basis)) {
    if (plant_dim <= 0 || anc_dim <= 0) {
        throw std::invalid_argument("CoherentFeedbackStep: dims must be > 0");
    }
    if (unitary.rows() != plant_dim * anc_dim || unitary.cols() != plant_dim * anc_dim) {
        throw std::invalid_argument("CoherentFeedbackStep: unitary must act on plant ⊗ ancilla");
    }
    if (anc_init.dim() != anc_dim) {
        throw std::invalid_argument("CoherentFeedbackStep: ancilla state dimension mismatch");
    }
    const double u_dev = unitarity_deviation(unitary);
    if (u_dev > 1e-10) {
        throw std::invalid_argument("CoherentFeedbackStep: non-unitary joint evolution (dev " +
                                    std::to_string(u_dev) + ")");
    }
    if (anc_basis.rows() != anc_dim || anc_basis.cols() != anc_dim) {
        throw std::invalid_argument("CoherentFeedbackStep: ancilla basis must be anc_dim x anc_dim");
    }
    const double b_dev = unitarity_deviation(anc_basis);
    if (b_dev > 1e-10) {
        throw std::invalid_argument("CoherentFeedbackStep: ancilla basis not orthonormal (dev " +
                                    std::to_string(b_dev) + ")");
    }
}

KrausChannel kraus_from_cfc(const CoherentFeedbackStep& step) {
    const Index p = step.plant_dim;
    const Index a = step.anc_dim;
    const Vector& psi = step.anc_init.amplitudes();
    std::vector<Matrix> ops;
    ops.reserve(static_cast<std::size_t>(a));
    for (Index i = 0; i < a; ++i) {
        const Vector bra_i = step.anc_basis.col(i).conjugate();
        Matrix e = Matrix::Zero(p, p);
        for (Index r = 0; r < p; ++r) {
            for (Index c = 0; c < p; ++c) {
                // <r_b i_a| U |c_b psi_a>, plant index slow
                e(r, c) = bra_i.transpose() * step.unitary.block(r * a, c * a, a, a) * psi;
            }
        }
        ops.push_back(std::move(e));
    }
    return KrausChannel(p, std::move(ops));
}

Matrix apply_channel_raw(const KrausChannel& channel, const Matrix& rho) {
    if (rho.rows() != channel.dim() || rho.cols() != channel.dim()) {
        throw std::invalid_argument("apply_channel: dimension mismatch");
    }
    Matrix out = Matrix::Zero(channel.dim(), channel.dim());
    for (const auto& op : channel.operators()) out += op * rho * op.adjoint();
    return out;
}

DensityMatrix apply_channel(const KrausChannel& channel, const DensityMatrix& rho) {
    return DensityMatrix(apply_channel_raw(channel, rho.matrix()));
}

DensityMatrix dilation_step(const CoherentFeedbackStep& step, const DensityMatrix& rho) {
    if (rho.dim() != step.plant_dim) throw std::invalid_argument("dilation_step: dimension mismatch");
    const Matrix anc = step.anc_init.amplitudes() * step.anc_init.amplitudes().adjoint();
    const Matrix joint = step.unitary * tensor(rho.matrix(), anc) * step.unitary.adjoint();
    return DensityMatrix(partial_trace(joint, step.plant_dim, step.anc_dim, Subsystem::Left));
}

Matrix choi_matrix(const KrausChannel& channel) {
    const Index d = channel.dim();
    Matrix choi = Matrix::Zero(d * d, d * d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
            const Matrix mapped = apply_channel_raw(channel, basis_op(d, i, j));
            for (Index r = 0; r < d; ++r)
                for (Index c = 0; c < d; ++c)
                    choi(i * d + r, j * d + c) = mapped(r, c);
        }
    }
    return choi;
}

bool channels_equal(const KrausChannel& a, const KrausChannel& b, double tol) {
    if (a.dim() != b.dim()) throw std::invalid_argument("channels_equal: dimension mismatch");
    return (choi_matrix(a) - choi_matrix(b)).cwiseAbs().maxCoeff() <= tol;
}

KrausChannel replacement_channel(Index d, Index target) {
    if (target < 0 || target >= d) throw std::out_of_range("replacement_channel: target out of range");
    std::vector<Matrix> ops;
    ops.reserve(static_cast<std::size_t>(d));
    for (Index i = 0; i < d; ++i) ops.push_back(basis_op(d, target, i));
    return KrausChannel(d, std::move(ops));
}

DensityMatrix nonselective_mfc_step(const meas::GeneralizedMeasurement& m,
                                    const meas::FeedbackPolicy& policy, const DensityMatrix& rho,
                                    double p_floor) {
    if (m.dim() != rho.dim()) throw std::invalid_argument("nonselective_mfc_step: dimension mismatch");
    const meas::TrajectoryRecord empty_history;
    Matrix out = Matrix::Zero(rho.dim(), rho.dim());
    for (const auto& outcome : meas::enumerate_outcomes(m, rho, p_floor)) {
        const Matrix& op = m.operators()[static_cast<std::size_t>(outcome.index)];
        const Matrix branch = op * rho.matrix() * op.adjoint();
        if (outcome.below_floor) {
            out += branch;
            continue;
        }
        const meas::FeedbackAction action = policy(*outcome.post_state, empty_history);
        if (unitarity_deviation(action.unitary) > 1e-10) {
            throw std::invalid_argument("nonselective_mfc_step: policy returned non-unitary feedback");
        }
        out += action.unitary * branch * action.unitary.adjoint();
    }
    return DensityMatrix(std::move(out));
}

} // namespace qfc::channels
