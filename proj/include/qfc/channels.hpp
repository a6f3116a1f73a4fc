// channels.hpp — Operator-sum (Kraus) channels: extraction of the coherent
// feedback channel from a unitary + ancilla, the outcome-averaged measurement
// feedback step, replacement channels, and Choi-matrix channel equality.

#pragma once

#include "qfc/linalg.hpp"
#include "qfc/measurement.hpp"

#include <vector>

namespace qfc::channels {

// Operators {E_i} with sum E†E = I.
class KrausChannel {
public:
    KrausChannel(Index dim, std::vector<Matrix> operators, double tol_cptp = 1e-9);

    Index dim() const { return dim_; }
    const std::vector<Matrix>& operators() const { return ops_; }

private:
    Index dim_;
    std::vector<Matrix> ops_;
};

// One coherent feedback round: plant coupled to an ancilla prepared in
// anc_init, joint unitary evolution, ancilla read out in anc_basis (columns).
struct CoherentFeedbackStep {
    CoherentFeedbackStep(Index plant_dim, Index anc_dim, Matrix unitary, PureState anc_init);
    CoherentFeedbackStep(Index plant_dim, Index anc_dim, Matrix unitary, PureState anc_init,
                         Matrix anc_basis);

    Index plant_dim;
    Index anc_dim;
    Matrix unitary;
    PureState anc_init;
    Matrix anc_basis;
};

// E_i = <i|_a U |psi>_a. The plant is the left (slow) tensor factor.
KrausChannel kraus_from_cfc(const CoherentFeedbackStep& step);

DensityMatrix apply_channel(const KrausChannel& channel, const DensityMatrix& rho);
Matrix apply_channel_raw(const KrausChannel& channel, const Matrix& rho);

// Dilation route: Tr_a( U (rho ⊗ |psi><psi|) U† ). Reference computation the
// Kraus extraction is checked against.
DensityMatrix dilation_step(const CoherentFeedbackStep& step, const DensityMatrix& rho);

// Choi matrix sum_ij |i><j| ⊗ C(|i><j|); the canonical channel fingerprint.
Matrix choi_matrix(const KrausChannel& channel);

// True iff the Choi matrices agree entrywise within tol. Kraus decompositions
// are non-unique, so operator lists are never compared directly.
bool channels_equal(const KrausChannel& a, const KrausChannel& b, double tol = 1e-10);

// {|target><i| : i = 0..d-1}; sends every state to |target><target|.
KrausChannel replacement_channel(Index d, Index target);

// Outcome-averaged measurement feedback: sum_n U(rho_n) M_n rho M_n† U†(rho_n),
// by exact enumeration. Branches at or below p_floor contribute the bare
// M rho M† term (identity feedback).
DensityMatrix nonselective_mfc_step(const meas::GeneralizedMeasurement& m,
                                    const meas::FeedbackPolicy& policy, const DensityMatrix& rho,
                                    double p_floor = meas::kProbFloor);

} // namespace qfc::channels
