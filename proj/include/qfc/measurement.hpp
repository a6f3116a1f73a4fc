// measurement.hpp — Discrete-step selective measurement feedback: stochastic
// sampling of generalized measurements, state-conditioned feedback unitaries,
// and trajectory recording.

#pragma once

#include "qfc/linalg.hpp"
#include "qfc/rng.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace qfc::meas {

// Probability floor below which a branch is flagged and never sampled.
inline constexpr double kProbFloor = 1e-12;

// Operators {M_n} with sum M†M = I.
class GeneralizedMeasurement {
public:
    GeneralizedMeasurement(Index dim, std::vector<Matrix> operators, double tol_cptp = 1e-9);
    static GeneralizedMeasurement projective_z(Index dim);

    Index dim() const { return dim_; }
    const std::vector<Matrix>& operators() const { return ops_; }
    std::size_t outcome_count() const { return ops_.size(); }

private:
    Index dim_;
    std::vector<Matrix> ops_;
};

struct MeasurementOutcome {
    int index = 0;
    double probability = 0.0;
    // Absent when the branch probability is at or below the floor.
    std::optional<DensityMatrix> post_state;
    bool below_floor = false;
};

struct TrajectoryStep {
    int step = 0;
    int outcome = 0;
    std::string unitary_id;
    std::optional<Matrix> state_snapshot;
};

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::vector<TrajectoryStep> steps;
};

struct FeedbackAction {
    Matrix unitary;
    std::string id;
};

// Maps the post-measurement state (and history) to a feedback unitary.
using FeedbackPolicy = std::function<FeedbackAction(const DensityMatrix& post_state,
                                                    const TrajectoryRecord& history)>;

FeedbackPolicy identity_policy(Index dim);
FeedbackPolicy constant_policy(Matrix unitary, std::string id);

std::vector<MeasurementOutcome> enumerate_outcomes(const GeneralizedMeasurement& meas,
                                                   const DensityMatrix& rho,
                                                   double p_floor = kProbFloor);

MeasurementOutcome sample_outcome(const GeneralizedMeasurement& meas, const DensityMatrix& rho,
                                  RngEngine& rng, double p_floor = kProbFloor);

// One measurement + conditioned-unitary step. Returns the post-feedback state
// and the record entry for this step. `history` is what the policy may read.
std::pair<DensityMatrix, TrajectoryStep> mfc_step(const GeneralizedMeasurement& meas,
                                                  const FeedbackPolicy& policy,
                                                  const DensityMatrix& rho, RngEngine& rng,
                                                  int step_index = 0, bool snapshot = false,
                                                  const TrajectoryRecord& history = {});

struct MfcRunResult {
    DensityMatrix final_state;
    TrajectoryRecord record;
};

struct MfcRunOptions {
    bool snapshots = false;
};

using MfcSchedule = std::vector<std::pair<GeneralizedMeasurement, FeedbackPolicy>>;

MfcRunResult run_mfc(const MfcSchedule& schedule, const DensityMatrix& rho0, RngEngine& rng,
                     const MfcRunOptions& options = {});

// JSON-lines serialization: one step per line with k, n, unitary id, and the
// optional snapshot as flattened (re, im) pairs.
void write_jsonl(const TrajectoryRecord& record, std::ostream& out);

} // namespace qfc::meas
