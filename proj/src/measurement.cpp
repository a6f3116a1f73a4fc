#include "qfc/measurement.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace qfc::meas {

GeneralizedMeasurement::GeneralizedMeasurement(Index dim, std::vector<Matrix> operators,
                                               double tol_cptp)
    : dim_(dim), ops_(std::move(operators)) {
    if (dim_ <= 0) throw std::invalid_argument("GeneralizedMeasurement: dim must be > 0");
    if (ops_.empty()) throw std::invalid_argument("GeneralizedMeasurement: need at least one operator");
    Matrix sum = Matrix::Zero(dim_, dim_);
    for (const auto& m : ops_) {
        if (m.rows() != dim_ || m.cols() != dim_) {
            throw std::invalid_argument("GeneralizedMeasurement: operator dimension mismatch");
        }
        if (!m.allFinite()) throw std::invalid_argument("GeneralizedMeasurement: non-finite operator");
        sum += m.adjoint() * m;
    }
    const double dev = (sum - Matrix::Identity(dim_, dim_)).cwiseAbs().maxCoeff();
    if (dev > tol_cptp) {
        throw std::invalid_argument("GeneralizedMeasurement: completeness violated by " +
                                    std::to_string(dev));
    }
}

GeneralizedMeasurement GeneralizedMeasurement::projective_z(Index dim) {
    std::vector<Matrix> ops;
    ops.reserve(static_cast<std::size_t>(dim));
    for (Index i = 0; i < dim; ++i) ops.push_back(projector(dim, i));
    return GeneralizedMeasurement(dim, std::move(ops));
}

FeedbackPolicy identity_policy(Index dim) {
    return [dim](const DensityMatrix&, const TrajectoryRecord&) {
        return FeedbackAction{Matrix::Identity(dim, dim), "identity"};
    };
}

FeedbackPolicy constant_policy(Matrix unitary, std::string id) {
    return [u = std::move(unitary), id = std::move(id)](const DensityMatrix&,
                                                        const TrajectoryRecord&) {
        return FeedbackAction{u, id};
    };
}

std::vector<MeasurementOutcome> enumerate_outcomes(const GeneralizedMeasurement& meas,
                                                   const DensityMatrix& rho, double p_floor) {
    if (meas.dim() != rho.dim()) throw std::invalid_argument("enumerate_outcomes: dimension mismatch");
    std::vector<MeasurementOutcome> outcomes;
    outcomes.reserve(meas.outcome_count());
    double total = 0.0;
    for (std::size_t n = 0; n < meas.outcome_count(); ++n) {
        const Matrix& m = meas.operators()[n];
        MeasurementOutcome out;
        out.index = static_cast<int>(n);
        Matrix post = m * rho.matrix() * m.adjoint();
        out.probability = post.trace().real();
        total += out.probability;
        if (out.probability <= p_floor) {
            out.below_floor = true;
        } else {
            out.post_state = DensityMatrix(post / out.probability);
        }
        outcomes.push_back(std::move(out));
    }
    if (std::abs(total - 1.0) > 1e-10) {
        throw std::runtime_error("enumerate_outcomes: probabilities sum to " + std::to_string(total));
    }
    return outcomes;
}

MeasurementOutcome sample_outcome(const GeneralizedMeasurement& meas, const DensityMatrix& rho,
                                  RngEngine& rng, double p_floor) {
    auto outcomes = enumerate_outcomes(meas, rho, p_floor);
    double eligible_mass = 0.0;
    for (const auto& o : outcomes)
        if (!o.below_floor) eligible_mass += o.probability;
    std::uniform_real_distribution<double> dist(0.0, eligible_mass);
    const double draw = dist(rng);
    double acc = 0.0;
    std::size_t last_eligible = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].below_floor) continue;
        last_eligible = i;
        acc += outcomes[i].probability;
        if (draw <= acc) return outcomes[i];
    }
    return outcomes[last_eligible];
}

std::pair<DensityMatrix, TrajectoryStep> mfc_step(const GeneralizedMeasurement& meas,
                                                  const FeedbackPolicy& policy,
                                                  const DensityMatrix& rho, RngEngine& rng,
                                                  int step_index, bool snapshot,
                                                  const TrajectoryRecord& history) {
    const MeasurementOutcome outcome = sample_outcome(meas, rho, rng);
    const FeedbackAction action = policy(*outcome.post_state, history);
    const double u_dev = unitarity_deviation(action.unitary);
    if (u_dev > 1e-10) {
        throw std::invalid_argument("mfc_step: policy returned non-unitary feedback (dev " +
                                    std::to_string(u_dev) + ")");
    }
    Matrix next = action.unitary * outcome.post_state->matrix() * action.unitary.adjoint();
    DensityMatrix next_state(std::move(next));
    TrajectoryStep step;
    step.step = step_index;
    step.outcome = outcome.index;
    step.unitary_id = action.id;
    if (snapshot) step.state_snapshot = next_state.matrix();
    return {std::move(next_state), std::move(step)};
}

MfcRunResult run_mfc(const MfcSchedule& schedule, const DensityMatrix& rho0, RngEngine& rng,
                     const MfcRunOptions& options) {
    if (schedule.empty()) throw std::invalid_argument("run_mfc: empty schedule");
    DensityMatrix state = rho0;
    TrajectoryRecord record;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        auto [next, entry] = mfc_step(schedule[k].first, schedule[k].second, state, rng,
                                      static_cast<int>(k), options.snapshots, record);
        state = std::move(next);
        record.steps.push_back(std::move(entry));
    }
    return MfcRunResult{std::move(state), std::move(record)};
}

void write_jsonl(const TrajectoryRecord& record, std::ostream& out) {
    for (const auto& step : record.steps) {
        nlohmann::json line;
        line["k"] = step.step;
        line["n"] = step.outcome;
        line["unitary"] = step.unitary_id;
        if (step.state_snapshot) {
            std::vector<double> flat;
            const Matrix& m = *step.state_snapshot;
            flat.reserve(static_cast<std::size_t>(2 * m.size()));
            for (Index i = 0; i < m.rows(); ++i) {
                for (Index j = 0; j < m.cols(); ++j) {
                    flat.push_back(m(i, j).real());
                    flat.push_back(m(i, j).imag());
                }
            }
            line["state"] = flat;
        }
        out << line.dump() << "\n";
    }
}

} // namespace qfc::meas
