// sme.hpp — Continuous-time layer: the measurement-conditioned stochastic
// master equation with its innovation process, the measurement-operator
// (Omega) form of the same step, the deterministic non-selective master
// equation, qubit Bloch-form specializations, and seeded ensemble averaging.

#pragma once

#include "qfc/linalg.hpp"
#include "qfc/rng.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace qfc::sme {

// Continuously monitored atomic ensemble: drift s (absorbs detuning),
// measurement rate M, detection efficiency eta, collective spin operators.
struct AtomicEnsembleModel {
    AtomicEnsembleModel(int n_atoms, double s, double meas_rate, double efficiency);

    int n_atoms;
    double s;
    double meas_rate;
    double efficiency;
    SpinOperators spin;
};

enum class RenormPolicy { TraceOnly, TraceHermitize, TraceHermitizeEigenclip };
enum class StateRep { Density, Bloch };
enum class OdeScheme { Rk4, Euler };

struct SmeConfig {
    double dt = 1e-3;
    double horizon = 1.0;
    std::uint64_t seed = 0;
    RenormPolicy renorm = RenormPolicy::TraceHermitize;
    StateRep state_rep = StateRep::Density;
    OdeScheme ode_scheme = OdeScheme::Rk4;
    double u_max = 10.0;
    // Eigenclip aborts when an eigenvalue falls below -clip_fail_floor;
    // Euler-Maruyama tangent steps overshoot the state space near pure
    // states by O(dW^2), so the floor is far looser than tol thresholds.
    double clip_fail_floor = 0.5;
};

// One conditioned trajectory. Entry k holds the state at t_k and the control
// and increments applied over [t_k, t_{k+1}); the final entry carries zero
// increments. Master-equation paths leave dW/dy empty.
struct SamplePath {
    StateRep rep = StateRep::Density;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<double> u;
    std::vector<double> dW;
    std::vector<double> dy;
    std::vector<Matrix> states;       // Density rep
    std::vector<BlochVector> bloch;   // Bloch rep

    std::size_t size() const { return times.size(); }
    Matrix state_matrix(std::size_t k) const;
    std::vector<double> fidelity_to(const Matrix& target) const;
};

// Feedback controller for one trajectory; may carry internal memory.
using Controller = std::function<double(double t, const Matrix& rho_c)>;
// Fresh controller per trajectory (ensembles).
using ControllerFactory = std::function<Controller()>;

inline Controller zero_controller() {
    return [](double, const Matrix&) { return 0.0; };
}
inline ControllerFactory constant_control(double u) {
    return [u]() { return [u](double, const Matrix&) { return u; }; };
}

// D[L]rho = L rho L† - (L†L rho + rho L†L)/2
Matrix lindblad_d(const Matrix& l, const Matrix& rho);
// H[L]rho = L rho + rho L† - Tr(L rho + rho L†) rho
Matrix innovation_h(const Matrix& l, const Matrix& rho);

Matrix renormalize(Matrix rho, RenormPolicy policy, double clip_fail_floor = 0.5);

// Euler-Maruyama update of the conditioned equation:
//   drho = -i u [F_y, rho] dt - i s [F_z, rho] dt + M D[F_z] rho dt
//          + sqrt(M eta) H[F_z] rho dW
Matrix sme_step(const AtomicEnsembleModel& model, const Matrix& rho_c, double u, double dW,
                double dt, RenormPolicy policy = RenormPolicy::TraceHermitize,
                double clip_fail_floor = 0.5);

// Measurement-operator form of the same step:
//   rho <- Om rho Om† / Tr,  Om = I - i(u F_y + s F_z) dt - (M/2) F_z² dt
//                                 + dy sqrt(M) F_z
Matrix omega_step(const AtomicEnsembleModel& model, const Matrix& rho_c, double u, double dy,
                  double dt);

// Measurement output increment: dy = 2 sqrt(M) eta <F_z> dt + sqrt(eta) dW.
double output_increment(const AtomicEnsembleModel& model, const Matrix& rho_c, double dW,
                        double dt);
// Innovation recovered from a recorded output increment.
double innovation_from_output(const AtomicEnsembleModel& model, const Matrix& rho_c, double dy,
                              double dt);

// Bloch-form specializations (N = 1 only).
BlochVector bloch_sme_step(const AtomicEnsembleModel& model, const BlochVector& r, double u,
                           double dW, double dt, RenormPolicy policy = RenormPolicy::TraceHermitize);
BlochVector bloch_me_step(const AtomicEnsembleModel& model, const BlochVector& r, double u,
                          double dt);

// Simulate one conditioned trajectory: dW ~ Normal(0, dt) per step, dy per
// the innovation relation, controller queried at each step.
SamplePath simulate_trajectory(const AtomicEnsembleModel& model, const Controller& controller,
                               const DensityMatrix& rho0, const SmeConfig& config);

// Drive the conditioned equation with a recorded output stream: the
// innovation is recomputed from the current estimate at each step.
SamplePath filter_from_record(const AtomicEnsembleModel& model, const Controller& controller,
                              const std::vector<double>& dy_stream, const DensityMatrix& rho0,
                              const SmeConfig& config);

// Deterministic non-selective master equation
//   drho/dt = -i [s F_z + u F_y, rho] + M D[F_z] rho
SamplePath simulate_master(const AtomicEnsembleModel& model,
                           const std::function<double(double)>& u_of_t, const DensityMatrix& rho0,
                           const SmeConfig& config);

// Pointwise ensemble statistics over K seeded trajectories. Reduction is by
// trajectory index, so results do not depend on the worker count.
struct EnsembleStats {
    std::size_t trajectories = 0;
    std::vector<double> times;
    std::vector<Matrix> mean_state;
    std::vector<Eigen::MatrixXd> stderr_real;
    std::vector<Eigen::MatrixXd> stderr_imag;
    std::vector<double> mean_fidelity;    // filled when a target is given
    std::vector<double> stderr_fidelity;
};

EnsembleStats ensemble_average(const AtomicEnsembleModel& model, const ControllerFactory& make,
                               const DensityMatrix& rho0, std::size_t k_trajectories,
                               const SmeConfig& config,
                               const std::optional<Matrix>& fidelity_target = std::nullopt);

// CSV serialization: header names the representation and model parameters;
// columns t, u, dW, dy, then state components.
void write_csv(const SamplePath& path, const AtomicEnsembleModel& model, std::ostream& out);

} // namespace qfc::sme
