#include "qfc/sme.hpp"

#include "qfc/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>

namespace qfc::sme {

AtomicEnsembleModel::AtomicEnsembleModel(int n, double s_, double meas_rate_, double efficiency_)
    : n_atoms(n), s(s_), meas_rate(meas_rate_), efficiency(efficiency_),
      spin(spin_operators(n)) {
    if (meas_rate <= 0.0) throw std::invalid_argument("AtomicEnsembleModel: M must be > 0");
    if (efficiency <= 0.0 || efficiency > 1.0) {
        throw std::invalid_argument("AtomicEnsembleModel: eta must lie in (0, 1]");
    }
}

Matrix SamplePath::state_matrix(std::size_t k) const {
    if (rep == StateRep::Density) return states.at(k);
    return from_bloch_raw(bloch.at(k));
}

std::vector<double> SamplePath::fidelity_to(const Matrix& target) const {
    std::vector<double> out;
    out.reserve(size());
    for (std::size_t k = 0; k < size(); ++k) {
        out.push_back(fidelity_to_target(state_matrix(k), target));
    }
    return out;
}

Matrix lindblad_d(const Matrix& l, const Matrix& rho) {
    const Matrix ll = l.adjoint() * l;
    return l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll);
}

Matrix innovation_h(const Matrix& l, const Matrix& rho) {
    Matrix t = l * rho + rho * l.adjoint();
    t -= t.trace() * rho;
    return t;
}

Matrix renormalize(Matrix rho, RenormPolicy policy, double clip_fail_floor) {
    if (policy != RenormPolicy::TraceOnly) {
        rho = 0.5 * (rho + rho.adjoint().eval());
    }
    if (policy == RenormPolicy::TraceHermitizeEigenclip) {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(rho);
        if (solver.info() != Eigen::Success) throw std::runtime_error("renormalize: eigensolver failed");
        Eigen::VectorXd vals = solver.eigenvalues();
        if (vals.minCoeff() < -clip_fail_floor) {
            throw std::runtime_error("renormalize: state repair failure, eigenvalue " +
                                     std::to_string(vals.minCoeff()));
        }
        if (vals.minCoeff() < 0.0) {
            vals = vals.cwiseMax(0.0);
            rho = solver.eigenvectors() * vals.asDiagonal() * solver.eigenvectors().adjoint();
        }
    }
    const double tr = rho.trace().real();
    if (!(tr > 0.0)) throw std::runtime_error("renormalize: non-positive trace");
    rho /= tr;
    return rho;
}

Matrix sme_step(const AtomicEnsembleModel& model, const Matrix& rho_c, double u, double dW,
                double dt, RenormPolicy policy, double clip_fail_floor) {
    const Matrix& fz = model.spin.fz;
    const Matrix& fy = model.spin.fy;
    const Complex i(0.0, 1.0);
    Matrix next = rho_c;
    next += (-i * u) * (fy * rho_c - rho_c * fy) * dt;
    next += (-i * model.s) * (fz * rho_c - rho_c * fz) * dt;
    next += model.meas_rate * lindblad_d(fz, rho_c) * dt;
    next += std::sqrt(model.meas_rate * model.efficiency) * innovation_h(fz, rho_c) * dW;
    return renormalize(std::move(next), policy, clip_fail_floor);
}

Matrix omega_step(const AtomicEnsembleModel& model, const Matrix& rho_c, double u, double dy,
                  double dt) {
    const Matrix& fz = model.spin.fz;
    const Matrix& fy = model.spin.fy;
    const Complex i(0.0, 1.0);
    Matrix omega = Matrix::Identity(fz.rows(), fz.cols());
    omega -= i * (u * fy + model.s * fz) * dt;
    omega -= 0.5 * model.meas_rate * (fz * fz) * dt;
    omega += dy * std::sqrt(model.meas_rate) * fz;
    Matrix out = omega * rho_c * omega.adjoint();
    const double norm = out.trace().real();
    if (norm <= 0.0) {
        throw std::runtime_error("omega_step: step rejected, normalization " + std::to_string(norm));
    }
    return out / norm;
}

double output_increment(const AtomicEnsembleModel& model, const Matrix& rho_c, double dW,
                        double dt) {
    const double mean_fz = (model.spin.fz * rho_c).trace().real();
    return 2.0 * std::sqrt(model.meas_rate) * model.efficiency * mean_fz * dt +
           std::sqrt(model.efficiency) * dW;
}

double innovation_from_output(const AtomicEnsembleModel& model, const Matrix& rho_c, double dy,
                              double dt) {
    const double mean_fz = (model.spin.fz * rho_c).trace().real();
    return (dy - 2.0 * std::sqrt(model.meas_rate) * model.efficiency * mean_fz * dt) /
           std::sqrt(model.efficiency);
}

BlochVector bloch_sme_step(const AtomicEnsembleModel& model, const BlochVector& r, double u,
                           double dW, double dt, RenormPolicy policy) {
    if (model.n_atoms != 1) throw std::invalid_argument("bloch_sme_step: requires N = 1");
    const double m = model.meas_rate;
    const double c = std::sqrt(m * model.efficiency);
    const double s = model.s;
    BlochVector next;
    next.x = r.x + (-0.5 * m * r.x - u * r.z + s * r.y) * dt + c * r.x * r.z * dW;
    next.y = r.y + (-0.5 * m * r.y - s * r.x) * dt + c * r.y * r.z * dW;
    next.z = r.z + (u * r.x) * dt - c * (1.0 - r.z * r.z) * dW;
    if (policy == RenormPolicy::TraceHermitizeEigenclip) {
        // Same projection the density eigenclip performs for a qubit:
        // clamp the negative eigenvalue (1-|r|)/2 to zero.
        const double n = std::sqrt(next.norm_sq());
        if (n > 1.0) {
            next.x /= n;
            next.y /= n;
            next.z /= n;
        }
    }
    return next;
}

BlochVector bloch_me_step(const AtomicEnsembleModel& model, const BlochVector& r, double u,
                          double dt) {
    if (model.n_atoms != 1) throw std::invalid_argument("bloch_me_step: requires N = 1");
    const double m = model.meas_rate;
    const double s = model.s;
    BlochVector next;
    next.x = r.x + (-0.5 * m * r.x - u * r.z + s * r.y) * dt;
    next.y = r.y + (-0.5 * m * r.y - s * r.x) * dt;
    next.z = r.z + (u * r.x) * dt;
    return next;
}

namespace {

std::size_t step_count(const SmeConfig& config) {
    if (!(config.dt > 0.0) || config.dt > config.horizon) {
        throw std::invalid_argument("SmeConfig: need 0 < dt <= horizon");
    }
    return static_cast<std::size_t>(std::llround(config.horizon / config.dt));
}

void check_rep(const AtomicEnsembleModel& model, const SmeConfig& config) {
    if (config.state_rep == StateRep::Bloch && model.n_atoms != 1) {
        throw std::invalid_argument("SmeConfig: Bloch representation requires N = 1");
    }
}

double clamp_control(double u, double u_max) {
    return std::min(std::max(u, -u_max), u_max);
}

// Shared trajectory loop; next_dW consumes (state, step index) and returns
// the innovation increment for simulate vs filter modes.
template <class NextDw>
SamplePath run_conditioned(const AtomicEnsembleModel& model, const Controller& controller,
                           const DensityMatrix& rho0, const SmeConfig& config, NextDw next_dW,
                           bool dW_from_record, const std::vector<double>* dy_stream) {
    check_rep(model, config);
    const std::size_t n = step_count(config);
    SamplePath path;
    path.rep = config.state_rep;
    path.seed = config.seed;
    path.times.reserve(n + 1);
    path.u.reserve(n + 1);
    path.dW.reserve(n + 1);
    path.dy.reserve(n + 1);

    const bool use_bloch = config.state_rep == StateRep::Bloch;
    Matrix rho = rho0.matrix();
    BlochVector r;
    if (use_bloch) r = to_bloch_raw(rho);

    for (std::size_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * config.dt;
        const Matrix current = use_bloch ? from_bloch_raw(r) : rho;
        path.times.push_back(t);
        if (use_bloch) path.bloch.push_back(r); else path.states.push_back(current);
        const double u = clamp_control(controller(t, current), config.u_max);
        path.u.push_back(u);
        if (k == n) {
            path.dW.push_back(0.0);
            path.dy.push_back(0.0);
            break;
        }
        double dW;
        double dy;
        if (dW_from_record) {
            dy = (*dy_stream)[k];
            dW = innovation_from_output(model, current, dy, config.dt);
        } else {
            dW = next_dW();
            dy = output_increment(model, current, dW, config.dt);
        }
        path.dW.push_back(dW);
        path.dy.push_back(dy);
        if (use_bloch) {
            r = bloch_sme_step(model, r, u, dW, config.dt, config.renorm);
        } else {
            rho = sme_step(model, rho, u, dW, config.dt, config.renorm, config.clip_fail_floor);
        }
    }
    return path;
}

} // namespace

SamplePath simulate_trajectory(const AtomicEnsembleModel& model, const Controller& controller,
                               const DensityMatrix& rho0, const SmeConfig& config) {
    RngEngine rng = make_engine(config.seed);
    const double std_dev = std::sqrt(config.dt);
    auto next = [&rng, std_dev]() { return normal_draw(rng, std_dev); };
    return run_conditioned(model, controller, rho0, config, next, false, nullptr);
}

SamplePath filter_from_record(const AtomicEnsembleModel& model, const Controller& controller,
                              const std::vector<double>& dy_stream, const DensityMatrix& rho0,
                              const SmeConfig& config) {
    if (dy_stream.size() != step_count(config)) {
        throw std::invalid_argument("filter_from_record: output stream length mismatch");
    }
    auto next = []() { return 0.0; };
    return run_conditioned(model, controller, rho0, config, next, true, &dy_stream);
}

SamplePath simulate_master(const AtomicEnsembleModel& model,
                           const std::function<double(double)>& u_of_t, const DensityMatrix& rho0,
                           const SmeConfig& config) {
    check_rep(model, config);
    const std::size_t n = step_count(config);
    const Matrix& fz = model.spin.fz;
    const Matrix& fy = model.spin.fy;
    const Complex i(0.0, 1.0);
    auto rhs = [&](const Matrix& rho, double u) -> Matrix {
        const Matrix h = model.s * fz + u * fy;
        return -i * (h * rho - rho * h) + model.meas_rate * lindblad_d(fz, rho);
    };

    SamplePath path;
    path.rep = config.state_rep;
    path.seed = config.seed;
    Matrix rho = rho0.matrix();
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * config.dt;
        path.times.push_back(t);
        if (config.state_rep == StateRep::Bloch) {
            path.bloch.push_back(to_bloch_raw(rho));
        } else {
            path.states.push_back(rho);
        }
        const double u = clamp_control(u_of_t(t), config.u_max);
        path.u.push_back(u);
        if (k == n) break;
        const double h = config.dt;
        if (config.ode_scheme == OdeScheme::Euler) {
            rho += h * rhs(rho, u);
        } else {
            const double u_mid = clamp_control(u_of_t(t + 0.5 * h), config.u_max);
            const double u_end = clamp_control(u_of_t(t + h), config.u_max);
            const Matrix k1 = rhs(rho, u);
            const Matrix k2 = rhs(rho + 0.5 * h * k1, u_mid);
            const Matrix k3 = rhs(rho + 0.5 * h * k2, u_mid);
            const Matrix k4 = rhs(rho + h * k3, u_end);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        rho = renormalize(std::move(rho), RenormPolicy::TraceHermitize);
    }
    return path;
}

EnsembleStats ensemble_average(const AtomicEnsembleModel& model, const ControllerFactory& make,
                               const DensityMatrix& rho0, std::size_t k_trajectories,
                               const SmeConfig& config,
                               const std::optional<Matrix>& fidelity_target) {
    if (k_trajectories < 2) throw std::invalid_argument("ensemble_average: need K >= 2");
    const std::size_t n = step_count(config) + 1;
    const Index d = model.spin.dim;

    struct Partial {
        std::vector<Matrix> sum;
        std::vector<Eigen::MatrixXd> sum_sq_re;
        std::vector<Eigen::MatrixXd> sum_sq_im;
        std::vector<double> fid_sum;
        std::vector<double> fid_sum_sq;
    };

    auto run_chunk = [&](std::size_t first, std::size_t last) -> Partial {
        Partial p;
        p.sum.assign(n, Matrix::Zero(d, d));
        p.sum_sq_re.assign(n, Eigen::MatrixXd::Zero(d, d));
        p.sum_sq_im.assign(n, Eigen::MatrixXd::Zero(d, d));
        if (fidelity_target) {
            p.fid_sum.assign(n, 0.0);
            p.fid_sum_sq.assign(n, 0.0);
        }
        for (std::size_t idx = first; idx < last; ++idx) {
            SmeConfig traj_config = config;
            traj_config.seed = derive_seed(config.seed, idx);
            Controller controller = make();
            const SamplePath path = simulate_trajectory(model, controller, rho0, traj_config);
            for (std::size_t k = 0; k < n; ++k) {
                const Matrix state = path.state_matrix(k);
                p.sum[k] += state;
                p.sum_sq_re[k] += state.real().cwiseProduct(state.real());
                p.sum_sq_im[k] += state.imag().cwiseProduct(state.imag());
                if (fidelity_target) {
                    const double f = fidelity_to_target(state, *fidelity_target);
                    p.fid_sum[k] += f;
                    p.fid_sum_sq[k] += f * f;
                }
            }
        }
        return p;
    };

    Partial total;
    total.sum.assign(n, Matrix::Zero(d, d));
    total.sum_sq_re.assign(n, Eigen::MatrixXd::Zero(d, d));
    total.sum_sq_im.assign(n, Eigen::MatrixXd::Zero(d, d));
    total.fid_sum.assign(n, 0.0);
    total.fid_sum_sq.assign(n, 0.0);
    auto reduce = [&](Partial p) {
        for (std::size_t k = 0; k < n; ++k) {
            total.sum[k] += p.sum[k];
            total.sum_sq_re[k] += p.sum_sq_re[k];
            total.sum_sq_im[k] += p.sum_sq_im[k];
            if (fidelity_target) {
                total.fid_sum[k] += p.fid_sum[k];
                total.fid_sum_sq[k] += p.fid_sum_sq[k];
            }
        }
    };
    parallel_chunks<Partial>(k_trajectories, 16, run_chunk, reduce);

    EnsembleStats stats;
    stats.trajectories = k_trajectories;
    const double kf = static_cast<double>(k_trajectories);
    stats.times.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        stats.times.push_back(static_cast<double>(k) * config.dt);
        const Matrix mean = total.sum[k] / kf;
        // Unbiased per-entry variance -> standard error of the mean.
        Eigen::MatrixXd var_re =
            (total.sum_sq_re[k] / kf - mean.real().cwiseProduct(mean.real())) * (kf / (kf - 1.0));
        Eigen::MatrixXd var_im =
            (total.sum_sq_im[k] / kf - mean.imag().cwiseProduct(mean.imag())) * (kf / (kf - 1.0));
        stats.stderr_real.push_back((var_re.cwiseMax(0.0) / kf).cwiseSqrt());
        stats.stderr_imag.push_back((var_im.cwiseMax(0.0) / kf).cwiseSqrt());
        stats.mean_state.push_back(mean);
        if (fidelity_target) {
            const double fm = total.fid_sum[k] / kf;
            const double var = std::max(0.0, (total.fid_sum_sq[k] / kf - fm * fm) * (kf / (kf - 1.0)));
            stats.mean_fidelity.push_back(fm);
            stats.stderr_fidelity.push_back(std::sqrt(var / kf));
        }
    }
    return stats;
}

void write_csv(const SamplePath& path, const AtomicEnsembleModel& model, std::ostream& out) {
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    const bool bloch = path.rep == StateRep::Bloch;
    out << "# rep=" << (bloch ? "bloch" : "density") << " n_atoms=" << model.n_atoms
        << " M=" << fmt(model.meas_rate) << " eta=" << fmt(model.efficiency)
        << " s=" << fmt(model.s) << " seed=" << path.seed << "\n";
    out << "t,u,dW,dy";
    if (bloch) {
        out << ",x,y,z";
    } else {
        const Index d = model.spin.dim;
        for (Index i = 0; i < d; ++i)
            for (Index j = 0; j < d; ++j)
                out << ",re_" << i << j << ",im_" << i << j;
    }
    out << "\n";
    for (std::size_t k = 0; k < path.size(); ++k) {
        const double dW = k < path.dW.size() ? path.dW[k] : 0.0;
        const double dy = k < path.dy.size() ? path.dy[k] : 0.0;
        out << fmt(path.times[k]) << "," << fmt(path.u[k]) << "," << fmt(dW) << "," << fmt(dy);
        if (bloch) {
            const BlochVector& r = path.bloch[k];
            out << "," << fmt(r.x) << "," << fmt(r.y) << "," << fmt(r.z);
        } else {
            const Matrix& m = path.states[k];
            for (Index i = 0; i < m.rows(); ++i)
                for (Index j = 0; j < m.cols(); ++j)
                    out << "," << fmt(m(i, j).real()) << "," << fmt(m(i, j).imag());
        }
        out << "\n";
    }
}

} // namespace qfc::sme
