#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mimopc/cone_program.hpp"

namespace mimopc {

/// Tolerances and limits for the interior-point solver. The defaults realize
/// an eps-solution with eps = 1e-8 in both feasibility and duality gap.
struct SolverSettings {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    int max_iterations = 200;
    double step_fraction = 0.99; ///< fraction-to-boundary rule
    double static_reg = 1e-10;
    int refinement_steps = 2;
    /// Fallback tolerances accepted when floating-point breakdown stops the
    /// iteration before the strict targets are met (degenerate problems hit
    /// an accuracy floor near the square root of machine precision).
    double feastol_relaxed = 1e-5;
    double abstol_relaxed = 1e-5;
    double reltol_relaxed = 1e-5;
};

namespace ipm_detail {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Nesterov-Todd scaling state for one second-order cone: W = eta * H(wbar)
/// with wbar = (a, q) on the unit hyperboloid, so that W z = W^{-1} s.
struct SocScaling {
    Eigen::Index start = 0;
    Eigen::Index dim = 0;
    double eta = 1.0;
    double eta_sq = 1.0;
    double a = 1.0;
    VectorXd q;
};

/// Dense primal-dual path-following solver on the homogeneous self-dual
/// embedding of
///
///   minimize c'x  s.t.  Gx + s = h,  s in K,
///
/// with Mehrotra predictor-corrector steps and NT scaling. The KKT system is
/// reduced to the SPD normal equations G' W^{-2} G, which is cheap at the
/// dense sizes this project produces.
class ConicSolver {
  public:
    ConicSolver(const ConeProgram &prog, const SolverSettings &settings)
        : p_(prog), set_(settings), n_(prog.num_vars()), m_(prog.num_rows()),
          n_orth_(prog.orthant_dim) {
        p_.validate();
        degree_ = static_cast<double>(n_orth_ + static_cast<Eigen::Index>(p_.soc_dims.size()));
        socs_.resize(p_.soc_dims.size());
        Eigen::Index at = n_orth_;
        for (std::size_t j = 0; j < p_.soc_dims.size(); ++j) {
            socs_[j].start = at;
            socs_[j].dim = p_.soc_dims[j];
            socs_[j].q.resize(socs_[j].dim - 1);
            at += socs_[j].dim;
        }
        // Per-cone Gram blocks reused in every normal-equations assembly.
        soc_gram_.reserve(socs_.size());
        soc_head_row_.reserve(socs_.size());
        for (const SocScaling &sc : socs_) {
            const auto block = p_.G.middleRows(sc.start, sc.dim);
            soc_gram_.push_back(block.transpose() * block);
            soc_head_row_.push_back(p_.G.row(sc.start).transpose());
        }
        d_orth_ = VectorXd::Ones(n_orth_);
    }

    SolveResult solve() {
        SolveResult res;
        initialize();

        double best_score = std::numeric_limits<double>::max();
        VectorXd best_x = x_, best_z = z_, best_s = s_;
        double best_tau = tau_;
        double best_pres = std::numeric_limits<double>::max();
        double best_dres = std::numeric_limits<double>::max();
        double best_agap = std::numeric_limits<double>::max();
        double best_relgap = std::numeric_limits<double>::max();

        int iter = 0;
        for (; iter <= set_.max_iterations; ++iter) {
            computeResiduals();

            const double pcost = cx_ / tau_;
            const double dcost = -hz_ / tau_;
            const double nx = x_.norm(), nz = z_.norm(), ns = s_.norm();
            const double pres = rz_.norm() / std::max(resz0_ + nx + ns, 1.0) / tau_;
            const double dres = rx_.norm() / std::max(resx0_ + nz, 1.0) / tau_;
            gap_ = s_.dot(z_);
            mu_ = (gap_ + kappa_ * tau_) / (degree_ + 1.0);
            double relgap = std::numeric_limits<double>::max();
            if (pcost < 0.0)
                relgap = gap_ / (tau_ * tau_) / (-pcost);
            else if (dcost > 0.0)
                relgap = gap_ / (tau_ * tau_) / dcost;

            // Track the best iterate so a numerical dead end never reports a
            // silently wrong answer.
            const double score = std::max({pres, dres, gap_ / (tau_ * tau_) /
                                                           std::max(1.0, std::abs(pcost))});
            if (std::isfinite(score) && score < best_score) {
                best_score = score;
                best_x = x_;
                best_z = z_;
                best_s = s_;
                best_tau = tau_;
                best_pres = pres;
                best_dres = dres;
                best_agap = gap_ / (tau_ * tau_);
                best_relgap = relgap;
            }

            // Optimality.
            if ((-cx_ > 0.0 || -hz_ >= -set_.abstol) && pres < set_.feastol && dres < set_.feastol &&
                (gap_ / (tau_ * tau_) < set_.abstol || relgap < set_.reltol)) {
                res.status = SolveStatus::Optimal;
                res.x = x_ / tau_;
                res.z = z_ / tau_;
                res.s = s_ / tau_;
                res.objective = p_.c.dot(res.x);
                res.gap = res.s.dot(res.z);
                res.rel_gap = relgap;
                res.iterations = iter;
                return res;
            }

            // Certificates of primal infeasibility (z in K*, G'z ~ 0, h'z < 0)
            // and of dual infeasibility / unboundedness (Gx + s ~ 0, c'x < 0).
            const double hresx = (p_.G.transpose() * z_).norm();
            const double hresz = (s_ + p_.G * x_).norm();
            if (hz_ < -set_.reltol * std::max(nz, 1.0) && tau_ < kappa_ &&
                hresx / std::max(nz, 1.0) < set_.feastol) {
                res.status = SolveStatus::Infeasible;
                res.z = z_ / (-hz_);
                res.x = x_;
                res.iterations = iter;
                return res;
            }
            if (cx_ < -set_.reltol * std::max(nx, 1.0) && tau_ < kappa_ &&
                hresz / std::max(nx + ns, 1.0) < set_.feastol) {
                res.status = SolveStatus::Unbounded;
                res.x = x_ / (-cx_);
                res.iterations = iter;
                return res;
            }

            if (iter == set_.max_iterations || !std::isfinite(mu_)) break;

            if (!updateScalings()) break; // iterate left the cone: numerics

            factorNormalEquations();

            // Static solve used for the tau recovery: K2 (x1, z1) = (-c, h).
            VectorXd x1(n_), z1(m_);
            solveK2(-p_.c, p_.h, x1, z1);
            const double dtau_denom = kappa_ / tau_ - p_.c.dot(x1) - p_.h.dot(z1);

            // Affine (predictor) direction.
            VectorXd x2(n_), z2(m_);
            solveK2(rx_, s_ - rz_, x2, z2);
            const double dtau_aff = (rt_ - kappa_ + p_.c.dot(x2) + p_.h.dot(z2)) / dtau_denom;
            VectorXd dz_aff = z2 + dtau_aff * z1;
            VectorXd W_dz = applyW(dz_aff);
            VectorXd ds_by_W = -W_dz - lambda_;
            const double dkap_aff = -kappa_ - kappa_ / tau_ * dtau_aff;
            const double alpha_aff =
                std::min(1.0, scaledLineSearch(ds_by_W, W_dz, dtau_aff, dkap_aff));

            const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0), 1e-4, 1.0 - 1e-4);

            // Combined (corrector) direction.
            VectorXd ds = conicProduct(lambda_, lambda_);
            ds += conicProduct(ds_by_W, W_dz);
            addIdentityMultiple(ds, -sigma * mu_);
            VectorXd lambda_div_ds = conicDivision(lambda_, ds);
            VectorXd w_lambda_div_ds = applyW(lambda_div_ds);
            solveK2((1.0 - sigma) * rx_, -(1.0 - sigma) * rz_ + w_lambda_div_ds, x2, z2);

            const double bkap = kappa_ * tau_ + dkap_aff * dtau_aff - sigma * mu_;
            const double dtau = ((1.0 - sigma) * rt_ - bkap / tau_ + p_.c.dot(x2) + p_.h.dot(z2)) /
                                dtau_denom;
            VectorXd dx = x2 + dtau * x1;
            VectorXd dz = z2 + dtau * z1;
            W_dz = applyW(dz);
            ds_by_W = -(lambda_div_ds + W_dz);
            VectorXd ds_final = applyW(ds_by_W);
            const double dkap = -(bkap + kappa_ * dtau) / tau_;

            const double alpha =
                std::min(1.0, set_.step_fraction * scaledLineSearch(ds_by_W, W_dz, dtau, dkap));

            x_ += alpha * dx;
            z_ += alpha * dz;
            s_ += alpha * ds_final;
            tau_ += alpha * dtau;
            kappa_ += alpha * dkap;

            if (alpha < 1e-7) break; // stalled
        }

        // No strict certificate within the budget: accept the best iterate at
        // relaxed tolerances if it qualifies, otherwise report the limit.
        res.status = (best_pres < set_.feastol_relaxed && best_dres < set_.feastol_relaxed &&
                      (best_agap < set_.abstol_relaxed || best_relgap < set_.reltol_relaxed))
                         ? SolveStatus::Optimal
                         : SolveStatus::IterLimit;
        res.rel_gap = best_relgap;
        res.x = best_x / best_tau;
        res.z = best_z / best_tau;
        res.s = best_s / best_tau;
        res.objective = p_.c.dot(res.x);
        res.gap = res.s.dot(res.z);
        res.iterations = iter;
        return res;
    }

  private:
    void initialize() {
        // Primal start: x = argmin ||Gx - h||, s = h - Gx brought into K.
        // Dual start: z = G x with G'Gx = -c, brought into K.
        MatrixXd M = p_.G.transpose() * p_.G;
        M.diagonal().array() += set_.static_reg;
        Eigen::LDLT<MatrixXd> ldlt(M);
        x_ = ldlt.solve(p_.G.transpose() * p_.h);
        s_ = bringToCone(p_.h - p_.G * x_);
        const VectorXd xd = ldlt.solve(-p_.c);
        z_ = bringToCone(p_.G * xd);
        tau_ = 1.0;
        kappa_ = 1.0;
        resx0_ = std::max(1.0, p_.c.norm());
        resz0_ = std::max(1.0, p_.h.norm());
    }

    void computeResiduals() {
        rx_ = -p_.G.transpose() * z_ - tau_ * p_.c;
        rz_ = s_ + p_.G * x_ - tau_ * p_.h;
        cx_ = p_.c.dot(x_);
        hz_ = p_.h.dot(z_);
        rt_ = kappa_ + cx_ + hz_;
    }

    /// e + none: adds t times the cone identity element.
    void addIdentityMultiple(VectorXd &v, double t) const {
        v.head(n_orth_).array() += t;
        for (const SocScaling &sc : socs_) v(sc.start) += t;
    }

    VectorXd bringToCone(const VectorXd &r) const {
        double worst = -0.99;
        for (Eigen::Index i = 0; i < n_orth_; ++i) worst = std::max(worst, -r(i));
        for (const SocScaling &sc : socs_)
            worst = std::max(worst, r.segment(sc.start + 1, sc.dim - 1).norm() - r(sc.start));
        VectorXd out = r;
        if (worst >= 0.0) addIdentityMultiple(out, 1.0 + worst);
        return out;
    }

    bool updateScalings() {
        d_orth_ = s_.head(n_orth_).cwiseQuotient(z_.head(n_orth_));
        if (!(d_orth_.array() > 0.0).all()) return false;
        for (SocScaling &sc : socs_) {
            const auto s1 = s_.segment(sc.start + 1, sc.dim - 1);
            const auto z1 = z_.segment(sc.start + 1, sc.dim - 1);
            const double sres = s_(sc.start) * s_(sc.start) - s1.squaredNorm();
            const double zres = z_(sc.start) * z_(sc.start) - z1.squaredNorm();
            if (sres <= 0.0 || zres <= 0.0) return false;
            const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
            const VectorXd sbar = s_.segment(sc.start, sc.dim) / snorm;
            const VectorXd zbar = z_.segment(sc.start, sc.dim) / znorm;
            sc.eta_sq = snorm / znorm;
            sc.eta = std::sqrt(sc.eta_sq);
            const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
            sc.a = (0.5 / gamma) * (sbar(0) + zbar(0));
            sc.q = (0.5 / gamma) * (sbar.tail(sc.dim - 1) - zbar.tail(sc.dim - 1));
        }
        lambda_ = applyW(z_);
        return true;
    }

    /// lambda = W z;  for a SOC, W u = eta (a u0 + q'u1,
    /// u1 + (u0 + q'u1 / (1 + a)) q).
    VectorXd applyW(const VectorXd &u) const {
        VectorXd out(m_);
        out.head(n_orth_) = d_orth_.cwiseSqrt().cwiseProduct(u.head(n_orth_));
        for (const SocScaling &sc : socs_) {
            const auto u1 = u.segment(sc.start + 1, sc.dim - 1);
            const double zeta = sc.q.dot(u1);
            out(sc.start) = sc.eta * (sc.a * u(sc.start) + zeta);
            out.segment(sc.start + 1, sc.dim - 1) =
                sc.eta * (u1 + (u(sc.start) + zeta / (1.0 + sc.a)) * sc.q);
        }
        return out;
    }

    /// W^{-2} u = eta^{-2} (2 v v'u - J u) with v = (a, -q).
    VectorXd applyWinvSq(const VectorXd &u) const {
        VectorXd out(m_);
        out.head(n_orth_) = u.head(n_orth_).cwiseQuotient(d_orth_);
        for (const SocScaling &sc : socs_) {
            const auto u1 = u.segment(sc.start + 1, sc.dim - 1);
            const double vtu = sc.a * u(sc.start) - sc.q.dot(u1);
            out(sc.start) = (2.0 * sc.a * vtu - u(sc.start)) / sc.eta_sq;
            out.segment(sc.start + 1, sc.dim - 1) = (-2.0 * vtu * sc.q + u1) / sc.eta_sq;
        }
        return out;
    }

    /// W^2 u = eta^2 (2 wbar wbar'u - J u) with wbar = (a, q).
    VectorXd applyWSq(const VectorXd &u) const {
        VectorXd out(m_);
        out.head(n_orth_) = u.head(n_orth_).cwiseProduct(d_orth_);
        for (const SocScaling &sc : socs_) {
            const auto u1 = u.segment(sc.start + 1, sc.dim - 1);
            const double wtu = sc.a * u(sc.start) + sc.q.dot(u1);
            out(sc.start) = sc.eta_sq * (2.0 * sc.a * wtu - u(sc.start));
            out.segment(sc.start + 1, sc.dim - 1) = sc.eta_sq * (2.0 * wtu * sc.q + u1);
        }
        return out;
    }

    VectorXd conicProduct(const VectorXd &u, const VectorXd &v) const {
        VectorXd out(m_);
        out.head(n_orth_) = u.head(n_orth_).cwiseProduct(v.head(n_orth_));
        for (const SocScaling &sc : socs_) {
            const auto u1 = u.segment(sc.start + 1, sc.dim - 1);
            const auto v1 = v.segment(sc.start + 1, sc.dim - 1);
            out(sc.start) = u.segment(sc.start, sc.dim).dot(v.segment(sc.start, sc.dim));
            out.segment(sc.start + 1, sc.dim - 1) = u(sc.start) * v1 + v(sc.start) * u1;
        }
        return out;
    }

    VectorXd conicDivision(const VectorXd &u, const VectorXd &w) const {
        VectorXd out(m_);
        out.head(n_orth_) = w.head(n_orth_).cwiseQuotient(u.head(n_orth_));
        for (const SocScaling &sc : socs_) {
            const auto u1 = u.segment(sc.start + 1, sc.dim - 1);
            const auto w1 = w.segment(sc.start + 1, sc.dim - 1);
            const double u0 = u(sc.start), w0 = w(sc.start);
            const double rho = u0 * u0 - u1.squaredNorm();
            const double zeta = u1.dot(w1);
            out(sc.start) = (u0 * w0 - zeta) / rho;
            out.segment(sc.start + 1, sc.dim - 1) =
                ((zeta / u0 - w0) / rho) * u1 + w1 / u0;
        }
        return out;
    }

    void factorNormalEquations() {
        M_.noalias() = p_.G.topRows(n_orth_).transpose() *
                       d_orth_.cwiseInverse().asDiagonal() * p_.G.topRows(n_orth_);
        for (std::size_t j = 0; j < socs_.size(); ++j) {
            const SocScaling &sc = socs_[j];
            VectorXd v(sc.dim);
            v(0) = sc.a;
            v.tail(sc.dim - 1) = -sc.q;
            const VectorXd u = p_.G.middleRows(sc.start, sc.dim).transpose() * v;
            M_.noalias() += soc_gram_[j] / sc.eta_sq;
            M_.selfadjointView<Eigen::Lower>().rankUpdate(u, 2.0 / sc.eta_sq);
            M_.selfadjointView<Eigen::Lower>().rankUpdate(soc_head_row_[j], -2.0 / sc.eta_sq);
        }
        M_.diagonal().array() += set_.static_reg;
        ldlt_.compute(M_.selfadjointView<Eigen::Lower>());
    }

    /// Solves [0 G'; G -W^2] (dx, dz) = (bx, bz) via the normal equations,
    /// with a couple of iterative-refinement sweeps.
    void solveK2(const VectorXd &bx, const VectorXd &bz, VectorXd &dx, VectorXd &dz) const {
        dx = ldlt_.solve(bx + p_.G.transpose() * applyWinvSq(bz));
        dz = applyWinvSq(p_.G * dx - bz);
        // dz satisfies its block row exactly by construction, so refinement
        // only needs to drive down the residual of the G'dz = bx row.
        for (int r = 0; r < set_.refinement_steps; ++r) {
            const VectorXd ex = bx - p_.G.transpose() * dz;
            if (ex.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + bx.lpNorm<Eigen::Infinity>())) break;
            dx += ldlt_.solve(ex);
            dz = applyWinvSq(p_.G * dx - bz);
        }
    }

    /// Largest step alpha with lambda + alpha ds and lambda + alpha dz still
    /// in the cone (directions given in the NT-scaled space), also capping
    /// against tau and kappa hitting zero.
    double scaledLineSearch(const VectorXd &ds, const VectorXd &dz, double dtau,
                            double dkap) const {
        double alpha = 1.0 / 1e-13;
        for (Eigen::Index i = 0; i < n_orth_; ++i) {
            if (ds(i) < 0.0) alpha = std::min(alpha, -lambda_(i) / ds(i));
            if (dz(i) < 0.0) alpha = std::min(alpha, -lambda_(i) / dz(i));
        }
        if (dtau < 0.0) alpha = std::min(alpha, -tau_ / dtau);
        if (dkap < 0.0) alpha = std::min(alpha, -kappa_ / dkap);

        for (const SocScaling &sc : socs_) {
            const auto l1 = lambda_.segment(sc.start + 1, sc.dim - 1);
            const double lres = lambda_(sc.start) * lambda_(sc.start) - l1.squaredNorm();
            if (lres <= 0.0) continue;
            const double lnorm = std::sqrt(lres);
            const VectorXd lbar = lambda_.segment(sc.start, sc.dim) / lnorm;
            auto cone_limit = [&](const VectorXd &d) {
                const auto d1 = d.segment(sc.start + 1, sc.dim - 1);
                const double lbar_d = lbar(0) * d(sc.start) - lbar.tail(sc.dim - 1).dot(d1);
                const double f = (lbar_d + d(sc.start)) / (lbar(0) + 1.0);
                const VectorXd tail = (d1 - f * lbar.tail(sc.dim - 1)) / lnorm;
                return tail.norm() - lbar_d / lnorm;
            };
            const double limit = std::max(cone_limit(ds), cone_limit(dz));
            if (limit > 0.0) alpha = std::min(alpha, 1.0 / limit);
        }
        return std::max(alpha, 0.0);
    }

    ConeProgram p_;
    SolverSettings set_;
    Eigen::Index n_, m_, n_orth_;
    double degree_ = 0.0;
    std::vector<SocScaling> socs_;
    std::vector<MatrixXd> soc_gram_;
    std::vector<VectorXd> soc_head_row_;

    VectorXd x_, z_, s_, lambda_;
    VectorXd d_orth_;
    double tau_ = 1.0, kappa_ = 1.0;
    VectorXd rx_, rz_;
    double cx_ = 0.0, hz_ = 0.0, rt_ = 0.0;
    double gap_ = 0.0, mu_ = 0.0;
    double resx0_ = 1.0, resz0_ = 1.0;

    MatrixXd M_;
    Eigen::LDLT<MatrixXd> ldlt_;
};

} // namespace ipm_detail

/// Solves a conic program with second-order cones by the interior-point
/// method above.
inline SolveResult solve_socp(const ConeProgram &prog, const SolverSettings &settings = {}) {
    return ipm_detail::ConicSolver(prog, settings).solve();
}

/// Solves a pure linear program (orthant cones only).
inline SolveResult solve_lp(const ConeProgram &prog, const SolverSettings &settings = {}) {
    if (!prog.soc_dims.empty())
        throw std::invalid_argument("solve_lp expects a program with only orthant cones");
    return ipm_detail::ConicSolver(prog, settings).solve();
}

} // namespace mimopc
