#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace mimopc {

/// Conic program in the standard inequality form
///
///   minimize    c' x
///   subject to  G x + s = h,   s in K,
///
/// where K is a nonnegative-orthant block of dimension `orthant_dim`
/// followed by second-order cones of the listed dimensions. The cone
/// dimensions sum to the row count of G.
struct ConeProgram {
    Eigen::VectorXd c;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    Eigen::Index orthant_dim = 0;
    std::vector<Eigen::Index> soc_dims;

    Eigen::Index num_vars() const { return c.size(); }
    Eigen::Index num_rows() const { return G.rows(); }

    void validate() const {
        if (G.rows() != h.size()) throw std::invalid_argument("G and h row mismatch");
        if (G.cols() != c.size()) throw std::invalid_argument("G and c column mismatch");
        if (orthant_dim < 0) throw std::invalid_argument("negative orthant dimension");
        Eigen::Index total = orthant_dim;
        for (Eigen::Index d : soc_dims) {
            if (d < 2) throw std::invalid_argument("second-order cones need dimension >= 2");
            total += d;
        }
        if (total != G.rows()) throw std::invalid_argument("cone dimensions must sum to row count");
    }

    /// Plain-text dump for external cross-checking: dimensions, cone layout,
    /// then c, h, and G row by row.
    void dump(std::ostream &out) const {
        out.precision(17);
        out << "n " << num_vars() << "\nm " << num_rows() << "\northant " << orthant_dim << "\nsoc";
        for (Eigen::Index d : soc_dims) out << " " << d;
        out << "\nc";
        for (Eigen::Index j = 0; j < c.size(); ++j) out << " " << c(j);
        out << "\nh";
        for (Eigen::Index i = 0; i < h.size(); ++i) out << " " << h(i);
        out << "\n";
        for (Eigen::Index i = 0; i < G.rows(); ++i) {
            out << "G";
            for (Eigen::Index j = 0; j < G.cols(); ++j) out << " " << G(i, j);
            out << "\n";
        }
    }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit };

inline const char *to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    default: return "IterLimit";
    }
}

struct SolveResult {
    SolveStatus status = SolveStatus::IterLimit;
    Eigen::VectorXd x;     ///< primal solution (or infeasibility certificate direction)
    Eigen::VectorXd z;     ///< dual cone variable
    Eigen::VectorXd s;     ///< primal slack, h - G x
    double objective = 0.0;
    int iterations = 0;
    double gap = 0.0;      ///< final absolute duality gap s'z
    double rel_gap = 0.0;
};

/// Worst constraint violation of x replayed against the raw problem data:
/// for orthant rows the negative part of h - Gx, for each SOC the amount by
/// which the tail norm of h - Gx exceeds its head.
inline double feasibility_violation(const ConeProgram &prog, const Eigen::VectorXd &x) {
    const Eigen::VectorXd s = prog.h - prog.G * x;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < prog.orthant_dim; ++i) worst = std::max(worst, -s(i));
    Eigen::Index at = prog.orthant_dim;
    for (Eigen::Index d : prog.soc_dims) {
        worst = std::max(worst, s.segment(at + 1, d - 1).norm() - s(at));
        at += d;
    }
    return worst;
}

} // namespace mimopc
