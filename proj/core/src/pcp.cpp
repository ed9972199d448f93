#include "flowvote/pcp.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace flowvote {

namespace {

double spectral_norm(const Eigen::MatrixXd& m) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

// Proximal operator of tau * ||.||_1.
Eigen::MatrixXd shrink(const Eigen::MatrixXd& m, double tau) {
    return m.unaryExpr([tau](double v) {
        const double a = std::abs(v) - tau;
        return a > 0.0 ? std::copysign(a, v) : 0.0;
    });
}

// Proximal operator of tau * ||.||_*.
Eigen::MatrixXd singular_value_threshold(const Eigen::MatrixXd& m, double tau) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > tau) ++rank;
    if (rank == 0) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
    Eigen::VectorXd shrunk = (s.head(rank).array() - tau).matrix();
    return svd.matrixU().leftCols(rank) * shrunk.asDiagonal() * svd.matrixV().leftCols(rank).transpose();
}

}  // namespace

void PcpConfig::validate() const {
    if (!(c > 0.0)) throw Error("PCP multiplier C must be > 0");
    if (lambda_override && !(*lambda_override > 0.0)) throw Error("lambda must be > 0");
    if (!(tol > 0.0)) throw Error("PCP tolerance must be > 0");
    if (max_iters < 1) throw Error("PCP max_iters must be >= 1");
    if (!(rho > 1.0)) throw Error("PCP rho must be > 1");
    if (mu_init && !(*mu_init > 0.0)) throw Error("PCP mu_init must be > 0");
}

double default_lambda(std::size_t rows, std::size_t cols, double c) {
    if (rows < 1 || cols < 1) throw Error("matrix dimensions must be >= 1");
    if (!(c > 0.0)) throw Error("C must be > 0");
    return c / std::sqrt(static_cast<double>(std::max(rows, cols)));
}

double nuclear_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues().sum();
}

double pcp_objective(const PcpDecomposition& d) {
    return nuclear_norm(d.low_rank) + d.lambda * d.sparse.cwiseAbs().sum();
}

PcpDecomposition pcp_decompose(const Eigen::MatrixXd& input, const PcpConfig& cfg) {
    cfg.validate();
    if (input.rows() < 1 || input.cols() < 1) throw Error("PCP input must be at least 1x1");
    if (!input.allFinite()) throw Error("PCP input contains non-finite entries");

    PcpDecomposition out;
    out.lambda = cfg.lambda_override.value_or(
        default_lambda(static_cast<std::size_t>(input.rows()), static_cast<std::size_t>(input.cols()), cfg.c));
    out.input_norm = input.norm();

    Eigen::VectorXd scale = Eigen::VectorXd::Ones(input.cols());
    if (cfg.normalize_columns) {
        for (Eigen::Index j = 0; j < input.cols(); ++j) {
            const double peak = input.col(j).cwiseAbs().maxCoeff();
            if (peak > 0.0) scale(j) = peak;
        }
    }
    const Eigen::MatrixXd x = input * scale.cwiseInverse().asDiagonal();

    const double x_norm = x.norm();
    if (x_norm == 0.0) {
        out.low_rank = Eigen::MatrixXd::Zero(x.rows(), x.cols());
        out.sparse = out.low_rank;
        out.converged = true;
        return out;
    }

    const double lambda = out.lambda;
    const double sigma1 = spectral_norm(x);
    double mu = cfg.mu_init.value_or(1.25 / sigma1);
    const double mu_max = mu * 1e7;

    // Dual variable scaled so that both its spectral and entrywise constraints start feasible.
    Eigen::MatrixXd y = x / std::max(sigma1, x.cwiseAbs().maxCoeff() / lambda);
    Eigen::MatrixXd n = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(x.rows(), x.cols());

    double residual = 1.0;
    int iter = 0;
    while (iter < cfg.max_iters) {
        ++iter;
        a = shrink(x - n + y / mu, lambda / mu);
        n = singular_value_threshold(x - a + y / mu, 1.0 / mu);
        const Eigen::MatrixXd z = x - n - a;
        y += mu * z;
        mu = std::min(mu * cfg.rho, mu_max);
        residual = z.norm() / x_norm;
        if (residual <= cfg.tol) break;
    }

    out.iterations = iter;
    out.converged = residual <= cfg.tol;
    out.residual = residual;
    out.low_rank = n * scale.asDiagonal();
    out.sparse = a * scale.asDiagonal();
    return out;
}

double vote_floor(const PcpDecomposition& d) {
    const auto cells = static_cast<double>(d.sparse.size());
    const double rms = cells > 0.0 ? d.input_norm / std::sqrt(cells) : 0.0;
    return 1e-6 * std::max(1.0, rms);
}

std::vector<Vote> extract_votes(const PcpDecomposition& d, FeatureKind feature, std::span<const FeatureValue> columns) {
    if (static_cast<std::size_t>(d.sparse.cols()) != columns.size()) {
        throw Error("column labels do not match the decomposition");
    }
    const double floor = vote_floor(d);
    std::vector<Vote> votes;
    for (Eigen::Index t = 0; t < d.sparse.rows(); ++t) {
        for (Eigen::Index c = 0; c < d.sparse.cols(); ++c) {
            const double v = d.sparse(t, c);
            if (v > floor) votes.push_back({static_cast<std::size_t>(t), feature, columns[static_cast<std::size_t>(c)], v});
        }
    }
    return votes;
}

void dump_matrices_csv(const std::filesystem::path& path, const Eigen::MatrixXd& x, const PcpDecomposition& d,
                       std::span<const FeatureValue> columns) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out.precision(17);
    auto block = [&](const char* name, const Eigen::MatrixXd& m) {
        out << "# " << name << '\n' << "bin";
        for (auto c : columns) out << ',' << c;
        out << '\n';
        for (Eigen::Index t = 0; t < m.rows(); ++t) {
            out << t;
            for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << m(t, c);
            out << '\n';
        }
    };
    block("X", x);
    block("N", d.low_rank);
    block("A", d.sparse);
}

}  // namespace flowvote
