#pragma once

#include "flowvote/flow.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace flowvote {

/// Settings for Principal Component Pursuit: min ||N||_* + lambda ||A||_1 s.t. X = N + A.
struct PcpConfig {
    /// lambda = c / sqrt(max(rows, cols)) unless lambda_override is set.
    double c = 2.0;
    std::optional<double> lambda_override;
    /// Stop once ||X - N - A||_F / ||X||_F <= tol.
    double tol = 1e-7;
    int max_iters = 500;
    /// Initial penalty. Defaults to 1.25 / sigma_1(X).
    std::optional<double> mu_init;
    double rho = 1.5;
    /// Scale every column to unit peak before solving and undo it afterwards. Off by default.
    bool normalize_columns = false;

    void validate() const;
};

struct PcpDecomposition {
    Eigen::MatrixXd low_rank;
    Eigen::MatrixXd sparse;
    double lambda = 0.0;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;
    /// ||X||_F of the decomposed input, kept for the vote floor.
    double input_norm = 0.0;
};

double default_lambda(std::size_t rows, std::size_t cols, double c);

/// Inexact augmented Lagrangian solver with singular value thresholding.
/// Non-convergence is reported through `converged`, never thrown.
PcpDecomposition pcp_decompose(const Eigen::MatrixXd& x, const PcpConfig& cfg = {});

double nuclear_norm(const Eigen::MatrixXd& m);

/// ||N||_* + lambda ||A||_1.
double pcp_objective(const PcpDecomposition& d);

struct Vote {
    std::size_t bin = 0;
    FeatureKind feature = FeatureKind::SrcAs;
    FeatureValue value = 0;
    double magnitude = 0.0;
};

/// Entries of A at or below this value are solver noise, not votes.
double vote_floor(const PcpDecomposition& d);

/// One vote per entry of A above the vote floor. Negative deviations never vote.
std::vector<Vote> extract_votes(const PcpDecomposition& d, FeatureKind feature, std::span<const FeatureValue> columns);

/// Writes X, N and A side by side as CSV blocks for offline inspection.
void dump_matrices_csv(const std::filesystem::path& path, const Eigen::MatrixXd& x, const PcpDecomposition& d,
                       std::span<const FeatureValue> columns);

}  // namespace flowvote
