#include "jcmp/cqm.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace jcmp {
namespace cqm {

WeightedGraph::WeightedGraph(Eigen::MatrixXd weights, bool symmetric)
    : weights_(std::move(weights)), symmetric_(symmetric) {
    if (weights_.rows() != weights_.cols())
        throw std::domain_error("WeightedGraph: weight matrix must be square");
    if (weights_.rows() < 1) throw std::domain_error("WeightedGraph: empty graph");
    for (int i = 0; i < weights_.rows(); ++i) {
        if (weights_(i, i) != 0.0)
            throw std::domain_error("WeightedGraph: diagonal must be zero");
        for (int j = 0; j < weights_.cols(); ++j) {
            if (!(weights_(i, j) >= 0.0))
                throw std::domain_error("WeightedGraph: weights must be non-negative");
            if (symmetric_ && weights_(i, j) != weights_(j, i))
                throw std::domain_error(
                    "WeightedGraph: symmetric flag set on asymmetric weights");
        }
    }
}

std::string WeightedGraph::to_adjacency_string() const {
    std::ostringstream out;
    for (int i = 0; i < size(); ++i) {
        out << i << ":";
        for (int j = 0; j < size(); ++j)
            if (weights_(i, j) > 0.0) out << " " << j << "(" << weights_(i, j) << ")";
        out << "\n";
    }
    return out.str();
}

double step_weight(double d, const StepWeightParams& p) {
    if (!(p.threshold_x_th > 0.0))
        throw std::domain_error("step_weight: threshold must be > 0");
    if (d < 0.0) throw std::domain_error("step_weight: distance must be >= 0");
    return d < p.threshold_x_th ? 1.0 : 0.0;
}

WeightedGraph build_graph(const std::vector<Vec2>& positions, const WeightFn& f,
                          bool symmetric) {
    const int n = static_cast<int>(positions.size());
    if (n < 2) throw std::domain_error("build_graph: need at least 2 positions");

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = symmetric ? i + 1 : 0; j < n; ++j) {
            if (i == j) continue;
            const double d = (positions[i] - positions[j]).norm();
            w(i, j) = f(i, j, d);
            if (symmetric) w(j, i) = w(i, j);
        }
    }
    return WeightedGraph(std::move(w), symmetric);
}

WeightedGraph build_graph(const std::vector<Vec2>& positions,
                          const std::function<double(double)>& f, bool symmetric) {
    return build_graph(
        positions, [&f](int, int, double d) { return f(d); }, symmetric);
}

Eigen::MatrixXd laplacian(const WeightedGraph& g) {
    const Eigen::MatrixXd& w = g.weights();
    Eigen::MatrixXd l = -w;
    l.diagonal() = w.rowwise().sum();
    return l;
}

double algebraic_connectivity(const WeightedGraph& g) {
    if (!g.symmetric())
        throw std::domain_error("algebraic_connectivity: graph must be symmetric");
    if (g.size() < 2)
        throw std::domain_error("algebraic_connectivity: need at least 2 nodes");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian(g),
                                                          Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("algebraic_connectivity: eigensolver failed");
    // Eigenvalues come out sorted ascending; clamp the tiny negative round-off
    // the zero eigenvalue can pick up.
    return std::max(0.0, solver.eigenvalues()(1));
}

namespace {

long long count_paths_dfs(const WeightedGraph& g, int node, int t,
                          std::vector<bool>& visited) {
    if (node == t) return 1;
    long long total = 0;
    visited[node] = true;
    for (int next = 0; next < g.size(); ++next) {
        if (!visited[next] && g.weight(node, next) > 0.0)
            total += count_paths_dfs(g, next, t, visited);
    }
    visited[node] = false;
    return total;
}

} // namespace

long long num_simple_paths(const WeightedGraph& g, int s, int t, int enumeration_cap) {
    if (g.size() > enumeration_cap)
        throw std::length_error("num_simple_paths: graph exceeds enumeration cap");
    if (s < 0 || s >= g.size() || t < 0 || t >= g.size())
        throw std::domain_error("num_simple_paths: node index out of range");
    if (s == t) throw std::domain_error("num_simple_paths: endpoints must differ");

    std::vector<bool> visited(g.size(), false);
    return count_paths_dfs(g, s, t, visited);
}

double capacity(double gamma_bar, double bandwidth_B) {
    if (gamma_bar < 0.0) throw std::domain_error("capacity: SNR must be >= 0");
    if (!(bandwidth_B > 0.0)) throw std::domain_error("capacity: bandwidth must be > 0");
    return bandwidth_B * std::log2(1.0 + gamma_bar);
}

double e2e_per(double p1, double p2) {
    if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0))
        throw std::domain_error("e2e_per: probabilities must be in [0,1]");
    return 1.0 - (1.0 - p1) * (1.0 - p2);
}

} // namespace cqm
} // namespace jcmp
