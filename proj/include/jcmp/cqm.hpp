#ifndef JCMP_CQM_HPP
#define JCMP_CQM_HPP

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace jcmp {
namespace cqm {

using Vec2 = Eigen::Vector2d;

// Directed, non-negatively weighted graph over point agents. w(i,j) may differ
// from w(j,i); graphs built with the symmetric flag mirror the upper triangle.
class WeightedGraph {
public:
    WeightedGraph(Eigen::MatrixXd weights, bool symmetric);

    int size() const { return static_cast<int>(weights_.rows()); }
    bool symmetric() const { return symmetric_; }
    const Eigen::MatrixXd& weights() const { return weights_; }
    double weight(int i, int j) const { return weights_(i, j); }

    std::string to_adjacency_string() const;

private:
    Eigen::MatrixXd weights_;
    bool symmetric_;
};

struct StepWeightParams {
    double threshold_x_th; // m
};

// 1 below the threshold, 0 at and beyond it.
double step_weight(double d, const StepWeightParams& p);

// Per-ordered-pair weight: from/to node indices plus their Euclidean distance.
using WeightFn = std::function<double(int from, int to, double dist)>;

WeightedGraph build_graph(const std::vector<Vec2>& positions, const WeightFn& f,
                          bool symmetric);
// Distance-only weight shape shared by both directions.
WeightedGraph build_graph(const std::vector<Vec2>& positions,
                          const std::function<double(double)>& f, bool symmetric);

// Weighted Laplacian L = D - W with D the diagonal of row sums.
Eigen::MatrixXd laplacian(const WeightedGraph& g);

// Second-smallest eigenvalue of the Laplacian; zero iff the graph is
// disconnected. Symmetric graphs only.
double algebraic_connectivity(const WeightedGraph& g);

inline constexpr int kDefaultPathEnumerationCap = 12;

// Exact count of simple directed paths s -> t (positive weights as adjacency),
// by exhaustive depth-first enumeration. Rejects graphs larger than the cap.
long long num_simple_paths(const WeightedGraph& g, int s, int t,
                           int enumeration_cap = kDefaultPathEnumerationCap);

// Shannon capacity B * log2(1 + gamma_bar) in bits/s.
double capacity(double gamma_bar, double bandwidth_B);

// End-to-end PER of a two-hop decode-and-forward chain: both hops must succeed.
double e2e_per(double p1, double p2);

} // namespace cqm
} // namespace jcmp

#endif
