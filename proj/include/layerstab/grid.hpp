#pragma once

#include <vector>

namespace layerstab {

// Nodes on [0, ell] with density 1 + A sech^2((x - xc)/w), w = 0.3 * halfwidth, where A is chosen so that
// `fraction` of the nodes fall in (xc - halfwidth, xc + halfwidth). With center_node, xc is a grid node.
std::vector<double> graded_grid(double ell, double xc, int n, double halfwidth, double fraction, bool center_node);

// Two uniform pieces meeting at xc with spacings as equal as integer counts allow. Returns the index of xc.
std::vector<double> split_uniform_grid(double ell, double xc, int n, int* center_index);

// Vertex-centred finite volumes: control-volume widths w_i and face conductances 1/h_{i+1/2}.
// -(D^2 u)_i = (K u)_i / w_i with Neumann ends.
struct FvLaplacian {
    std::vector<double> w;      // n
    std::vector<double> cond;   // n-1
    explicit FvLaplacian(const std::vector<double>& x);
    // (D^2 u)_i
    double apply(const std::vector<double>& u, size_t i) const;
};

// Piecewise-linear interpolation on a sorted grid.
double interp_linear(const std::vector<double>& x, const std::vector<double>& y, double xq);

}  // namespace layerstab
