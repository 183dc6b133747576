#pragma once

#include <cmath>

namespace ucp {

/// Axis-aligned rectangle given by center and half-widths.
struct Region {
    double cx = 0.0;
    double cy = 0.0;
    double hx = 0.0;
    double hy = 0.0;

    double xmin() const { return cx - hx; }
    double xmax() const { return cx + hx; }
    double ymin() const { return cy - hy; }
    double ymax() const { return cy + hy; }

    bool contains(double x, double y, double slack = 0.0) const
    {
        return std::abs(x - cx) <= hx + slack && std::abs(y - cy) <= hy + slack;
    }

    /// i-th of n equispaced nodes along x (endpoints included).
    double x_node(int i, int n) const { return xmin() + 2.0 * hx * i / (n - 1); }
    double y_node(int j, int n) const { return ymin() + 2.0 * hy * j / (n - 1); }

    static Region square(double cx, double cy, double half) { return {cx, cy, half, half}; }
};

} // namespace ucp
