#include "nesp/quadtree.hpp"

#include <algorithm>
#include <cmath>

#include "nesp/parallel.hpp"

namespace nesp {

QuadTree::QuadTree(const Embedding& y, const std::vector<double>& masses) {
    n_ = y.n;
    if (n_ == 0) throw UsageError("QuadTree: empty layout");
    if (!masses.empty() && masses.size() != n_)
        throw UsageError("QuadTree: mass vector size mismatch");
    for (double v : y.coords)
        if (!std::isfinite(v)) throw DataError("QuadTree: non-finite coordinate");

    mass_.assign(n_, 1.0);
    if (!masses.empty()) mass_ = masses;

    items_.resize(n_);
    leaf_of_.assign(n_, -1);
    for (std::size_t i = 0; i < n_; ++i) items_[i] = static_cast<std::uint32_t>(i);

    double minx = y.x(0), maxx = y.x(0), miny = y.y(0), maxy = y.y(0);
    for (std::size_t i = 1; i < n_; ++i) {
        minx = std::min(minx, y.x(i));
        maxx = std::max(maxx, y.x(i));
        miny = std::min(miny, y.y(i));
        maxy = std::max(maxy, y.y(i));
    }
    nodes_.reserve(2 * n_);
    std::vector<std::uint32_t> scratch(n_);
    root_ = build(items_, scratch, 0, n_, minx, miny, maxx - minx, maxy - miny, 0, y);
}

int QuadTree::build(std::vector<std::uint32_t>& items, std::vector<std::uint32_t>& scratch,
                    std::size_t lo, std::size_t hi, double ox, double oy, double wx, double wy,
                    int depth, const Embedding& y) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    {
        Node& node = nodes_.back();
        node.count = static_cast<std::uint32_t>(hi - lo);
        node.side = std::max(wx, wy);
        double m = 0.0, cx = 0.0, cy = 0.0;
        for (std::size_t t = lo; t < hi; ++t) {
            const std::uint32_t p = items[t];
            m += mass_[p];
            cx += mass_[p] * y.x(p);
            cy += mass_[p] * y.y(p);
        }
        node.mass = m;
        if (m > 0.0) {
            node.com[0] = cx / m;
            node.com[1] = cy / m;
        }
    }

    bool coincident = true;
    for (std::size_t t = lo + 1; t < hi && coincident; ++t)
        coincident = y.x(items[t]) == y.x(items[lo]) && y.y(items[t]) == y.y(items[lo]);

    if (hi - lo <= 1 || coincident || depth >= kMaxDepth) {
        Node& node = nodes_[id];
        node.leaf = true;
        node.first_item = static_cast<std::uint32_t>(lo);
        node.item_count = static_cast<std::uint32_t>(hi - lo);
        for (std::size_t t = lo; t < hi; ++t) leaf_of_[items[t]] = id;
        return id;
    }

    // Counting sort into the four quadrants keeps within-quadrant index order,
    // so rebuilds are bit-identical.
    const double cx = ox + 0.5 * wx;
    const double cy = oy + 0.5 * wy;
    auto quadrant = [&](std::uint32_t p) {
        return (y.y(p) >= cy ? 2 : 0) + (y.x(p) >= cx ? 1 : 0);
    };
    std::size_t counts[4] = {0, 0, 0, 0};
    for (std::size_t t = lo; t < hi; ++t) ++counts[quadrant(items[t])];
    std::size_t offsets[4];
    offsets[0] = lo;
    for (int q = 1; q < 4; ++q) offsets[q] = offsets[q - 1] + counts[q - 1];
    std::size_t cursor[4] = {offsets[0], offsets[1], offsets[2], offsets[3]};
    for (std::size_t t = lo; t < hi; ++t) scratch[cursor[quadrant(items[t])]++] = items[t];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
              scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              items.begin() + static_cast<std::ptrdiff_t>(lo));

    const double hx = 0.5 * wx, hy = 0.5 * wy;
    const double qx[4] = {ox, cx, ox, cx};
    const double qy[4] = {oy, oy, cy, cy};
    for (int q = 0; q < 4; ++q) {
        if (counts[q] == 0) continue;
        const std::size_t qlo = offsets[q];
        const int child = build(items, scratch, qlo, qlo + counts[q], qx[q], qy[q], hx, hy,
                                depth + 1, y);
        nodes_[id].child[q] = child;
    }
    return id;
}

ForceField QuadTree::repulsion(const Embedding& y, const Kernel& kernel, double theta,
                               const std::vector<double>* query_scale, int threads) const {
    if (y.n != n_) throw UsageError("QuadTree::repulsion: layout size mismatch");
    if (theta < 0.0) throw UsageError("QuadTree::repulsion: theta must be >= 0");
    if (query_scale && query_scale->size() != n_)
        throw UsageError("QuadTree::repulsion: query_scale size mismatch");

    ForceField f(n_);
    std::vector<double> z_per_point(n_, 0.0);
    const double theta2 = theta * theta;

    parallel_for(0, n_, threads, [&](std::size_t i) {
        thread_local std::vector<int> stack;
        stack.clear();
        stack.push_back(root_);
        const double* yi = y.point(i);
        const int my_leaf = leaf_of_[i];
        double fx = 0.0, fy = 0.0, z = 0.0;
        while (!stack.empty()) {
            const int id = stack.back();
            stack.pop_back();
            const Node& node = nodes_[id];
            const double dx = yi[0] - node.com[0];
            const double dy = yi[1] - node.com[1];
            const double d2 = dx * dx + dy * dy;
            if (!node.leaf && node.side * node.side > theta2 * d2) {
                for (int q = 0; q < 4; ++q)
                    if (node.child[q] >= 0) stack.push_back(node.child[q]);
                continue;
            }
            double m = node.mass;
            if (node.leaf && id == my_leaf) m -= mass_[i]; // self term, analytic removal
            if (m <= 0.0) continue;
            switch (kernel.type) {
                case Kernel::Type::TsneW2: {
                    const double w = 1.0 / (1.0 + d2);
                    z += m * w;
                    const double ww = w * w;
                    fx += m * ww * dx;
                    fy += m * ww * dy;
                    break;
                }
                case Kernel::Type::UmapEps: {
                    const double w = 1.0 / (1.0 + d2);
                    z += m * w;
                    const double coeff = kernel.gamma * w / (d2 + kernel.epsilon);
                    fx += m * coeff * dx;
                    fy += m * coeff * dy;
                    break;
                }
                case Kernel::Type::InverseSquare: {
                    if (d2 == 0.0) break; // no direction; exact path jitters instead
                    const double coeff = m / d2;
                    fx += coeff * dx;
                    fy += coeff * dy;
                    break;
                }
            }
        }
        const double s = query_scale ? (*query_scale)[i] : 1.0;
        f.point(i)[0] = s * fx;
        f.point(i)[1] = s * fy;
        z_per_point[i] = z;
    });

    double z_total = 0.0;
    for (double z : z_per_point) z_total += z;
    if (kernel.type == Kernel::Type::TsneW2) {
        f.z_sum = z_total;
        if (z_total > 0.0) {
            const double scale = static_cast<double>(n_) / z_total;
            for (double& v : f.values) v *= scale;
        }
    } else if (kernel.type == Kernel::Type::UmapEps) {
        f.z_sum = z_total;
    }
    return f;
}

} // namespace nesp
