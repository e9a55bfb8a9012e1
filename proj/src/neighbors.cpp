#include "mirsel/neighbors.hpp"

#include "mirsel/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace mirsel {

JointSample::JointSample(std::vector<double> x_row_major, std::size_t dim, std::vector<double> y)
    : x_(std::move(x_row_major)), dim_(dim), y_(std::move(y)) {
    if (dim_ == 0) throw ConfigError("joint sample needs at least one input dimension");
    if (x_.size() != y_.size() * dim_) throw ConfigError("joint sample: input buffer does not match N x dim");
    sorted_y_ = y_;
    std::sort(sorted_y_.begin(), sorted_y_.end());
}

double joint_distance(const JointSample& s, std::size_t i, std::size_t j) noexcept {
    const double dx = input_distance(s.x(i), s.x(j), s.dim());
    const double dy = std::fabs(s.y(i) - s.y(j));
    return std::max(dx, dy);
}

namespace {

void check_query(const JointSample& s, std::size_t i, std::size_t k) {
    if (k == 0) throw ConfigError("k must be at least 1");
    if (k >= s.size()) throw ConfigError("k must be smaller than the number of samples");
    if (i >= s.size()) throw ConfigError("sample index out of range");
}

}  // namespace

std::size_t count_output_within(const JointSample& s, std::size_t i, double radius) {
    const double yi = s.y(i);
    auto sorted = s.sorted_y();
    // |v - yi| is monotone on each side of yi, so the hits form one contiguous run.
    auto lo = std::partition_point(sorted.begin(), sorted.end(),
                                   [&](double v) { return v < yi && !(yi - v < radius); });
    auto hi = std::partition_point(sorted.begin(), sorted.end(),
                                   [&](double v) { return v < yi || v - yi < radius; });
    auto count = static_cast<std::size_t>(hi - lo);
    return radius > 0.0 ? count - 1 : count;
}

namespace {

NeighborhoodStats brute_with_buffers(const JointSample& s, std::size_t i, std::size_t k, std::vector<double>& dx,
                                     std::vector<double>& dz) {
    const std::size_t n = s.size();
    dx.resize(n);
    dz.clear();
    for (std::size_t j = 0; j < n; ++j) {
        dx[j] = input_distance(s.x(i), s.x(j), s.dim());
        if (j == i) continue;
        dz.push_back(std::max(dx[j], std::fabs(s.y(i) - s.y(j))));
    }
    std::nth_element(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(k - 1), dz.end());
    NeighborhoodStats st;
    st.eps = dz[k - 1];
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (dx[j] < st.eps) ++st.n_x;
        if (std::fabs(s.y(i) - s.y(j)) < st.eps) ++st.n_y;
    }
    return st;
}

}  // namespace

NeighborhoodStats knn_stats_brute(const JointSample& s, std::size_t i, std::size_t k) {
    check_query(s, i, k);
    std::vector<double> dx, dz;
    return brute_with_buffers(s, i, k, dx, dz);
}

// ---------------------------------------------------------------------------
// kd-tree

struct JointKdTree::Impl {
    struct Node {
        std::size_t begin = 0;
        std::size_t end = 0;
        int left = -1;
        int right = -1;
        std::vector<double> lo;  // dim input bounds then the output bound
        std::vector<double> hi;
    };

    const JointSample* sample;
    std::size_t dim;
    std::size_t leaf_size;
    std::vector<std::size_t> order;     // permuted sample indices
    std::vector<std::size_t> position;  // sample index -> slot in order
    std::vector<Node> nodes;

    double coord(std::size_t idx, std::size_t c) const {
        return c < dim ? sample->x(idx)[c] : sample->y(idx);
    }

    int build(std::size_t begin, std::size_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        node.lo.assign(dim + 1, 0.0);
        node.hi.assign(dim + 1, 0.0);
        for (std::size_t c = 0; c <= dim; ++c) {
            double lo = coord(order[begin], c), hi = lo;
            for (std::size_t p = begin + 1; p < end; ++p) {
                const double v = coord(order[p], c);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            node.lo[c] = lo;
            node.hi[c] = hi;
        }
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(node);
        if (end - begin <= leaf_size) return id;

        std::size_t split_dim = 0;
        double spread = -1.0;
        for (std::size_t c = 0; c <= dim; ++c) {
            const double w = node.hi[c] - node.lo[c];
            if (w > spread) {
                spread = w;
                split_dim = c;
            }
        }
        if (!(spread > 0.0)) return id;  // all points coincide
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(mid),
                         order.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) { return coord(a, split_dim) < coord(b, split_dim); });
        const int l = build(begin, mid);
        const int r = build(mid, end);
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    // Lower bound of the input distance from the query to any point in the box.
    double input_lower_bound(const Node& node, const double* q) const {
        double acc = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            double gap = 0.0;
            if (q[c] < node.lo[c]) {
                gap = node.lo[c] - q[c];
            } else if (q[c] > node.hi[c]) {
                gap = q[c] - node.hi[c];
            }
            acc += gap * gap;
        }
        return std::sqrt(acc);
    }

    double input_upper_bound(const Node& node, const double* q) const {
        double acc = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            const double gap = std::max(std::fabs(node.lo[c] - q[c]), std::fabs(node.hi[c] - q[c]));
            acc += gap * gap;
        }
        return std::sqrt(acc);
    }

    double joint_lower_bound(const Node& node, const double* q, double qy) const {
        double gy = 0.0;
        if (qy < node.lo[dim]) {
            gy = node.lo[dim] - qy;
        } else if (qy > node.hi[dim]) {
            gy = qy - node.hi[dim];
        }
        return std::max(input_lower_bound(node, q), gy);
    }

    void knn(int id, std::size_t i, std::size_t k, std::priority_queue<double>& best) const {
        const Node& node = nodes[static_cast<std::size_t>(id)];
        const double* q = sample->x(i);
        const double qy = sample->y(i);
        if (best.size() == k && joint_lower_bound(node, q, qy) >= best.top()) return;
        if (node.left < 0) {
            for (std::size_t p = node.begin; p < node.end; ++p) {
                const std::size_t j = order[p];
                if (j == i) continue;
                const double d = joint_distance(*sample, i, j);
                if (best.size() < k) {
                    best.push(d);
                } else if (d < best.top()) {
                    best.pop();
                    best.push(d);
                }
            }
            return;
        }
        const Node& l = nodes[static_cast<std::size_t>(node.left)];
        const Node& r = nodes[static_cast<std::size_t>(node.right)];
        const double dl = joint_lower_bound(l, q, qy);
        const double dr = joint_lower_bound(r, q, qy);
        if (dl <= dr) {
            knn(node.left, i, k, best);
            knn(node.right, i, k, best);
        } else {
            knn(node.right, i, k, best);
            knn(node.left, i, k, best);
        }
    }

    std::size_t count(int id, std::size_t i, double radius) const {
        const Node& node = nodes[static_cast<std::size_t>(id)];
        const double* q = sample->x(i);
        if (input_lower_bound(node, q) >= radius) return 0;
        if (input_upper_bound(node, q) < radius) {
            std::size_t n = node.end - node.begin;
            const std::size_t pos = position[i];
            if (pos >= node.begin && pos < node.end) --n;
            return n;
        }
        if (node.left < 0) {
            std::size_t n = 0;
            for (std::size_t p = node.begin; p < node.end; ++p) {
                const std::size_t j = order[p];
                if (j != i && input_distance(q, sample->x(j), dim) < radius) ++n;
            }
            return n;
        }
        return count(node.left, i, radius) + count(node.right, i, radius);
    }
};

JointKdTree::JointKdTree(const JointSample& s, std::size_t leaf_size) : impl_(std::make_unique<Impl>()) {
    if (s.size() == 0) throw ConfigError("cannot build a kd-tree on an empty sample");
    impl_->sample = &s;
    impl_->dim = s.dim();
    impl_->leaf_size = std::max<std::size_t>(leaf_size, 1);
    impl_->order.resize(s.size());
    std::iota(impl_->order.begin(), impl_->order.end(), std::size_t{0});
    impl_->nodes.reserve(2 * s.size() / impl_->leaf_size + 2);
    impl_->build(0, s.size());
    impl_->position.resize(s.size());
    for (std::size_t p = 0; p < s.size(); ++p) impl_->position[impl_->order[p]] = p;
}

JointKdTree::~JointKdTree() = default;
JointKdTree::JointKdTree(JointKdTree&&) noexcept = default;
JointKdTree& JointKdTree::operator=(JointKdTree&&) noexcept = default;

double JointKdTree::kth_distance(std::size_t i, std::size_t k) const {
    check_query(*impl_->sample, i, k);
    std::priority_queue<double> best;
    impl_->knn(0, i, k, best);
    return best.top();
}

std::size_t JointKdTree::count_input_within(std::size_t i, double radius) const {
    return impl_->count(0, i, radius);
}

NeighborhoodStats JointKdTree::stats(std::size_t i, std::size_t k) const {
    NeighborhoodStats st;
    st.eps = kth_distance(i, k);
    st.n_x = count_input_within(i, st.eps);
    st.n_y = count_output_within(*impl_->sample, i, st.eps);
    return st;
}

NeighborSearch resolve_search(NeighborSearch search, std::size_t n, std::size_t dim) noexcept {
    if (search != NeighborSearch::Auto) return search;
    return (n >= 1000 && dim <= 4) ? NeighborSearch::KdTree : NeighborSearch::BruteForce;
}

NeighborhoodStats knn_stats(const JointSample& s, std::size_t i, std::size_t k, NeighborSearch search) {
    if (resolve_search(search, s.size(), s.dim()) == NeighborSearch::KdTree) {
        return JointKdTree(s).stats(i, k);
    }
    return knn_stats_brute(s, i, k);
}

std::vector<NeighborhoodStats> all_knn_stats(const JointSample& s, std::size_t k, NeighborSearch search) {
    std::vector<NeighborhoodStats> out(s.size());
    if (s.size() > 0) check_query(s, 0, k);
    if (resolve_search(search, s.size(), s.dim()) == NeighborSearch::KdTree) {
        JointKdTree tree(s);
        for (std::size_t i = 0; i < s.size(); ++i) out[i] = tree.stats(i, k);
    } else {
        std::vector<double> dx, dz;
        dz.reserve(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) out[i] = brute_with_buffers(s, i, k, dx, dz);
    }
    return out;
}

}  // namespace mirsel
