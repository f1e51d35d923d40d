#include "rdslin/trajectory.hpp"

#include <bit>
#include <cmath>

#include "rdslin/driving.hpp"
#include "rdslin/errors.hpp"

namespace rdslin {

SplitPoint split(const Cocycle& cocycle, const Vec& x, int fiber) {
    SplitPoint p;
    p.fiber = fiber;
    p.eta = cocycle.projection(fiber, 2) * x;
    p.xi = x - p.eta;
    return p;
}

Vec evolve_center(const Cocycle& cocycle, const Vec& eta, int fiber, int n) {
    Vec y = eta;
    if (n >= 0) {
        for (int j = 0; j < n; ++j) {
            y = cocycle.A(fiber + j) * y;
        }
    } else {
        for (int j = 1; j <= -n; ++j) {
            y = cocycle.step_inverse(fiber - j, 2) * y;
        }
    }
    return y;
}

SplitPoint step_forward(const Cocycle& cocycle, const Perturbation& f, const SplitPoint& p) {
    SplitPoint out;
    out.fiber = p.fiber + 1;
    (void)cocycle.A(out.fiber);  // window check on the target fiber
    const Mat& a = cocycle.A(p.fiber);
    out.xi = a * p.xi + f(p.fiber, p.point());
    out.eta = a * p.eta;
    return out;
}

SplitPoint step_backward(const Cocycle& cocycle, const Perturbation& f, const SplitPoint& p) {
    SplitPoint out;
    out.fiber = p.fiber - 1;
    out.eta = cocycle.step_inverse(out.fiber, 2) * p.eta;
    const PerturbedMap map{cocycle, f, out.fiber, out.eta};
    out.xi = invert_fiber_map(map, p.xi).xi;
    return out;
}

SplitPoint evolve_coupled(const Cocycle& cocycle, const Perturbation& f, const SplitPoint& p, int n) {
    SplitPoint q = p;
    for (int j = 0; j < n; ++j) {
        q = step_forward(cocycle, f, q);
    }
    for (int j = 0; j < -n; ++j) {
        q = step_backward(cocycle, f, q);
    }
    return q;
}

std::size_t OrbitGraph::KeyHash::operator()(const Key& k) const noexcept {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(k.fiber));
    for (std::int64_t v : k.q) {
        h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    }
    return static_cast<std::size_t>(h);
}

OrbitGraph::OrbitGraph(const Cocycle& cocycle, const Perturbation& drive, std::size_t node_cap)
    : cocycle_(cocycle), drive_(drive), cap_(node_cap) {
    nodes_.reserve(256);
}

OrbitGraph::Key OrbitGraph::key_of(int fiber, const Vec& x) const {
    Key key{fiber, {}};
    key.q.fill(0);
    for (int i = 0; i < x.size(); ++i) {
        const double v = x(i);
        // Below 2^12 the 2^-40 grid is coarser than one ulp; above it the
        // raw bit pattern already is the finest key. The two encodings do not overlap.
        if (std::abs(v) < 4096.0) {
            key.q[static_cast<std::size_t>(i)] = std::llround(std::ldexp(v, 40));
        } else {
            key.q[static_cast<std::size_t>(i)] = std::bit_cast<std::int64_t>(v);
        }
    }
    return key;
}

void OrbitGraph::clamp(SplitPoint& p) {
    bool hit = false;
    for (Vec* v : {&p.xi, &p.eta}) {
        for (int i = 0; i < v->size(); ++i) {
            double& c = (*v)(i);
            if (std::abs(c) > kSaturation || !std::isfinite(c)) {
                c = std::isnan(c) ? 0.0 : std::copysign(kSaturation, c);
                hit = true;
            }
        }
    }
    if (hit) {
        ++saturated_;
    }
}

OrbitGraph::NodeId OrbitGraph::intern(const SplitPoint& p) {
    SplitPoint sp = p;
    clamp(sp);
    Vec x = sp.xi + sp.eta;
    const Key key = key_of(sp.fiber, x);
    auto it = index_.find(key);
    if (it != index_.end()) {
        return it->second;
    }
    if (nodes_.size() >= cap_) {
        throw ConvergenceFailure("trajectory memo exceeded its cap of " + std::to_string(cap_) + " nodes");
    }
    const auto id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(Node{std::move(sp), std::move(x), -1, -1});
    index_.emplace(key, id);
    return id;
}

OrbitGraph::NodeId OrbitGraph::intern(int fiber, const Vec& x) {
    return intern(split(cocycle_, x, fiber));
}

OrbitGraph::NodeId OrbitGraph::next(NodeId id) {
    const auto i = static_cast<std::size_t>(id);
    if (nodes_[i].next >= 0) {
        return nodes_[i].next;
    }
    const SplitPoint out = step_forward(cocycle_, drive_, nodes_[i].sp);
    const NodeId j = intern(out);
    nodes_[i].next = j;
    if (nodes_[static_cast<std::size_t>(j)].prev < 0) {
        nodes_[static_cast<std::size_t>(j)].prev = id;
    }
    return j;
}

OrbitGraph::NodeId OrbitGraph::prev(NodeId id) {
    const auto i = static_cast<std::size_t>(id);
    if (nodes_[i].prev >= 0) {
        return nodes_[i].prev;
    }
    const SplitPoint out = step_backward(cocycle_, drive_, nodes_[i].sp);
    const NodeId j = intern(out);
    nodes_[i].prev = j;
    if (nodes_[static_cast<std::size_t>(j)].next < 0) {
        nodes_[static_cast<std::size_t>(j)].next = id;
    }
    return j;
}

OrbitGraph::NodeId OrbitGraph::walk(NodeId id, int m) {
    for (int j = 0; j < m; ++j) {
        id = next(id);
    }
    for (int j = 0; j < -m; ++j) {
        id = prev(id);
    }
    return id;
}

}  // namespace rdslin
