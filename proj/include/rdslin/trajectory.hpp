#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "rdslin/cocycle.hpp"
#include "rdslin/linalg.hpp"
#include "rdslin/perturb.hpp"

namespace rdslin {

/// x = xi + eta with xi in E^{s,u}(fiber) and eta in E^c(fiber).
struct SplitPoint {
    int fiber = 0;
    Vec xi;
    Vec eta;

    [[nodiscard]] Vec point() const { return xi + eta; }
};

[[nodiscard]] SplitPoint split(const Cocycle& cocycle, const Vec& x, int fiber);

/// y(n) = A(fiber, n) eta, using the restricted center inverse for n < 0.
[[nodiscard]] Vec evolve_center(const Cocycle& cocycle, const Vec& eta, int fiber, int n);

/// One step of the coupled system: xi' = A xi + f(xi + eta), eta' = A eta.
[[nodiscard]] SplitPoint step_forward(const Cocycle& cocycle, const Perturbation& f, const SplitPoint& p);
/// Inverse step: eta' = restricted center inverse, xi' = (F^{eta'})^{-1}(xi).
[[nodiscard]] SplitPoint step_backward(const Cocycle& cocycle, const Perturbation& f, const SplitPoint& p);

[[nodiscard]] SplitPoint evolve_coupled(const Cocycle& cocycle, const Perturbation& f, const SplitPoint& p, int n);

/// Interned trajectory points of the coupled system. Nodes are keyed on
/// (fiber, point quantized at 2^-40); forward and backward links are stored
/// together so that walking next then prev returns the identical node.
class OrbitGraph {
public:
    using NodeId = int;

    /// Coordinates larger than this are clamped; beyond it the perturbations
    /// are saturated and the contribution of such points is negligible.
    static constexpr double kSaturation = 1e100;

    OrbitGraph(const Cocycle& cocycle, const Perturbation& drive, std::size_t node_cap = std::size_t{1} << 22);

    NodeId intern(const SplitPoint& p);
    NodeId intern(int fiber, const Vec& x);
    NodeId next(NodeId id);
    NodeId prev(NodeId id);
    /// m steps forward (m > 0) or backward (m < 0).
    NodeId walk(NodeId id, int m);

    [[nodiscard]] const SplitPoint& split_point(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].sp; }
    [[nodiscard]] const Vec& point(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].x; }
    [[nodiscard]] int fiber(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].sp.fiber; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] int saturated() const noexcept { return saturated_; }

private:
    struct Key {
        int fiber;
        std::array<std::int64_t, kMaxDim> q;
        friend bool operator==(const Key&, const Key&) = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept;
    };
    struct Node {
        SplitPoint sp;
        Vec x;
        NodeId next = -1;
        NodeId prev = -1;
    };

    [[nodiscard]] Key key_of(int fiber, const Vec& x) const;
    void clamp(SplitPoint& p);

    const Cocycle& cocycle_;
    const Perturbation& drive_;
    std::size_t cap_;
    std::vector<Node> nodes_;
    std::unordered_map<Key, NodeId, KeyHash> index_;
    int saturated_ = 0;
};

}  // namespace rdslin
