#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rdslin {

/// A fiber sigma^offset(omega) of one orbit.
struct FiberRef {
    std::uint32_t orbit_id = 0;
    std::int64_t offset = 0;

    friend auto operator<=>(const FiberRef&, const FiberRef&) = default;
};

enum class BaseKind { point, periodic, rotation, bernoulli };

[[nodiscard]] std::string to_string(BaseKind kind);
[[nodiscard]] BaseKind parse_base_kind(std::string_view name);

struct BaseSpec {
    BaseKind kind = BaseKind::point;
    int period = 1;                           ///< periodic base
    double angle = 0.6180339887498948482;     ///< rotation base, taken mod 1
    int alphabet = 2;                         ///< bernoulli symbols; rotation partition cells
    std::uint64_t seed = 0;                   ///< bernoulli base

    friend bool operator==(const BaseSpec&, const BaseSpec&) = default;
};

/// Per-fiber data that drives every omega-dependent quantity downstream.
struct FiberData {
    int symbol = 0;
    double phase = 0.0;  ///< in [0, 1)

    friend bool operator==(const FiberData&, const FiberData&) = default;
};

/// Immutable finite piece [-W, W] of one two-sided base orbit.
class OrbitWindow {
public:
    OrbitWindow(BaseSpec base, int half_width, std::uint32_t orbit_id, std::vector<FiberData> data,
                std::uint64_t angle_numerator);

    [[nodiscard]] const BaseSpec& base() const noexcept { return base_; }
    [[nodiscard]] int half_width() const noexcept { return half_width_; }
    [[nodiscard]] int first() const noexcept { return -half_width_; }
    [[nodiscard]] int last() const noexcept { return half_width_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] FiberRef anchor() const noexcept { return {orbit_id_, 0}; }
    [[nodiscard]] std::uint32_t orbit_id() const noexcept { return orbit_id_; }

    [[nodiscard]] bool contains(std::int64_t offset) const noexcept {
        return offset >= first() && offset <= last();
    }

    /// Throws TruncationError outside the window.
    [[nodiscard]] const FiberData& at(std::int64_t offset) const;

    /// sigma^m applied to a fiber; throws TruncationError when the result leaves the window.
    [[nodiscard]] FiberRef shift(FiberRef fiber, std::int64_t m) const;

    /// Rotation base: the angle actually used is angle_numerator / 2^32.
    [[nodiscard]] std::uint64_t angle_numerator() const noexcept { return angle_numerator_; }
    [[nodiscard]] double surrogate_angle() const noexcept;

    friend bool operator==(const OrbitWindow&, const OrbitWindow&) = default;

private:
    BaseSpec base_;
    int half_width_;
    std::uint32_t orbit_id_;
    std::vector<FiberData> data_;
    std::uint64_t angle_numerator_ = 0;
};

/// Deterministic given (base, half_width): bernoulli symbols are a hash of
/// (seed, offset), so a window's interior does not depend on its width.
[[nodiscard]] OrbitWindow build_window(const BaseSpec& base, int half_width, std::uint32_t orbit_id = 0);

/// SplitMix64 finalizer, used as a counter-based generator.
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace rdslin
