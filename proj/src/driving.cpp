#include "rdslin/driving.hpp"

#include <cmath>

#include "rdslin/errors.hpp"

namespace rdslin {

std::string to_string(BaseKind kind) {
    switch (kind) {
        case BaseKind::point: return "point";
        case BaseKind::periodic: return "periodic";
        case BaseKind::rotation: return "rotation";
        case BaseKind::bernoulli: return "bernoulli";
    }
    return "unknown";
}

BaseKind parse_base_kind(std::string_view name) {
    if (name == "point") return BaseKind::point;
    if (name == "periodic") return BaseKind::periodic;
    if (name == "rotation") return BaseKind::rotation;
    if (name == "bernoulli") return BaseKind::bernoulli;
    throw ConfigError("unknown base kind '" + std::string(name) + "'");
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

OrbitWindow::OrbitWindow(BaseSpec base, int half_width, std::uint32_t orbit_id, std::vector<FiberData> data,
                         std::uint64_t angle_numerator)
    : base_(base), half_width_(half_width), orbit_id_(orbit_id), data_(std::move(data)),
      angle_numerator_(angle_numerator) {}

const FiberData& OrbitWindow::at(std::int64_t offset) const {
    if (!contains(offset)) {
        throw TruncationError("fiber offset " + std::to_string(offset) + " outside window [" +
                              std::to_string(first()) + ", " + std::to_string(last()) + "]");
    }
    return data_[static_cast<std::size_t>(offset - first())];
}

FiberRef OrbitWindow::shift(FiberRef fiber, std::int64_t m) const {
    if (fiber.orbit_id != orbit_id_) {
        throw ConfigError("fiber belongs to orbit " + std::to_string(fiber.orbit_id) + ", window holds orbit " +
                          std::to_string(orbit_id_));
    }
    const FiberRef out{fiber.orbit_id, fiber.offset + m};
    if (!contains(out.offset)) {
        throw TruncationError("shift by " + std::to_string(m) + " from offset " + std::to_string(fiber.offset) +
                              " leaves window of half-width " + std::to_string(half_width_));
    }
    return out;
}

double OrbitWindow::surrogate_angle() const noexcept {
    return static_cast<double>(angle_numerator_) / 4294967296.0;
}

OrbitWindow build_window(const BaseSpec& base, int half_width, std::uint32_t orbit_id) {
    if (half_width <= 0) {
        throw ConfigError("half_width must be positive");
    }
    if (base.kind == BaseKind::periodic && base.period <= 0) {
        throw ConfigError("period must be positive");
    }
    if ((base.kind == BaseKind::bernoulli || base.kind == BaseKind::rotation) && base.alphabet <= 0) {
        throw ConfigError("alphabet size must be positive");
    }
    std::uint64_t numerator = 0;
    if (base.kind == BaseKind::rotation) {
        const double frac = base.angle - std::floor(base.angle);
        numerator = static_cast<std::uint64_t>(std::llround(frac * 4294967296.0)) & 0xffffffffULL;
    }
    std::vector<FiberData> data;
    data.reserve(static_cast<std::size_t>(2 * half_width + 1));
    for (std::int64_t k = -half_width; k <= half_width; ++k) {
        FiberData fd;
        switch (base.kind) {
            case BaseKind::point:
                break;
            case BaseKind::periodic:
                fd.symbol = static_cast<int>(((k % base.period) + base.period) % base.period);
                fd.phase = static_cast<double>(fd.symbol) / base.period;
                break;
            case BaseKind::rotation: {
                // Exact arithmetic mod 2^32 keeps phases identical for equal offsets.
                const std::uint64_t turns = (static_cast<std::uint64_t>(k) * numerator) & 0xffffffffULL;
                fd.phase = static_cast<double>(turns) / 4294967296.0;
                fd.symbol = static_cast<int>(fd.phase * base.alphabet);
                break;
            }
            case BaseKind::bernoulli: {
                const std::uint64_t h = splitmix64(base.seed ^ splitmix64(static_cast<std::uint64_t>(k)));
                fd.symbol = static_cast<int>(h % static_cast<std::uint64_t>(base.alphabet));
                fd.phase = static_cast<double>(h >> 11) * 0x1.0p-53;
                break;
            }
        }
        data.push_back(fd);
    }
    return OrbitWindow(base, half_width, orbit_id, std::move(data), numerator);
}

}  // namespace rdslin
