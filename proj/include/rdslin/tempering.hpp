#pragma once

#include <functional>
#include <string>
#include <vector>

namespace rdslin {

/// A positive quantity attached to every fiber of a contiguous offset range.
struct FiberScalar {
    std::string name;
    int first = 0;
    std::vector<double> values;

    FiberScalar() = default;
    FiberScalar(std::string name_, int first_, std::vector<double> values_)
        : name(std::move(name_)), first(first_), values(std::move(values_)) {}

    [[nodiscard]] static FiberScalar constant(std::string name, int first, int last, double value);
    [[nodiscard]] static FiberScalar generate(std::string name, int first, int last,
                                              const std::function<double(int)>& fn);

    [[nodiscard]] int last() const noexcept { return first + static_cast<int>(values.size()) - 1; }
    [[nodiscard]] bool contains(int offset) const noexcept { return offset >= first && offset <= last(); }
    [[nodiscard]] bool empty() const noexcept { return values.empty(); }

    /// Throws TruncationError outside the range.
    [[nodiscard]] double operator[](int offset) const;
    [[nodiscard]] double& at(int offset);

    [[nodiscard]] double max() const;
    [[nodiscard]] double min() const;
    /// Maximum over [lo, hi] intersected with the range.
    [[nodiscard]] double max_over(int lo, int hi) const;
};

struct TemperedDiagnostic {
    std::vector<int> n;           ///< +-1 .. +-W
    std::vector<double> slopes;   ///< (log s(n) - log s(0)) / n
    double max_outer_slope = 0.0; ///< max |slope| over |n| > W/2
    double threshold = 0.01;
    bool pass = false;
};

/// Slopes of log s along the orbit relative to the anchor (offset 0).
/// The scalar must cover a range containing [-4, 4].
[[nodiscard]] TemperedDiagnostic temperedness_diagnostic(const FiberScalar& s, double threshold = 0.01);

/// Result of an exponentially weighted supremum E(k) = max_j S(j) e^{-r|j-k|}.
struct Envelope {
    FiberScalar value;
    /// Fibers whose supremum is attained at the edge of the source range by
    /// a term other than their own; the envelope may be underestimated there.
    std::vector<int> edge_fibers;
    /// max over adjacent k of E(k+1)/(E(k) e^r) - 1; <= 0 up to rounding.
    double regularity_excess = 0.0;
    double rate = 0.0;
};

/// Envelope of an arbitrary source with decay rate r (two-pass O(W) sweep).
[[nodiscard]] Envelope weighted_sup(const FiberScalar& source, double rate, std::string name);

/// C(k) = max_j K(j+1) D(j) e^{-(lambda/2)|j-k|}.
[[nodiscard]] Envelope envelope_C(const FiberScalar& K, const FiberScalar& D, double lambda);

/// N(k) = max_j S(j) e^{-eps|j-k|}, S = Z(2K+M) + Z(sigma .) + 2D.
[[nodiscard]] Envelope envelope_N(const FiberScalar& K, const FiberScalar& M, const FiberScalar& Z,
                                  const FiberScalar& D, double epsilon);

/// D'(k) = max_j D(j) e^{-rho|j-k|}.
[[nodiscard]] Envelope envelope_regular(const FiberScalar& D, double rho);

}  // namespace rdslin
