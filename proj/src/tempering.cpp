#include "rdslin/tempering.hpp"

#include <algorithm>
#include <cmath>

#include "rdslin/errors.hpp"

namespace rdslin {

FiberScalar FiberScalar::constant(std::string name, int first, int last, double value) {
    return FiberScalar(std::move(name), first, std::vector<double>(static_cast<std::size_t>(last - first + 1), value));
}

FiberScalar FiberScalar::generate(std::string name, int first, int last, const std::function<double(int)>& fn) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(last - first + 1));
    for (int k = first; k <= last; ++k) {
        v.push_back(fn(k));
    }
    return FiberScalar(std::move(name), first, std::move(v));
}

double FiberScalar::operator[](int offset) const {
    if (!contains(offset)) {
        throw TruncationError("fiber scalar " + name + " has no value at offset " + std::to_string(offset));
    }
    return values[static_cast<std::size_t>(offset - first)];
}

double& FiberScalar::at(int offset) {
    if (!contains(offset)) {
        throw TruncationError("fiber scalar " + name + " has no value at offset " + std::to_string(offset));
    }
    return values[static_cast<std::size_t>(offset - first)];
}

double FiberScalar::max() const {
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

double FiberScalar::min() const {
    return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

double FiberScalar::max_over(int lo, int hi) const {
    lo = std::max(lo, first);
    hi = std::min(hi, last());
    double m = 0.0;
    for (int k = lo; k <= hi; ++k) {
        m = std::max(m, values[static_cast<std::size_t>(k - first)]);
    }
    return m;
}

TemperedDiagnostic temperedness_diagnostic(const FiberScalar& s, double threshold) {
    const int w = std::min(-s.first, s.last());
    if (w < 4) {
        throw ConfigError("temperedness diagnostic needs a half-width of at least 4 around offset 0");
    }
    TemperedDiagnostic out;
    out.threshold = threshold;
    const double base = std::log(s[0]);
    for (int m = 1; m <= w; ++m) {
        for (int n : {-m, m}) {
            const double slope = (std::log(s[n]) - base) / n;
            out.n.push_back(n);
            out.slopes.push_back(slope);
            if (2 * m > w) {
                out.max_outer_slope = std::max(out.max_outer_slope, std::abs(slope));
            }
        }
    }
    out.pass = std::isfinite(out.max_outer_slope) && out.max_outer_slope <= threshold;
    return out;
}

Envelope weighted_sup(const FiberScalar& source, double rate, std::string name) {
    const std::size_t n = source.values.size();
    const std::vector<double>& s = source.values;
    const double decay = std::exp(-rate);
    std::vector<double> left(n), right(n);
    std::vector<std::size_t> left_arg(n), right_arg(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0 || s[i] >= left[i - 1] * decay) {
            left[i] = s[i];
            left_arg[i] = i;
        } else {
            left[i] = left[i - 1] * decay;
            left_arg[i] = left_arg[i - 1];
        }
    }
    for (std::size_t r = n; r-- > 0;) {
        if (r + 1 == n || s[r] >= right[r + 1] * decay) {
            right[r] = s[r];
            right_arg[r] = r;
        } else {
            right[r] = right[r + 1] * decay;
            right_arg[r] = right_arg[r + 1];
        }
    }
    Envelope env;
    env.rate = rate;
    env.value = FiberScalar(std::move(name), source.first, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const bool use_left = left[i] >= right[i];
        const double v = use_left ? left[i] : right[i];
        const std::size_t arg = use_left ? left_arg[i] : right_arg[i];
        env.value.values[i] = v;
        if (v > s[i] && (arg == 0 || arg + 1 == n)) {
            env.edge_fibers.push_back(source.first + static_cast<int>(i));
        }
    }
    const double growth = std::exp(rate);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = env.value.values[i], b = env.value.values[i + 1];
        env.regularity_excess = std::max({env.regularity_excess, b / (a * growth) - 1.0, a / (b * growth) - 1.0});
    }
    return env;
}

Envelope envelope_C(const FiberScalar& K, const FiberScalar& D, double lambda) {
    if (!(lambda > 0.0)) {
        throw ConfigError("envelope_C needs lambda > 0");
    }
    const int lo = std::max(D.first, K.first - 1);
    const int hi = std::min(D.last(), K.last() - 1);
    const FiberScalar source = FiberScalar::generate("KD", lo, hi, [&](int j) { return K[j + 1] * D[j]; });
    return weighted_sup(source, 0.5 * lambda, "C");
}

Envelope envelope_N(const FiberScalar& K, const FiberScalar& M, const FiberScalar& Z, const FiberScalar& D,
                    double epsilon) {
    if (!(epsilon > 0.0)) {
        throw ConfigError("envelope_N needs epsilon > 0");
    }
    const int lo = std::max({K.first, M.first, Z.first, D.first});
    const int hi = std::min({K.last(), M.last(), Z.last() - 1, D.last()});
    const FiberScalar source = FiberScalar::generate(
        "S", lo, hi, [&](int k) { return Z[k] * (2.0 * K[k] + M[k]) + Z[k + 1] + 2.0 * D[k]; });
    return weighted_sup(source, epsilon, "N");
}

Envelope envelope_regular(const FiberScalar& D, double rho) {
    if (!(rho > 0.0)) {
        throw ConfigError("envelope_regular needs rho > 0");
    }
    return weighted_sup(D, rho, "D_regular");
}

}  // namespace rdslin
