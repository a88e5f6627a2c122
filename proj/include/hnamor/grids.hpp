///
/// \file grids.hpp
///
/// Sample grids on the imaginary axis.
///

#ifndef HNAMOR_GRIDS_HPP
#define HNAMOR_GRIDS_HPP

#include <cmath>

#include "hnamor/core.hpp"

namespace hnamor
{

/// N points uniform on the unit circle, skipping an arc of pi/(4N) on each
/// side of s = -1, mapped to the axis by z = (s - 1)/(s + 1) = i tan(theta/2).
inline std::vector<Complex> sample_moebius_uniform(std::size_t N)
{
    if (N < 2)
    {
        throw std::invalid_argument("sample_moebius_uniform: need N >= 2");
    }
    const double arc = M_PI / (4.0 * static_cast<double>(N));
    std::vector<Complex> z;
    z.reserve(N);
    for (std::size_t j = 0; j < N; ++j)
    {
        const double theta = -M_PI + arc +
                             (2.0 * M_PI - 2.0 * arc) * static_cast<double>(j) /
                                 static_cast<double>(N - 1);
        z.emplace_back(0.0, std::tan(theta / 2.0));
    }
    return z;
}

/// N log-spaced magnitudes in [a, b], mirrored to both half-axes; 2N points
/// sorted by imaginary part.
inline std::vector<Complex> sample_log(double a, double b, std::size_t N)
{
    if (!(a > 0.0) || !(b >= a) || N < 1)
    {
        throw std::invalid_argument("sample_log: need 0 < a <= b and N >= 1");
    }
    std::vector<double> mags(N);
    const double la = std::log10(a);
    const double lb = std::log10(b);
    for (std::size_t j = 0; j < N; ++j)
    {
        const double t = N == 1 ? 0.0
                                : static_cast<double>(j) /
                                      static_cast<double>(N - 1);
        mags[j] = std::pow(10.0, la + (lb - la) * t);
    }
    std::vector<Complex> z;
    z.reserve(2 * N);
    for (std::size_t j = N; j-- > 0;)
    {
        z.emplace_back(0.0, -mags[j]);
    }
    for (std::size_t j = 0; j < N; ++j)
    {
        z.emplace_back(0.0, mags[j]);
    }
    return z;
}

} // namespace hnamor

#endif // HNAMOR_GRIDS_HPP
