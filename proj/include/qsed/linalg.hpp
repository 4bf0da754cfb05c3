#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace qsed {

template <typename Scalar> using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

/// Binary assignment, one entry per variable (0 or 1).
using Bits = std::vector<std::uint8_t>;

inline VectorXd to_vector(const Bits &bits) {
    VectorXd v(static_cast<Eigen::Index>(bits.size()));
    for (std::size_t i = 0; i < bits.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = bits[i] ? 1.0 : 0.0;
    }
    return v;
}

/// Little-endian: bit i of `index` is entry i.
inline Bits bits_from_index(std::uint64_t index, std::size_t width) {
    Bits b(width);
    for (std::size_t i = 0; i < width; ++i) {
        b[i] = static_cast<std::uint8_t>((index >> i) & 1U);
    }
    return b;
}

inline std::uint64_t index_from_bits(const Bits &bits) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) {
            v |= (std::uint64_t{1} << i);
        }
    }
    return v;
}

} // namespace qsed
