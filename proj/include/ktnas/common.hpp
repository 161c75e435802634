#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ktnas {

// Row-major throughout: rows are (window, position) pairs, columns are model
// channels, so per-row gather/scatter against embedding tables stays contiguous.
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

template <class S>
using ColVec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using index_t = Eigen::Index;

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ktnas
