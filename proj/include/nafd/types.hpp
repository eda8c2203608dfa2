#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace nafd {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

template <typename T>
using Grid = std::vector<std::vector<T>>;

template <typename T>
Grid<T> make_grid(std::size_t rows, std::size_t cols, const T& v = T{}) {
  return Grid<T>(rows, std::vector<T>(cols, v));
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace nafd
