// Brute-force reference implementations shared by the test suites. Nothing
// here reuses the library's local kernels.

#pragma once

#include "rotorsim/core.hpp"

#include <random>

namespace oracle {

using rotorsim::cplx;
using rotorsim::Matrix;
using rotorsim::RegisterShape;
using rotorsim::Vector;

inline std::vector<int> digits(std::size_t index, const std::vector<int>& dims) {
  std::vector<int> d(dims.size());
  for (std::size_t s = dims.size(); s-- > 0;) {
    d[s] = static_cast<int>(index % static_cast<std::size_t>(dims[s]));
    index /= static_cast<std::size_t>(dims[s]);
  }
  return d;
}

/// Full-register matrix of `op` on `sites` by elementwise index comparison.
inline Matrix embed(const Matrix& op, const std::vector<int>& sites, const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  Matrix full = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto di = digits(i, dims), dj = digits(j, dims);
      bool spectators_match = true;
      for (std::size_t s = 0; s < dims.size(); ++s)
        if (std::find(sites.begin(), sites.end(), static_cast<int>(s)) == sites.end() && di[s] != dj[s])
          spectators_match = false;
      if (!spectators_match) continue;
      Eigen::Index li = 0, lj = 0;
      for (int s : sites) {
        li = li * dims[static_cast<std::size_t>(s)] + di[static_cast<std::size_t>(s)];
        lj = lj * dims[static_cast<std::size_t>(s)] + dj[static_cast<std::size_t>(s)];
      }
      full(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = op(li, lj);
    }
  return full;
}

inline Matrix random_unitary(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = cplx(n01(rng), n01(rng));
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ();
}

inline Matrix random_density(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = cplx(n01(rng), n01(rng));
  Matrix rho = g * g.adjoint();
  return rho / rho.trace();
}

inline Matrix random_matrix(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = cplx(n01(rng), n01(rng));
  return g;
}

/// exp(-i t h) by scaled Taylor series with repeated squaring.
inline Matrix expm_taylor(const Matrix& h, double t) {
  const Matrix a = cplx(0.0, -t) * h;
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.25) {
    norm /= 2.0;
    ++squarings;
  }
  const Matrix s = a / std::pow(2.0, squarings);
  Matrix term = Matrix::Identity(h.rows(), h.cols()), sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * s / static_cast<double>(k);
    sum += term;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace oracle
