// Copyright 2026 The ecotraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ecotraj/banded.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace ecotraj
{

BandedSymmetricMatrix::BandedSymmetricMatrix(int n, int bandwidth)
: n_(n), kd_(bandwidth), band_(static_cast<std::size_t>(n) * (bandwidth + 1), 0.0)
{
}

double BandedSymmetricMatrix::operator()(int i, int j) const
{
  if (i < j) {
    std::swap(i, j);
  }
  if (i - j > kd_) {
    return 0.0;
  }
  return lower(i, j);
}

void BandedSymmetricMatrix::add(int i, int j, double value)
{
  if (i < j) {
    std::swap(i, j);
  }
  if (i - j > kd_) {
    throw std::out_of_range("entry outside the band");
  }
  lower(i, j) += value;
}

void BandedSymmetricMatrix::set_zero() { std::fill(band_.begin(), band_.end(), 0.0); }

double BandedSymmetricMatrix::max_abs() const
{
  double m = 0.0;
  for (double v : band_) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

void BandedSymmetricMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
  std::fill(y.begin(), y.end(), 0.0);
  for (int i = 0; i < n_; ++i) {
    const int first = std::max(0, i - kd_);
    for (int j = first; j < i; ++j) {
      const double a = lower(i, j);
      y[i] += a * x[j];
      y[j] += a * x[i];
    }
    y[i] += lower(i, i) * x[i];
  }
}

bool BandedLdlt::factorize(const BandedSymmetricMatrix & a, std::span<const std::uint8_t> pivot_sizes)
{
  n_ = a.n_;
  kd_ = a.kd_;
  factor_ = a.band_;
  block_.assign(n_, 0);
  d_.assign(n_, 0.0);
  d_off_.assign(n_, 0.0);
  inertia_ = {};

  const int stride = kd_ + 1;
  // Pivots are judged against the magnitude of their own row in the input.
  std::vector<double> row_mag(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    for (int k = std::max(0, i - kd_); k <= i; ++k) {
      const double v = std::abs(a.lower(i, k));
      row_mag[i] = std::max(row_mag[i], v);
      row_mag[k] = std::max(row_mag[k], v);
    }
  }
  constexpr double kRelTol = 1e-14;
  auto w = [&](int i, int j) -> double & {
    return factor_[static_cast<std::size_t>(i) * stride + (j - i + kd_)];
  };

  std::vector<double> col0(kd_ + 2);
  std::vector<double> col1(kd_ + 2);
  int j = 0;
  while (j < n_) {
    const bool two = !pivot_sizes.empty() && pivot_sizes[j] == 2 && j + 1 < n_;
    if (!two) {
      const double d = w(j, j);
      if (!(std::abs(d) > kRelTol * row_mag[j] + 1e-300)) {
        ++inertia_.zero;
        return false;
      }
      block_[j] = 1;
      d_[j] = d;
      (d > 0.0 ? inertia_.positive : inertia_.negative)++;
      const int last = std::min(n_ - 1, j + kd_);
      const int count = last - j;
      for (int k = 0; k < count; ++k) {
        col0[k] = w(j + 1 + k, j);
      }
      for (int r = 0; r < count; ++r) {
        const double l = col0[r] / d;
        if (l != 0.0) {
          const int row = j + 1 + r;
          for (int c = 0; c <= r; ++c) {
            w(row, j + 1 + c) -= l * col0[c];
          }
        }
        w(j + 1 + r, j) = l;
      }
      ++j;
      continue;
    }

    const double a00 = w(j, j);
    const double a10 = w(j + 1, j);
    const double a11 = w(j + 1, j + 1);
    const double det = a00 * a11 - a10 * a10;
    if (!(std::abs(det) > kRelTol * row_mag[j] * row_mag[j + 1] + 1e-300)) {
      inertia_.zero += 2;
      return false;
    }
    block_[j] = 2;
    d_[j] = a00;
    d_[j + 1] = a11;
    d_off_[j] = a10;
    if (det < 0.0) {
      ++inertia_.positive;
      ++inertia_.negative;
    } else if (a00 + a11 > 0.0) {
      inertia_.positive += 2;
    } else {
      inertia_.negative += 2;
    }
    const double i00 = a11 / det;
    const double i01 = -a10 / det;
    const double i11 = a00 / det;
    const int last = std::min(n_ - 1, j + 1 + kd_);
    const int count = last - (j + 1);
    for (int k = 0; k < count; ++k) {
      const int row = j + 2 + k;
      col0[k] = row - j <= kd_ ? w(row, j) : 0.0;
      col1[k] = w(row, j + 1);
    }
    for (int r = 0; r < count; ++r) {
      const int row = j + 2 + r;
      const double l0 = col0[r] * i00 + col1[r] * i01;
      const double l1 = col0[r] * i01 + col1[r] * i11;
      if (l0 != 0.0 || l1 != 0.0) {
        for (int c = 0; c <= r; ++c) {
          w(row, j + 2 + c) -= l0 * col0[c] + l1 * col1[c];
        }
      }
      if (row - j <= kd_) {
        w(row, j) = l0;
      }
      w(row, j + 1) = l1;
    }
    j += 2;
  }
  return true;
}

void BandedLdlt::solve(std::span<double> x) const
{
  const int stride = kd_ + 1;
  auto l = [&](int i, int j) {
    return factor_[static_cast<std::size_t>(i) * stride + (j - i + kd_)];
  };
  // Forward substitution with the unit block-lower factor.
  for (int j = 0; j < n_;) {
    const int p = block_[j];
    const int last = std::min(n_ - 1, j + p - 1 + kd_);
    for (int r = j + p; r <= last; ++r) {
      double acc = 0.0;
      for (int c = j; c < j + p; ++c) {
        if (r - c <= kd_) {
          acc += l(r, c) * x[c];
        }
      }
      x[r] -= acc;
    }
    j += p;
  }
  // Block diagonal.
  for (int j = 0; j < n_;) {
    if (block_[j] == 1) {
      x[j] /= d_[j];
      ++j;
    } else {
      const double det = d_[j] * d_[j + 1] - d_off_[j] * d_off_[j];
      const double x0 = (d_[j + 1] * x[j] - d_off_[j] * x[j + 1]) / det;
      const double x1 = (d_[j] * x[j + 1] - d_off_[j] * x[j]) / det;
      x[j] = x0;
      x[j + 1] = x1;
      j += 2;
    }
  }
  // Backward substitution with L^T; walk block starts from the end.
  int j = n_ - 1;
  while (j >= 0) {
    int start = j;
    if (block_[start] == 0) {
      --start;
    }
    const int p = block_[start];
    const int last = std::min(n_ - 1, start + p - 1 + kd_);
    for (int c = start; c < start + p; ++c) {
      double acc = 0.0;
      for (int r = start + p; r <= last; ++r) {
        if (r - c <= kd_) {
          acc += l(r, c) * x[r];
        }
      }
      x[c] -= acc;
    }
    j = start - 1;
  }
}

}  // namespace ecotraj
