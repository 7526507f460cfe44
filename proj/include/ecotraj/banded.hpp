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

#ifndef ECOTRAJ__BANDED_HPP_
#define ECOTRAJ__BANDED_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace ecotraj
{

/// Symmetric matrix with lower bandwidth `kd`, stored row-wise (row i keeps columns
/// i - kd .. i).
class BandedSymmetricMatrix
{
public:
  BandedSymmetricMatrix() = default;
  BandedSymmetricMatrix(int n, int bandwidth);

  int size() const { return n_; }
  int bandwidth() const { return kd_; }

  /// Either triangle may be addressed; |i - j| must not exceed the bandwidth.
  double operator()(int i, int j) const;
  void add(int i, int j, double value);
  void set_zero();
  double max_abs() const;

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;

private:
  friend class BandedLdlt;
  double & lower(int i, int j) { return band_[static_cast<std::size_t>(i) * (kd_ + 1) + (j - i + kd_)]; }
  double lower(int i, int j) const
  {
    return band_[static_cast<std::size_t>(i) * (kd_ + 1) + (j - i + kd_)];
  }

  int n_ = 0;
  int kd_ = 0;
  std::vector<double> band_;
};

struct Inertia
{
  int positive = 0;
  int negative = 0;
  int zero = 0;
};

/// Block LDL^T of a symmetric banded matrix without dynamic pivoting. Callers choose an
/// ordering whose leading blocks are non-singular and may mark fixed 2x2 pivots for
/// pairs such as (variable with zero curvature, constraint defining it).
class BandedLdlt
{
public:
  /// `pivot_sizes[i] == 2` starts a 2x2 pivot at i; anything else (or an empty span)
  /// means 1x1. Returns false when a pivot block is numerically singular.
  bool factorize(const BandedSymmetricMatrix & a, std::span<const std::uint8_t> pivot_sizes = {});

  /// Inertia of the factorized matrix (valid after a successful factorize()).
  Inertia inertia() const { return inertia_; }

  /// Overwrites rhs with A^{-1} rhs.
  void solve(std::span<double> rhs) const;

private:
  int n_ = 0;
  int kd_ = 0;
  std::vector<double> factor_;       // unit-lower L in band storage (diagonal blocks unused)
  std::vector<std::uint8_t> block_;  // block size at each block start, 0 inside a block
  std::vector<double> d_;            // per index: D(i,i); D(i+1,i) stored at the block start
  std::vector<double> d_off_;
  Inertia inertia_;
};

}  // namespace ecotraj

#endif  // ECOTRAJ__BANDED_HPP_
