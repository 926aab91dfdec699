// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

/// A dense (inputs, targets) batch in row-major layout.
struct Batch {
  int n = 0;
  int input_dim = 0;
  int target_dim = 0;
  std::vector<double> inputs;   // n * input_dim
  std::vector<double> targets;  // n * target_dim

  bool empty() const { return n == 0; }
  const double* input_row(int i) const { return inputs.data() + static_cast<std::size_t>(i) * input_dim; }
  const double* target_row(int i) const { return targets.data() + static_cast<std::size_t>(i) * target_dim; }
};

inline void validate_batch(const Batch& b, const char* what) {
  if (b.n < 0 || b.input_dim <= 0 || b.target_dim <= 0) {
    throw ConfigError(std::string(what) + ": bad batch shape");
  }
  if (b.inputs.size() != static_cast<std::size_t>(b.n) * b.input_dim ||
      b.targets.size() != static_cast<std::size_t>(b.n) * b.target_dim) {
    throw ConfigError(std::string(what) + ": buffer size does not match n*dim");
  }
}

inline Batch make_batch(int n, int input_dim, int target_dim) {
  if (n < 0 || input_dim <= 0 || target_dim <= 0) {
    throw ConfigError("make_batch: bad shape");
  }
  Batch b;
  b.n = n;
  b.input_dim = input_dim;
  b.target_dim = target_dim;
  b.inputs.assign(static_cast<std::size_t>(n) * input_dim, 0.0);
  b.targets.assign(static_cast<std::size_t>(n) * target_dim, 0.0);
  return b;
}

/// Gathers the given rows (in order) into a new batch.
inline Batch take_rows(const Batch& src, const std::vector<int>& rows) {
  validate_batch(src, "take_rows");
  Batch out = make_batch(static_cast<int>(rows.size()), src.input_dim, src.target_dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    int i = rows[r];
    if (i < 0 || i >= src.n) throw ConfigError("take_rows: row index out of range");
    for (int j = 0; j < src.input_dim; ++j) {
      out.inputs[r * src.input_dim + j] = src.inputs[static_cast<std::size_t>(i) * src.input_dim + j];
    }
    for (int j = 0; j < src.target_dim; ++j) {
      out.targets[r * src.target_dim + j] = src.targets[static_cast<std::size_t>(i) * src.target_dim + j];
    }
  }
  return out;
}

inline Batch concat_batches(const std::vector<Batch>& parts) {
  if (parts.empty()) throw ConfigError("concat_batches: empty list");
  Batch out;
  out.input_dim = parts[0].input_dim;
  out.target_dim = parts[0].target_dim;
  for (const Batch& p : parts) {
    validate_batch(p, "concat_batches");
    if (p.input_dim != out.input_dim || p.target_dim != out.target_dim) {
      throw ConfigError("concat_batches: mixed dims");
    }
    out.n += p.n;
    out.inputs.insert(out.inputs.end(), p.inputs.begin(), p.inputs.end());
    out.targets.insert(out.targets.end(), p.targets.begin(), p.targets.end());
  }
  return out;
}

}  // namespace fedsim
