// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/tasks.hpp"

namespace fedsim {

/// Default SSIM stabilizers for dynamic range L=1: (0.01 L)^2 and (0.03 L)^2.
inline constexpr double kSsimC1 = 1e-4;
inline constexpr double kSsimC2 = 9e-4;

/// Global (whole-image) structural similarity between two equally shaped
/// images with values in [0, 1]:
///
///   (2 mu_a mu_b + c1)(2 cov_ab + c2)
///   ---------------------------------
///   (mu_a^2 + mu_b^2 + c1)(var_a + var_b + c2)
///
/// Population variance; no sliding window (the glyphs are 8x8).
inline double ssim(const std::vector<double>& img_a, const std::vector<double>& img_b,
                   double c1 = kSsimC1, double c2 = kSsimC2) {
  if (img_a.size() != img_b.size() || img_a.empty()) {
    throw ConfigError("ssim: shape mismatch");
  }
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw ConfigError("ssim: stabilizers must be positive");
  for (std::size_t i = 0; i < img_a.size(); ++i) {
    if (!(img_a[i] >= 0.0 && img_a[i] <= 1.0) || !(img_b[i] >= 0.0 && img_b[i] <= 1.0)) {
      throw ConfigError("ssim: pixel values must lie in [0, 1]");
    }
  }
  const double n = static_cast<double>(img_a.size());
  double mu_a = 0.0;
  double mu_b = 0.0;
  for (std::size_t i = 0; i < img_a.size(); ++i) {
    mu_a += img_a[i];
    mu_b += img_b[i];
  }
  mu_a /= n;
  mu_b /= n;
  double var_a = 0.0;
  double var_b = 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < img_a.size(); ++i) {
    const double da = img_a[i] - mu_a;
    const double db = img_b[i] - mu_b;
    var_a += da * da;
    var_b += db * db;
    cov += da * db;
  }
  var_a /= n;
  var_b /= n;
  cov /= n;
  const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
  const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
  return num / den;
}

struct SimilarityReport {
  std::vector<std::pair<int, double>> per_client_ssim;
  double ssim_variance = 0.0;
  double server_fraction = 0.0;
  double accuracy_mean = 0.0;
};

/// How a client is compared to the server pool: against pixelwise mean
/// images (default), or averaging SSIM over all (server row, client row)
/// pairs (sensitivity mode).
enum class SsimAggregation { MeanImage, PairwiseMean };

namespace detail {

inline std::vector<double> mean_image(const Batch& b) {
  std::vector<double> img(b.input_dim, 0.0);
  for (int s = 0; s < b.n; ++s) {
    const double* row = b.input_row(s);
    for (int p = 0; p < b.input_dim; ++p) img[p] += row[p];
  }
  for (double& v : img) v /= static_cast<double>(b.n);
  return img;
}

inline std::vector<double> image_row(const Batch& b, int s) {
  const double* row = b.input_row(s);
  return {row, row + b.input_dim};
}

}  // namespace detail

/// SSIM between the server pool and each client's training data, plus the
/// population variance of those scores across clients.
inline SimilarityReport server_client_similarity(const ServerDataset& server,
                                                 const std::vector<ClientPartition>& clients,
                                                 double c1 = kSsimC1, double c2 = kSsimC2,
                                                 SsimAggregation agg = SsimAggregation::MeanImage) {
  if (server.pooled.n < 1) throw ConfigError("server_client_similarity: empty server data");
  if (clients.empty()) throw ConfigError("server_client_similarity: no clients");
  if (server.pooled.input_dim != 64) {
    throw ConfigError("server_client_similarity: suite is not image-valued (expected 8x8 inputs)");
  }
  const std::vector<double> server_img = detail::mean_image(server.pooled);
  SimilarityReport report;
  double sum = 0.0;
  for (const ClientPartition& cp : clients) {
    if (cp.train.input_dim != 64) {
      throw ConfigError("server_client_similarity: client data is not image-valued");
    }
    double s = 0.0;
    if (agg == SsimAggregation::MeanImage) {
      s = ssim(server_img, detail::mean_image(cp.train), c1, c2);
    } else {
      double pair_sum = 0.0;
      for (int i = 0; i < server.pooled.n; ++i) {
        const std::vector<double> srow = detail::image_row(server.pooled, i);
        for (int j = 0; j < cp.train.n; ++j) {
          pair_sum += ssim(srow, detail::image_row(cp.train, j), c1, c2);
        }
      }
      s = pair_sum / (static_cast<double>(server.pooled.n) * cp.train.n);
    }
    report.per_client_ssim.emplace_back(cp.client_id, s);
    sum += s;
  }
  const double mean = sum / static_cast<double>(report.per_client_ssim.size());
  double var = 0.0;
  for (const auto& [id, s] : report.per_client_ssim) var += (s - mean) * (s - mean);
  report.ssim_variance = var / static_cast<double>(report.per_client_ssim.size());
  return report;
}

/// Pearson correlation; nullopt when either coordinate is constant.
inline std::optional<double> pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ConfigError("pearson: need >= 2 paired points");
  const auto constant = [](const std::vector<double>& v) {
    for (double x : v) {
      if (x != v.front()) return false;
    }
    return true;
  };
  if (constant(xs) || constant(ys)) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

/// Correlation between SSIM variance and joined accuracy across reports.
/// Degenerate inputs (a constant coordinate) yield nullopt rather than a
/// number.
inline std::optional<double> correlate_variance_accuracy(const std::vector<SimilarityReport>& reports) {
  if (reports.size() < 3) throw ConfigError("correlate_variance_accuracy: need >= 3 reports");
  std::vector<double> xs;
  std::vector<double> ys;
  for (const SimilarityReport& r : reports) {
    xs.push_back(r.ssim_variance);
    ys.push_back(r.accuracy_mean);
  }
  return pearson(xs, ys);
}

namespace detail {

inline std::vector<double> ranks_with_ties(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// Spearman rank correlation with average ranks for ties; nullopt when a
/// coordinate is constant.
inline std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ConfigError("spearman: need >= 2 paired points");
  return pearson(detail::ranks_with_ties(xs), detail::ranks_with_ties(ys));
}

}  // namespace fedsim
