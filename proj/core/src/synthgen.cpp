#include "biopro/synthgen.hpp"

#include "biopro/error.hpp"
#include "biopro/keyvalue.hpp"
#include "biopro/rng.hpp"

#include <Eigen/QR>

#include <bit>
#include <cmath>
#include <string>

namespace biopro {
namespace {

// Stream purposes. Each (purpose, column) pair owns an independent stream.
enum Purpose : std::uint64_t {
  kDirections = 1,
  kBase = 2,
  kNoiseA = 3,
  kNoiseB = 4,
  kGapJitter = 5,
  kMagnitude = 6,
  kSign = 7,
  kAttribute = 8,
  kNoise = 9,
};

// Walsh pattern: direction i flips sign on pairs whose index shares an odd
// number of bits with i. Patterns are mutually orthogonal (and orthogonal to
// the all-ones pattern of direction 0) when n is a multiple of the next power
// of two at or above the direction count.
double walsh_sign(std::size_t direction, std::size_t pair) {
  return std::popcount(direction & pair) % 2 == 0 ? 1.0 : -1.0;
}

RandomStream stream(std::uint64_t seed, Purpose purpose, std::size_t column) {
  return RandomStream(seed, (static_cast<std::uint64_t>(purpose) << 40) ^ column);
}

Vector gaussian(RandomStream& rng, std::size_t d, double scale) {
  Vector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = scale * rng.normal();
  return v;
}

// Orthonormal basis of the span of the planted (and attribute) directions.
Matrix planted_span(const SynthConfig& cfg) {
  std::vector<Vector> dirs;
  for (const auto& b : cfg.bias_dirs) dirs.push_back(b.direction);
  if (cfg.attribute_dir) dirs.push_back(*cfg.attribute_dir);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  if (dirs.empty()) return Matrix(d, 0);
  Matrix m(d, static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = dirs[i];
  // The attribute direction may repeat a bias direction; keep the true rank.
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(d, qr.rank());
}

Vector complement_base(const SynthConfig& cfg, const Matrix& span, std::size_t column) {
  auto rng = stream(cfg.seed, kBase, column);
  Vector base = gaussian(rng, cfg.d, cfg.semantic_scale);
  if (span.cols() > 0) base -= span * (span.transpose() * base);
  return base;
}

Vector noise(const SynthConfig& cfg, Purpose purpose, std::size_t column) {
  if (cfg.noise_sigma == 0.0) return Vector::Zero(static_cast<Eigen::Index>(cfg.d));
  auto rng = stream(cfg.seed, purpose, column);
  return gaussian(rng, cfg.d, cfg.noise_sigma);
}

}  // namespace

void SynthConfig::validate() const {
  if (d == 0) fail(ErrorCode::kValidation, "synthetic dimension must be positive");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    fail(ErrorCode::kValidation, "noise_sigma must be non-negative");
  }
  if (!(gap_jitter >= 0.0 && gap_jitter < 1.0)) fail(ErrorCode::kValidation, "gap_jitter must lie in [0, 1)");
  if (!(semantic_scale >= 0.0)) fail(ErrorCode::kValidation, "semantic_scale must be non-negative");
  neutral_score_dist.validate();
  explicit_score_dist.validate();
  const auto dd = static_cast<Eigen::Index>(d);
  for (std::size_t i = 0; i < bias_dirs.size(); ++i) {
    const auto& v = bias_dirs[i].direction;
    if (v.size() != dd) fail(ErrorCode::kDimension, "bias direction " + std::to_string(i) + " has wrong length");
    if (!(bias_dirs[i].gap > 0.0)) fail(ErrorCode::kValidation, "gap magnitudes must be positive");
    if (i > 0 && !(bias_dirs[i].gap < bias_dirs[i - 1].gap)) {
      fail(ErrorCode::kValidation, "gap magnitudes must be strictly decreasing");
    }
    for (std::size_t j = 0; j <= i; ++j) {
      const double expected = i == j ? 1.0 : 0.0;
      if (std::abs(v.dot(bias_dirs[j].direction) - expected) > 1e-10) {
        fail(ErrorCode::kValidation, "bias directions are not orthonormal");
      }
    }
  }
  if (attribute_dir) {
    if (attribute_dir->size() != dd) fail(ErrorCode::kDimension, "attribute direction has wrong length");
    if (std::abs(attribute_dir->norm() - 1.0) > 1e-10) {
      fail(ErrorCode::kValidation, "attribute direction must be a unit vector");
    }
    if (!(attribute_lo <= attribute_hi)) fail(ErrorCode::kValidation, "attribute range is inverted");
  }
}

Matrix random_orthonormal(std::size_t d, std::size_t count, std::uint64_t seed) {
  if (count > d) fail(ErrorCode::kRange, "cannot draw more orthonormal vectors than the dimension");
  const auto rows = static_cast<Eigen::Index>(d);
  const auto cols = static_cast<Eigen::Index>(count);
  Matrix g(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    auto rng = stream(seed, kDirections, static_cast<std::size_t>(c));
    g.col(c) = gaussian(rng, d, 1.0);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    Eigen::Index arg = 0;
    q.col(c).cwiseAbs().maxCoeff(&arg);
    if (q(arg, c) < 0.0) q.col(c) *= -1.0;
  }
  return q;
}

SynthConfig config_with_random_directions(std::size_t d, const std::vector<double>& gaps,
                                          std::uint64_t seed) {
  SynthConfig cfg;
  cfg.d = d;
  cfg.seed = seed;
  const Matrix dirs = random_orthonormal(d, gaps.size(), seed);
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    cfg.bias_dirs.push_back({dirs.col(static_cast<Eigen::Index>(i)), gaps[i]});
  }
  return cfg;
}

std::string GeneratorLog::to_tsv() const {
  std::string out = "column_id";
  for (Eigen::Index i = 0; i < magnitudes.cols(); ++i) out += "\tmagnitude_" + std::to_string(i);
  out += "\tattribute\n";
  for (std::size_t j = 0; j < column_ids.size(); ++j) {
    out += column_ids[j];
    for (Eigen::Index i = 0; i < magnitudes.cols(); ++i) {
      out += '\t' + format_double(magnitudes(static_cast<Eigen::Index>(j), i));
    }
    out += '\t';
    if (j < attributes.size() && attributes[j]) out += format_double(*attributes[j]);
    out += '\n';
  }
  return out;
}

SyntheticPairs generate_counterfactual_pairs(const SynthConfig& cfg) {
  cfg.validate();
  if (cfg.bias_dirs.empty()) fail(ErrorCode::kValidation, "pair generation needs a bias direction");
  if (cfg.n_pairs == 0) fail(ErrorCode::kValidation, "n_pairs must be positive");

  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto n = static_cast<Eigen::Index>(cfg.n_pairs);
  const auto dirs = static_cast<Eigen::Index>(cfg.bias_dirs.size());
  const Matrix span = planted_span(cfg);

  SyntheticPairs out;
  Matrix a(d, n);
  Matrix b(d, n);
  out.log.magnitudes.resize(n, dirs);
  out.log.bases.resize(d, n);
  std::vector<LabelRecord> labels_a(cfg.n_pairs);
  std::vector<LabelRecord> labels_b(cfg.n_pairs);

  for (std::size_t j = 0; j < cfg.n_pairs; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const Vector base = complement_base(cfg, span, j);
    Vector shift = Vector::Zero(d);
    auto jitter = stream(cfg.seed, kGapJitter, j);
    for (Eigen::Index i = 0; i < dirs; ++i) {
      const auto& planted = cfg.bias_dirs[static_cast<std::size_t>(i)];
      double gap = planted.gap;
      if (cfg.gap_jitter > 0.0) gap *= 1.0 + cfg.gap_jitter * jitter.uniform(-1.0, 1.0);
      gap *= walsh_sign(static_cast<std::size_t>(i), j);
      out.log.magnitudes(col, i) = gap;
      shift += 0.5 * gap * planted.direction;
    }
    a.col(col) = base + shift + noise(cfg, kNoiseA, j);
    b.col(col) = base - shift + noise(cfg, kNoiseB, j);
    out.log.bases.col(col) = base;

    const std::string id = "pair-" + std::to_string(j);
    out.log.column_ids.push_back(id);
    out.log.attributes.emplace_back();
    labels_a[j] = {Group::kExplicitA, std::nullopt, id};
    labels_b[j] = {Group::kExplicitB, std::nullopt, id};
  }
  out.pairs.side_a = EmbeddingMatrix(std::move(a), std::move(labels_a));
  out.pairs.side_b = EmbeddingMatrix(std::move(b), std::move(labels_b));
  return out;
}

SyntheticSet generate_labeled_set(const SynthConfig& cfg) {
  cfg.validate();
  if (cfg.bias_dirs.empty()) fail(ErrorCode::kValidation, "labeled set needs a bias direction");

  const std::size_t total = cfg.n_neutral + cfg.n_explicit;
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto dirs = static_cast<Eigen::Index>(cfg.bias_dirs.size());
  const Matrix span = planted_span(cfg);
  const double lead_gap = cfg.bias_dirs.front().gap;

  SyntheticSet out;
  Matrix values(d, static_cast<Eigen::Index>(total));
  out.log.magnitudes.resize(static_cast<Eigen::Index>(total), dirs);
  out.log.bases.resize(d, static_cast<Eigen::Index>(total));
  std::vector<LabelRecord> labels(total);

  for (std::size_t j = 0; j < total; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const bool neutral = j < cfg.n_neutral;
    const auto& dist = neutral ? cfg.neutral_score_dist : cfg.explicit_score_dist;
    auto mag_rng = stream(cfg.seed, kMagnitude, j);
    auto sign_rng = stream(cfg.seed, kSign, j);
    const double magnitude = std::abs(sample_skew_normal(dist, mag_rng));
    const double sign = sign_rng.uniform() < 0.5 ? 1.0 : -1.0;

    const Vector base = complement_base(cfg, span, j);
    Vector column = base;
    for (Eigen::Index i = 0; i < dirs; ++i) {
      const auto& planted = cfg.bias_dirs[static_cast<std::size_t>(i)];
      const double component = sign * magnitude * planted.gap / lead_gap;
      out.log.magnitudes(col, i) = component;
      column += component * planted.direction;
    }
    values.col(col) = column + noise(cfg, kNoise, j);
    out.log.bases.col(col) = base;

    const std::string id = (neutral ? "neutral-" : "explicit-") + std::to_string(j);
    out.log.column_ids.push_back(id);
    out.log.attributes.emplace_back();
    labels[j].source_id = id;
    labels[j].group = neutral ? Group::kNeutral : (sign > 0 ? Group::kExplicitA : Group::kExplicitB);
  }
  out.embeddings = EmbeddingMatrix(std::move(values), std::move(labels));
  return out;
}

SyntheticSet generate_attribute_set(const SynthConfig& cfg) {
  cfg.validate();
  if (!cfg.attribute_dir) fail(ErrorCode::kValidation, "attribute set needs attribute_dir");

  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto n = static_cast<Eigen::Index>(cfg.n_attribute);
  const Matrix span = planted_span(cfg);

  SyntheticSet out;
  Matrix values(d, n);
  out.log.magnitudes.resize(n, 0);
  out.log.bases.resize(d, n);
  std::vector<LabelRecord> labels(cfg.n_attribute);

  for (std::size_t j = 0; j < cfg.n_attribute; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    auto attr_rng = stream(cfg.seed, kAttribute, j);
    const double a = attr_rng.uniform(cfg.attribute_lo, cfg.attribute_hi);
    const Vector base = complement_base(cfg, span, j);
    values.col(col) = base + a * *cfg.attribute_dir + noise(cfg, kNoise, j);
    out.log.bases.col(col) = base;

    const std::string id = "attr-" + std::to_string(j);
    out.log.column_ids.push_back(id);
    out.log.attributes.emplace_back(a);
    labels[j] = {Group::kUnlabeled, a, id};
  }
  out.embeddings = EmbeddingMatrix(std::move(values), std::move(labels));
  return out;
}

}  // namespace biopro
