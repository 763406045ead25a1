#include "biopro/io.hpp"

#include "biopro/checksum.hpp"
#include "biopro/error.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <optional>
#include <limits>

namespace biopro::io {
namespace {

namespace fs = std::filesystem;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void real(double v, Dtype dtype) {
    if (dtype == Dtype::kF64) {
      f64(v);
    } else {
      f32(static_cast<float>(v));
    }
  }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte(pos_ + i)) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte(pos_ + i)) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double real(Dtype dtype) { return dtype == Dtype::kF64 ? f64() : static_cast<double>(f32()); }

 private:
  unsigned char byte(std::size_t i) const { return static_cast<unsigned char>(bytes_[i]); }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::size_t dtype_size(Dtype dtype) { return dtype == Dtype::kF64 ? 8 : 4; }

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kRange, std::string(what) + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

std::string magic_text(const std::array<char, 4>& magic) { return std::string(magic.data(), 4); }

std::uint64_t payload_checksum(std::string_view payload) {
  return fnv1a64(std::as_bytes(std::span(payload.data(), payload.size())));
}

void require_finite_columns(const Matrix& m, const char* what) {
  if (auto col = first_non_finite_column(m)) {
    fail(ErrorCode::kNonFinite, std::string(what) + ": non-finite value in column " +
                                    std::to_string(*col));
  }
}

// f32 narrowing can overflow a finite double to inf; refuse that as well.
void require_representable(const Matrix& m, Dtype dtype, const char* what) {
  if (dtype != Dtype::kF32) return;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(static_cast<float>(m(i, j)))) {
        fail(ErrorCode::kNonFinite, std::string(what) + ": value in column " +
                                        std::to_string(j) + " overflows f32");
      }
    }
  }
}

std::string encode(const std::array<char, 4>& magic, Dtype dtype, std::size_t d, std::size_t n,
                   std::string_view payload) {
  Writer w;
  w.bytes().append(magic.data(), 4);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(dtype));
  w.u32(checked_u32(d, "d"));
  w.u32(checked_u32(n, "n"));
  w.u64(payload_checksum(payload));
  w.bytes().append(payload);
  return std::move(w.bytes());
}

Header decode_header(std::string_view bytes, const fs::path& path) {
  if (bytes.size() < kHeaderSize) {
    fail(ErrorCode::kTruncated, path.string() + ": file shorter than the " +
                                    std::to_string(kHeaderSize) + "-byte header");
  }
  Header h;
  std::memcpy(h.magic.data(), bytes.data(), 4);
  Reader r(bytes.substr(4));
  h.version = r.u32();
  const auto dtype = r.u32();
  h.d = r.u32();
  h.n = r.u32();
  h.checksum = r.u64();
  if (dtype > 1) {
    fail(ErrorCode::kFormat, path.string() + ": unknown dtype code " + std::to_string(dtype));
  }
  h.dtype = static_cast<Dtype>(dtype);
  return h;
}

struct Decoded {
  Header header;
  std::string bytes;  // full file
  std::string_view payload() const { return std::string_view(bytes).substr(kHeaderSize); }
};

Decoded load(const fs::path& path, const std::array<char, 4>& magic) {
  Decoded out;
  out.bytes = read_text_file(path);
  if (out.bytes.size() >= 4 && std::memcmp(out.bytes.data(), magic.data(), 4) != 0) {
    fail(ErrorCode::kBadMagic, path.string() + ": expected magic " + magic_text(magic) +
                                   ", found '" + out.bytes.substr(0, 4) + "'");
  }
  out.header = decode_header(out.bytes, path);
  if (out.header.version != kFormatVersion) {
    fail(ErrorCode::kVersionMismatch, path.string() + ": format version " +
                                          std::to_string(out.header.version) + ", expected " +
                                          std::to_string(kFormatVersion));
  }
  return out;
}

void check_payload(const Decoded& f, std::size_t expected_size, const fs::path& path) {
  const auto payload = f.payload();
  if (payload.size() < expected_size) {
    fail(ErrorCode::kTruncated, path.string() + ": payload has " +
                                    std::to_string(payload.size()) + " bytes, expected " +
                                    std::to_string(expected_size));
  }
  if (payload.size() > expected_size) {
    fail(ErrorCode::kFormat, path.string() + ": " +
                                 std::to_string(payload.size() - expected_size) +
                                 " trailing bytes after payload");
  }
  if (payload_checksum(payload) != f.header.checksum) {
    fail(ErrorCode::kChecksumMismatch, path.string() + ": payload checksum does not match header");
  }
}

std::optional<Manifest> load_manifest(const fs::path& path) {
  const auto mp = manifest_path(path);
  if (!fs::exists(mp)) return std::nullopt;
  return Manifest::parse(read_text_file(mp));
}

// A manifest that disagrees with the header is corruption, not a hint.
void cross_check(const Manifest& m, const Header& h, const fs::path& path) {
  if (m.format_version != static_cast<int>(h.version)) {
    fail(ErrorCode::kVersionMismatch, path.string() + ": manifest format_version disagrees with header");
  }
  if (m.dtype != h.dtype || m.d != h.d || m.n != h.n) {
    fail(ErrorCode::kFormat, path.string() + ": manifest shape or dtype disagrees with header");
  }
  if (m.checksum != h.checksum) {
    fail(ErrorCode::kChecksumMismatch, path.string() + ": manifest checksum disagrees with header");
  }
}

Manifest make_manifest(Dtype dtype, std::size_t d, std::size_t n, std::uint64_t checksum) {
  Manifest m;
  m.dtype = dtype;
  m.d = static_cast<std::uint32_t>(d);
  m.n = static_cast<std::uint32_t>(n);
  m.checksum = checksum;
  return m;
}

std::uint64_t header_checksum(std::string_view file) {
  return Reader(file.substr(20)).u64();
}

void append_values(Writer& w, const Matrix& m, Dtype dtype) {
  const double* data = m.data();
  const auto count = static_cast<std::size_t>(m.size());
  for (std::size_t i = 0; i < count; ++i) w.real(data[i], dtype);
}

Matrix read_values(Reader& r, std::size_t rows, std::size_t cols, Dtype dtype) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  double* data = m.data();
  for (std::size_t i = 0; i < rows * cols; ++i) data[i] = r.real(dtype);
  return m;
}

}  // namespace

std::string_view to_string(Dtype dtype) noexcept {
  return dtype == Dtype::kF32 ? "f32" : "f64";
}

Dtype parse_dtype(std::string_view text) {
  if (text == "f32") return Dtype::kF32;
  if (text == "f64") return Dtype::kF64;
  fail(ErrorCode::kUsage, "unknown dtype '" + std::string(text) + "' (expected f32 or f64)");
}

std::string Manifest::to_string() const {
  KeyValue kv;
  kv.set("format_version", format_version);
  kv.set("dtype", std::string(io::to_string(dtype)));
  kv.set("d", static_cast<std::uint64_t>(d));
  kv.set("n", static_cast<std::uint64_t>(n));
  kv.set("label_file", label_file);
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(checksum));
  kv.set("checksum", std::string(buf));
  for (const auto& [k, v] : extra.entries()) kv.set(k, v);
  return kv.to_string();
}

Manifest Manifest::parse(std::string_view text) {
  const auto kv = KeyValue::parse(text);
  Manifest m;
  m.format_version = static_cast<int>(kv.get_int("format_version"));
  m.dtype = parse_dtype(kv.get("dtype"));
  const auto d = kv.get_uint("d");
  const auto n = kv.get_uint("n");
  if (d > std::numeric_limits<std::uint32_t>::max() ||
      n > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kFormat, "manifest d or n out of range");
  }
  m.d = static_cast<std::uint32_t>(d);
  m.n = static_cast<std::uint32_t>(n);
  m.label_file = kv.find("label_file").value_or("");
  m.checksum = kv.get_uint("checksum");
  for (const auto& [k, v] : kv.entries()) {
    if (k == "format_version" || k == "dtype" || k == "d" || k == "n" || k == "label_file" ||
        k == "checksum") {
      continue;
    }
    m.extra.set(k, v);
  }
  return m;
}

std::filesystem::path manifest_path(const std::filesystem::path& data_file) {
  auto p = data_file;
  p += ".manifest";
  return p;
}

std::filesystem::path labels_path(const std::filesystem::path& data_file) {
  auto p = data_file;
  p += ".labels";
  return p;
}

Header read_header(const std::filesystem::path& path) {
  const auto bytes = read_text_file(path);
  return decode_header(bytes, path);
}

std::string labels_to_text(std::span<const LabelRecord> labels) {
  std::string out;
  for (const auto& rec : labels) {
    if (rec.source_id.find_first_of("\t\r\n") != std::string::npos) {
      fail(ErrorCode::kValidation, "source_id '" + rec.source_id + "' contains a tab or newline");
    }
    out += rec.source_id;
    out += '\t';
    out += to_string(rec.group);
    out += '\t';
    if (rec.attribute) out += format_double(*rec.attribute);
    out += '\n';
  }
  return out;
}

std::vector<LabelRecord> parse_labels(std::string_view text) {
  std::vector<LabelRecord> out;
  std::size_t line_no = 0;
  for (auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      fail(ErrorCode::kFormat, "label line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                                   std::to_string(fields.size()));
    }
    LabelRecord rec;
    rec.source_id = fields[0];
    rec.group = parse_group(fields[1]);
    if (!fields[2].empty()) {
      const double a = parse_double(fields[2]);
      if (!std::isfinite(a)) {
        fail(ErrorCode::kNonFinite, "label line " + std::to_string(line_no) + ": attribute is not finite");
      }
      rec.attribute = a;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path, Dtype dtype) {
  require_finite_columns(m.values, path.string().c_str());
  m.validate();
  require_representable(m.values, dtype, path.string().c_str());

  Writer payload;
  append_values(payload, m.values, dtype);
  const auto file = encode(kEmbeddingMagic, dtype, m.dim(), m.count(), payload.bytes());
  const auto labels_file = labels_path(path);
  auto manifest = make_manifest(dtype, m.dim(), m.count(), header_checksum(file));
  manifest.label_file = labels_file.filename().string();
  manifest.extra.set("type", std::string("embeddings"));

  write_file_atomic(labels_file, labels_to_text(m.labels));
  write_file_atomic(path, file);
  write_file_atomic(manifest_path(path), manifest.to_string());
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  const auto f = load(path, kEmbeddingMagic);
  const auto& h = f.header;
  check_payload(f, std::size_t{h.d} * h.n * dtype_size(h.dtype), path);

  Reader r(f.payload());
  EmbeddingMatrix out;
  out.values = read_values(r, h.d, h.n, h.dtype);

  std::optional<fs::path> label_file;
  if (const auto manifest = load_manifest(path)) {
    cross_check(*manifest, h, path);
    if (!manifest->label_file.empty()) label_file = path.parent_path() / manifest->label_file;
  } else if (fs::exists(labels_path(path))) {
    label_file = labels_path(path);
  }
  if (label_file) {
    out.labels = parse_labels(read_text_file(*label_file));
    if (out.labels.size() != h.n) {
      fail(ErrorCode::kDimension, label_file->string() + ": " + std::to_string(out.labels.size()) +
                                      " labels for " + std::to_string(h.n) + " columns");
    }
  } else {
    out = EmbeddingMatrix::unlabeled(std::move(out.values));
  }
  out.validate();
  return out;
}

void write_projector(const Projector& p, const std::filesystem::path& path, Dtype dtype) {
  if (p.matrix.rows() != p.matrix.cols()) {
    fail(ErrorCode::kDimension, "projector must be square");
  }
  require_finite_columns(p.matrix, path.string().c_str());
  require_representable(p.matrix, dtype, path.string().c_str());

  Writer payload;
  payload.u32(p.kind == ProjectorKind::kOrthogonal ? 0u : 1u);
  payload.u32(0);
  payload.u64(p.provenance.subspace_checksum);
  append_values(payload, p.matrix, dtype);
  const auto file = encode(kProjectorMagic, dtype, p.dim(), p.dim(), payload.bytes());
  auto manifest = make_manifest(dtype, p.dim(), p.dim(), header_checksum(file));
  manifest.extra.set("type", std::string("projector"));
  manifest.extra.set("kind", std::string(to_string(p.kind)));
  manifest.extra.set("provenance", p.provenance.parameters);

  write_file_atomic(path, file);
  write_file_atomic(manifest_path(path), manifest.to_string());
}

Projector read_projector(const std::filesystem::path& path) {
  const auto f = load(path, kProjectorMagic);
  const auto& h = f.header;
  if (h.d != h.n) fail(ErrorCode::kFormat, path.string() + ": projector is not square");
  check_payload(f, 16 + std::size_t{h.d} * h.n * dtype_size(h.dtype), path);

  Reader r(f.payload());
  Projector p;
  const auto kind = r.u32();
  if (kind > 1) fail(ErrorCode::kFormat, path.string() + ": unknown projector kind code");
  p.kind = kind == 0 ? ProjectorKind::kOrthogonal : ProjectorKind::kCalibrated;
  r.u32();
  p.provenance.subspace_checksum = r.u64();
  p.matrix = read_values(r, h.d, h.n, h.dtype);
  require_finite_columns(p.matrix, path.string().c_str());

  if (const auto manifest = load_manifest(path)) {
    cross_check(*manifest, h, path);
    if (const auto k = manifest->extra.find("kind"); k && parse_projector_kind(*k) != p.kind) {
      fail(ErrorCode::kFormat, path.string() + ": manifest kind disagrees with payload");
    }
    p.provenance.parameters = manifest->extra.find("provenance").value_or("");
  }
  return p;
}

void write_subspace(const BiasSubspace& s, const std::filesystem::path& path, Dtype dtype) {
  if (static_cast<std::size_t>(s.singular_values.size()) != s.rank()) {
    fail(ErrorCode::kDimension, "subspace has " + std::to_string(s.rank()) + " directions but " +
                                    std::to_string(s.singular_values.size()) + " singular values");
  }
  require_finite_columns(s.basis, path.string().c_str());
  require_finite_columns(s.singular_values, path.string().c_str());
  require_representable(s.basis, dtype, path.string().c_str());

  Writer payload;
  append_values(payload, s.basis, dtype);
  append_values(payload, s.singular_values, dtype);
  const auto file = encode(kSubspaceMagic, dtype, s.dim(), s.rank(), payload.bytes());
  auto manifest = make_manifest(dtype, s.dim(), s.rank(), header_checksum(file));
  manifest.extra.set("type", std::string("subspace"));
  std::string weak;
  for (auto i : s.weak_directions) {
    if (!weak.empty()) weak += ',';
    weak += std::to_string(i);
  }
  manifest.extra.set("weak_directions", weak);

  write_file_atomic(path, file);
  write_file_atomic(manifest_path(path), manifest.to_string());
}

BiasSubspace read_subspace(const std::filesystem::path& path) {
  const auto f = load(path, kSubspaceMagic);
  const auto& h = f.header;
  check_payload(f, (std::size_t{h.d} * h.n + h.n) * dtype_size(h.dtype), path);

  Reader r(f.payload());
  BiasSubspace s;
  s.basis = read_values(r, h.d, h.n, h.dtype);
  s.singular_values = read_values(r, h.n, 1, h.dtype);
  if (const auto manifest = load_manifest(path)) cross_check(*manifest, h, path);

  const double cutoff = h.n > 0 ? 1e-12 * s.singular_values(0) : 0.0;
  for (std::uint32_t i = 0; i < h.n; ++i) {
    if (s.singular_values(i) <= cutoff) s.weak_directions.push_back(i);
  }
  return s;
}

void write_policy(const SelectionPolicy& p, const std::filesystem::path& path) {
  p.validate();
  Writer payload;
  for (double v : {p.neutral.location, p.neutral.scale, p.neutral.shape, p.explicit_.location,
                   p.explicit_.scale, p.explicit_.shape, p.delta_c, p.lambda_c}) {
    payload.f64(v);
  }
  payload.u32(checked_u32(p.score_dim, "score_dim"));
  payload.u32(p.lambda_side == LambdaSide::kWeightsExplicit ? 0u : 1u);
  const auto file = encode(kPolicyMagic, Dtype::kF64, 8, 1, payload.bytes());
  auto manifest = make_manifest(Dtype::kF64, 8, 1, header_checksum(file));
  manifest.extra.set("type", std::string("policy"));
  manifest.extra.set("delta_c", p.delta_c);
  manifest.extra.set("lambda_c", p.lambda_c);
  manifest.extra.set("score_dim", static_cast<std::uint64_t>(p.score_dim));
  manifest.extra.set("lambda_side", std::string(to_string(p.lambda_side)));

  write_file_atomic(path, file);
  write_file_atomic(manifest_path(path), manifest.to_string());
}

SelectionPolicy read_policy(const std::filesystem::path& path) {
  const auto f = load(path, kPolicyMagic);
  const auto& h = f.header;
  if (h.dtype != Dtype::kF64 || h.d != 8 || h.n != 1) {
    fail(ErrorCode::kFormat, path.string() + ": policy header must be f64 with d=8, n=1");
  }
  check_payload(f, 8 * 8 + 8, path);

  Reader r(f.payload());
  SelectionPolicy p;
  p.neutral.location = r.f64();
  p.neutral.scale = r.f64();
  p.neutral.shape = r.f64();
  p.explicit_.location = r.f64();
  p.explicit_.scale = r.f64();
  p.explicit_.shape = r.f64();
  p.delta_c = r.f64();
  p.lambda_c = r.f64();
  p.score_dim = r.u32();
  const auto side = r.u32();
  if (side > 1) fail(ErrorCode::kFormat, path.string() + ": unknown lambda side code");
  p.lambda_side = side == 0 ? LambdaSide::kWeightsExplicit : LambdaSide::kWeightsNeutral;
  if (const auto manifest = load_manifest(path)) cross_check(*manifest, h, path);
  p.validate();
  return p;
}

void write_scores(std::span<const double> scores, const std::filesystem::path& path) {
  std::string out;
  for (double s : scores) {
    out += format_double(s);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<double> read_scores(const std::filesystem::path& path) {
  std::vector<double> out;
  for (const auto& line : split(read_text_file(path), '\n')) {
    if (trim(line).empty()) continue;
    out.push_back(parse_double(line));
  }
  return out;
}

}  // namespace biopro::io
