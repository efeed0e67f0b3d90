#include "svreg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace svreg {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void write_mvf(const std::string& path, const GridSpec& grid, int channels,
               const std::vector<float>& planes) {
  std::string buf;
  buf.reserve(16 + planes.size() * 4);
  buf += "MVF1";
  buf.push_back(static_cast<char>(grid.ndim));
  buf.push_back(static_cast<char>(channels));
  for (int a = 0; a < grid.ndim; ++a)
    put_u32(buf, static_cast<std::uint32_t>(grid.dims[a]));
  for (int a = 0; a < grid.ndim; ++a)
    put_f32(buf, static_cast<float>(grid.spacing[a]));
  for (float v : planes) put_f32(buf, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("write_field: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail("write_field: write failed for " + path);
}

}  // namespace

void write_field(const std::string& path, const ScalarField& f) {
  std::vector<float> planes(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i)
    planes[i] = static_cast<float>(f.values[i]);
  write_mvf(path, f.grid, 1, planes);
}

void write_field(const std::string& path, const VectorField& f) {
  const int D = f.grid.ndim;
  const std::size_t n = f.grid.voxels();
  std::vector<float> planes(n * static_cast<std::size_t>(D));
  for (int c = 0; c < D; ++c)
    for (std::size_t i = 0; i < n; ++i)
      planes[static_cast<std::size_t>(c) * n + i] =
          static_cast<float>(f.values[i * D + c]);
  write_mvf(path, f.grid, D, planes);
}

void write_field(const std::string& path, const LabelField& f) {
  std::vector<float> planes(f.labels.size());
  for (std::size_t i = 0; i < f.labels.size(); ++i)
    planes[i] = static_cast<float>(f.labels[i]);
  write_mvf(path, f.grid, 1, planes);
}

FieldFile read_field_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("read_field_file: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 6 || buf.compare(0, 4, "MVF1") != 0)
    fail("read_field_file: bad magic in " + path);
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const int ndim = p[4];
  const int channels = p[5];
  if (ndim < 2 || ndim > 3 || channels < 1 || channels > 3)
    fail("read_field_file: bad header in " + path);
  std::size_t off = 6;
  if (buf.size() < off + 8 * static_cast<std::size_t>(ndim))
    fail("read_field_file: truncated header in " + path);
  std::vector<int> dims(ndim);
  std::vector<double> spacing(ndim);
  for (int a = 0; a < ndim; ++a) {
    dims[a] = static_cast<int>(get_u32(p + off));
    off += 4;
  }
  for (int a = 0; a < ndim; ++a) {
    spacing[a] = static_cast<double>(get_f32(p + off));
    off += 4;
  }
  FieldFile f;
  f.grid = GridSpec(dims, spacing);
  f.channels = channels;
  const std::size_t count = f.grid.voxels() * static_cast<std::size_t>(channels);
  if (buf.size() != off + count * 4)
    fail("read_field_file: payload length mismatch in " + path);
  f.planes.resize(count);
  for (std::size_t i = 0; i < count; ++i) f.planes[i] = get_f32(p + off + i * 4);
  return f;
}

ScalarField read_scalar_field(const std::string& path) {
  FieldFile f = read_field_file(path);
  check(f.channels == 1, "read_scalar_field: expected one channel");
  ScalarField out(f.grid);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = static_cast<double>(f.planes[i]);
  return out;
}

VectorField read_vector_field(const std::string& path) {
  FieldFile f = read_field_file(path);
  check(f.channels == f.grid.ndim,
        "read_vector_field: channel count must equal ndim");
  VectorField out(f.grid);
  const std::size_t n = f.grid.voxels();
  for (int c = 0; c < f.channels; ++c)
    for (std::size_t i = 0; i < n; ++i)
      out.values[i * f.channels + c] =
          static_cast<double>(f.planes[static_cast<std::size_t>(c) * n + i]);
  return out;
}

LabelField read_label_field(const std::string& path) {
  FieldFile f = read_field_file(path);
  check(f.channels == 1, "read_label_field: expected one channel");
  LabelField out(f.grid);
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    const float v = f.planes[i];
    check(v >= 0.0f && v == std::floor(v),
          "read_label_field: labels must be non-negative integers");
    out.labels[i] = static_cast<std::int32_t>(v);
  }
  return out;
}

void write_pgm(const std::string& path, const std::vector<double>& values,
               int rows, int cols) {
  check(static_cast<std::size_t>(rows) * cols == values.size(),
        "write_pgm: shape mismatch");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::string buf = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) +
                    "\n255\n";
  buf.reserve(buf.size() + values.size());
  for (double v : values) {
    const int g = static_cast<int>(std::lround((v - lo) * scale));
    buf.push_back(static_cast<char>(std::clamp(g, 0, 255)));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("write_pgm: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));

  std::ofstream side(path + ".txt", std::ios::trunc);
  if (!side) fail("write_pgm: cannot open sidecar for " + path);
  side << "min " << format_double(lo) << "\nmax " << format_double(hi) << "\n";
}

Slice extract_slice(const ScalarField& f, int axis, int index) {
  const GridSpec& g = f.grid;
  if (g.ndim == 2) {
    Slice s;
    s.rows = g.dims[0];
    s.cols = g.dims[1];
    s.values = f.values;
    return s;
  }
  check(axis >= 0 && axis < 3, "extract_slice: bad axis");
  check(index >= 0 && index < g.dims[axis], "extract_slice: index out of range");
  const int a0 = axis == 0 ? 1 : 0;
  const int a1 = axis == 2 ? 1 : 2;
  auto strides = g.strides();
  Slice s;
  s.rows = g.dims[a0];
  s.cols = g.dims[a1];
  s.values.resize(static_cast<std::size_t>(s.rows) * s.cols);
  for (int i = 0; i < s.rows; ++i)
    for (int j = 0; j < s.cols; ++j) {
      const std::size_t idx = static_cast<std::size_t>(index) * strides[axis] +
                              static_cast<std::size_t>(i) * strides[a0] +
                              static_cast<std::size_t>(j) * strides[a1];
      s.values[static_cast<std::size_t>(i) * s.cols + j] = f.values[idx];
    }
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
  impl_->out.open(path, std::ios::trunc);
  if (!impl_->out) fail("CsvWriter: cannot open " + path);
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::header(const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << names[i];
  }
  impl_->out << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << format_double(values[i]);
  }
  impl_->out << '\n';
}

void CsvWriter::raw_row(const std::string& line) { impl_->out << line << '\n'; }

}  // namespace svreg
