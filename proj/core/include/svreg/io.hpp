#pragma once

#include <string>
#include <vector>

#include "svreg/field.hpp"

namespace svreg {

// MVF1 field container: magic "MVF1", u8 ndim, u8 channels, per-axis u32
// dims, per-axis f32 spacing, then channels * prod(dims) little-endian f32
// values, channel-major, each plane row-major with the last axis fastest.
// Round-trips are bit-exact (values are stored as f32).

void write_field(const std::string& path, const ScalarField& f);
void write_field(const std::string& path, const VectorField& f);
void write_field(const std::string& path, const LabelField& f);

struct FieldFile {
  GridSpec grid;
  int channels = 0;
  std::vector<float> planes;  // channel-major
};

FieldFile read_field_file(const std::string& path);
ScalarField read_scalar_field(const std::string& path);
VectorField read_vector_field(const std::string& path);
LabelField read_label_field(const std::string& path);

/// 8-bit binary PGM of a 2D array (min-max normalised); writes `path` plus a
/// `path.txt` sidecar with the min/max used for the scaling.
void write_pgm(const std::string& path, const std::vector<double>& values,
               int rows, int cols);

/// Extract a 2D slice: the field itself for 2D fields, or the plane at
/// `index` along `axis` for 3D fields.
struct Slice {
  std::vector<double> values;
  int rows = 0;
  int cols = 0;
};
Slice extract_slice(const ScalarField& f, int axis, int index);

/// Minimal CSV writer: header row, '.' decimal separator, LF line endings,
/// shortest round-trip float formatting.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  void header(const std::vector<std::string>& names);
  void row(const std::vector<double>& values);
  void raw_row(const std::string& line);

 private:
  struct Impl;
  Impl* impl_;
};

std::string format_double(double v);

}  // namespace svreg
