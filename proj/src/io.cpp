#include "nlhom/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>

#include "nlhom/errors.hpp"

namespace nlhom {

namespace {

void put_u32(std::FILE* f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  if (std::fwrite(b, 1, 4, f) != 4) throw IoError("short write");
}

std::uint32_t get_u32(std::FILE* f) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) throw IoError("short read");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::FILE* f, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  if (std::fwrite(b, 1, 8, f) != 8) throw IoError("short write");
}

double get_f64(std::FILE* f) {
  unsigned char b[8];
  if (std::fread(b, 1, 8, f) != 8) throw IoError("short read");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void write_nlh1(const std::string& path, const GridField& f) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open " + path + " for writing");
  try {
    if (std::fwrite("NLH1", 1, 4, fp) != 4) throw IoError("short write");
    put_u32(fp, static_cast<std::uint32_t>(f.region.dim));
    Lattice lat = f.lattice();
    for (int a = 0; a < f.region.dim; ++a) put_u32(fp, static_cast<std::uint32_t>(lat.n[a]));
    for (int a = 0; a < f.region.dim; ++a) put_f64(fp, f.region.origin[a]);
    put_f64(fp, f.region.spacing);
    for (double v : f.values) put_f64(fp, v);
    std::vector<unsigned char> m(f.mask.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = f.mask[i] != 0.0 ? 1 : 0;
    if (!m.empty() && std::fwrite(m.data(), 1, m.size(), fp) != m.size())
      throw IoError("short write");
  } catch (...) {
    std::fclose(fp);
    throw;
  }
  if (std::fclose(fp) != 0) throw IoError("failed to close " + path);
}

GridField read_nlh1(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open " + path);
  GridField f;
  try {
    char magic[4];
    if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, "NLH1", 4) != 0)
      throw IoError(path + " is not an NLH1 dump");
    int d = static_cast<int>(get_u32(fp));
    if (d < 1 || d > 3) throw IoError("NLH1 dimension out of range");
    IVec dims{1, 1, 1};
    for (int a = 0; a < d; ++a) dims[a] = static_cast<Index>(get_u32(fp));
    Vec origin{0, 0, 0};
    for (int a = 0; a < d; ++a) origin[a] = get_f64(fp);
    double spacing = get_f64(fp);
    Vec extent{1, 1, 1};
    for (int a = 0; a < d; ++a) extent[a] = static_cast<double>(dims[a]) * spacing;
    f = GridField(BoxRegion(d, origin, extent, spacing));
    for (double& v : f.values) v = get_f64(fp);
    std::vector<unsigned char> m(f.mask.size());
    if (!m.empty() && std::fread(m.data(), 1, m.size(), fp) != m.size())
      throw IoError("short read");
    for (std::size_t i = 0; i < m.size(); ++i) f.mask[i] = m[i] != 0 ? 1.0 : 0.0;
  } catch (...) {
    std::fclose(fp);
    throw;
  }
  std::fclose(fp);
  return f;
}

FieldStats field_stats(const GridField& f) {
  FieldStats s;
  s.dim = f.region.dim;
  Lattice lat = f.lattice();
  s.dims = lat.n;
  s.origin = f.region.origin;
  s.spacing = f.region.spacing;
  s.nodes = lat.size();
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (f.mask[i] == 0.0) continue;
    ++s.masked;
    s.min = s.min < f.values[i] ? s.min : f.values[i];
    s.max = s.max > f.values[i] ? s.max : f.values[i];
    sum += f.values[i];
  }
  if (s.masked > 0) {
    s.mean = sum / static_cast<double>(s.masked);
  } else {
    s.min = s.max = s.mean = 0.0;
  }
  return s;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open " + path + " for writing");
  file_ = fp;
  std::string line;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) line += ", ";
    line += header[i];
  }
  line += '\n';
  if (std::fwrite(line.data(), 1, line.size(), fp) != line.size())
    throw IoError("short write to " + path);
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(static_cast<std::FILE*>(file_));
}

std::string CsvWriter::format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvWriter::row(const std::vector<double>& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ", ";
    line += format(values[i]);
  }
  line += '\n';
  auto* fp = static_cast<std::FILE*>(file_);
  if (std::fwrite(line.data(), 1, line.size(), fp) != line.size()) throw IoError("short write");
}

void CsvWriter::row_mixed(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ", ";
    line += cells[i];
  }
  line += '\n';
  auto* fp = static_cast<std::FILE*>(file_);
  if (std::fwrite(line.data(), 1, line.size(), fp) != line.size()) throw IoError("short write");
}

void write_text_file(const std::string& path, const std::string& content) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open " + path + " for writing");
  bool ok = std::fwrite(content.data(), 1, content.size(), fp) == content.size();
  ok = std::fclose(fp) == 0 && ok;
  if (!ok) throw IoError("failed writing " + path);
}

}  // namespace nlhom
