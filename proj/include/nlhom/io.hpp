#pragma once

#include <string>
#include <vector>

#include "nlhom/field.hpp"

namespace nlhom {

// "NLH1" field dump: magic, u32 LE dimension, d x u32 grid dims, f64 LE
// origin[d], f64 spacing, row-major f64 values, row-major u8 mask.
void write_nlh1(const std::string& path, const GridField& f);
GridField read_nlh1(const std::string& path);

struct FieldStats {
  int dim = 0;
  IVec dims{0, 0, 0};
  Vec origin{0, 0, 0};
  double spacing = 0.0;
  Index nodes = 0;
  Index masked = 0;
  double min = 0.0, max = 0.0, mean = 0.0;  // over masked nodes
};

FieldStats field_stats(const GridField& f);

// CSV with fixed 17-significant-digit floats, UTF-8, LF line endings.
class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& cells);
  static std::string format(double v);

private:
  void* file_;
};

void write_text_file(const std::string& path, const std::string& content);

}  // namespace nlhom
