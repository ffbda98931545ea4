#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "intact/types.hpp"

namespace intact {

// Named n-dimensional numeric array from a .npy member; values are widened
// to double on load.
struct NpyArray {
  std::vector<Index> shape;
  bool fortran_order = false;
  std::vector<double> data;  // in the file's element order

  Index ndim() const { return static_cast<Index>(shape.size()); }
  Index size() const {
    Index s = 1;
    for (Index d : shape) s *= d;
    return s;
  }
  // multi-index access honoring the stored element order
  double element(const std::vector<Index>& idx) const;
};

// Reads every member of an .npz archive (stored or deflated members;
// little-endian f4/f8/i4/i8 elements).
std::map<std::string, NpyArray> read_npz(const std::string& path);

// Writes arrays as uncompressed .npy members ('<f8', C order).
void write_npz(const std::string& path,
               const std::vector<std::pair<std::string, NpyArray>>& arrays);

}  // namespace intact
