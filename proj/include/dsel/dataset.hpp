#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "dsel/types.hpp"

namespace dsel {

struct Dataset {
    std::vector<SampleRecord> samples;
    std::size_t embedding_dim = 0;
};

// Delimited text format, one record per line:
//   header:  id,ifd,loss0,e_1,...,e_d
//   row:     <int>,<double>,<double>,<double>...
// Doubles are written in shortest round-trip decimal form, so a
// write/read cycle reproduces every value exactly.
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);

} // namespace dsel
