#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sdgan/tensor.hpp"

namespace sdgan::io {

// little-endian scalar helpers shared by the container and checkpoint formats
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);

void write_string(std::ostream& os, const std::string& s);
std::string read_string(std::istream& is);

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

// single-file container: magic, version, then named shape-tagged blocks
void save_named_tensors(const std::string& path,
                        const std::vector<std::pair<std::string, Tensor>>& items);
std::map<std::string, Tensor> load_named_tensors(const std::string& path);

}  // namespace sdgan::io
