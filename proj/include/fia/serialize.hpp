#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fia/tensor.hpp"

namespace fia {

// Binary tensor format: magic "FIAT", u32 version, u32 rank, u64 extents,
// then the payload as little-endian IEEE-754 doubles.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

// Archive of named tensors (used for model checkpoints).
void save_tensor_archive(const std::string& path,
                         const std::vector<std::pair<std::string, Tensor>>& entries);
std::vector<std::pair<std::string, Tensor>> load_tensor_archive(const std::string& path);

// CSV helpers. Numbers are printed with %.17g so a value round-trips exactly
// and re-runs produce byte-identical files.
std::string format_double(double x);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void tensor_to_csv(const std::string& path, const Tensor& matrix);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace fia
