#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "afda/tensor.hpp"

namespace afda {

/// Little-endian binary primitives shared by the checkpoint container.
namespace wire {

void write_u8(std::ostream& out, std::uint8_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_string(std::ostream& out, const std::string& s);
void write_tensor(std::ostream& out, const Tensor& t);

std::uint8_t read_u8(std::istream& in);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
std::string read_string(std::istream& in);
Tensor read_tensor(std::istream& in);

}  // namespace wire

inline constexpr char kCheckpointMagic[9] = "AFDACKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace afda
