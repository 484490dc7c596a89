#include "hma/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace hma {

namespace {

constexpr char kMagic[4] = {'H', 'M', 'A', '1'};
constexpr std::uint32_t kMaxNameLen = 4096;
constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::ofstream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ofstream& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

bool get_bytes(std::ifstream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
  char b[4];
  if (!get_bytes(in, b, 4)) {
    throw ParseError("checkpoint " + path + ": truncated payload");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  }
  return v;
}

std::uint64_t get_u64(std::ifstream& in, const std::string& path) {
  char b[8];
  if (!get_bytes(in, b, 8)) {
    throw ParseError("checkpoint " + path + ": truncated payload");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ParseError("checkpoint " + path + ": cannot open for writing");
  }
  out.write(kMagic, 4);
  for (const ModelParams::Entry& e : params.entries()) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(out, static_cast<std::uint32_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.shape()) put_u64(out, d);
    for (double v : e.tensor.values()) put_f64(out, v);
  }
  out.flush();
  if (!out) {
    throw ParseError("checkpoint " + path + ": write failed");
  }
}

void load_checkpoint(const std::string& path, ModelParams& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("checkpoint " + path + ": cannot open");
  }
  char magic[4];
  if (!get_bytes(in, magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("checkpoint " + path + ": unknown magic");
  }
  std::vector<bool> seen(params.size(), false);
  while (true) {
    in.peek();
    if (in.eof()) break;
    const std::uint32_t name_len = get_u32(in, path);
    if (name_len == 0 || name_len > kMaxNameLen) {
      throw ParseError("checkpoint " + path + ": implausible name length " +
                       std::to_string(name_len));
    }
    std::string name(name_len, '\0');
    if (!get_bytes(in, name.data(), name_len)) {
      throw ParseError("checkpoint " + path + ": truncated payload");
    }
    const std::uint32_t rank = get_u32(in, path);
    if (rank == 0 || rank > kMaxRank) {
      throw ParseError("checkpoint " + path + ": implausible rank " +
                       std::to_string(rank) + " for " + name);
    }
    Shape shape(rank);
    std::size_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint64_t d = get_u64(in, path);
      if (d == 0) {
        throw ParseError("checkpoint " + path + ": zero dimension in " + name);
      }
      shape[i] = static_cast<std::size_t>(d);
      numel *= shape[i];
    }
    if (!params.contains(name)) {
      throw ParseError("checkpoint " + path + ": unexpected parameter " +
                       name);
    }
    Tensor& dst = params.get(name);
    if (dst.shape() != shape) {
      throw ParseError("checkpoint " + path + ": shape mismatch for " + name +
                       ": file has " + shape_str(shape) + ", model expects " +
                       shape_str(dst.shape()));
    }
    auto values = dst.mutable_values();
    for (std::size_t i = 0; i < numel; ++i) {
      const std::uint64_t bits = get_u64(in, path);
      double d;
      std::memcpy(&d, &bits, 8);
      values[i] = d;
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params.entries()[i].name == name) {
        if (seen[i]) {
          throw ParseError("checkpoint " + path + ": duplicate parameter " +
                           name);
        }
        seen[i] = true;
      }
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!seen[i]) {
      throw ParseError("checkpoint " + path + ": missing parameter " +
                       params.entries()[i].name);
    }
  }
}

}  // namespace hma
