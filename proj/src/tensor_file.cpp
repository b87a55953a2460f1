#include "mclf/tensor_file.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mclf {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& in, std::size_t& at, int bytes) {
  if (at + static_cast<std::size_t>(bytes) > in.size()) throw ParseError("truncated tensor file", at);
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  at += static_cast<std::size_t>(bytes);
  return v;
}

}  // namespace

std::string encode_tensor(const Tensor& t) {
  std::string out = "MCLT";
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Tensor decode_tensor(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "MCLT") != 0) throw ParseError("missing MCLT magic", 0);
  std::size_t at = 4;
  const auto rank = static_cast<std::size_t>(get_le(bytes, at, 4));
  Shape shape(rank);
  for (auto& d : shape) {
    const std::size_t where = at;
    d = static_cast<std::size_t>(get_le(bytes, at, 4));
    if (d == 0) throw ParseError("zero dimension", where);
  }
  std::vector<double> data(shape_size(shape));
  for (auto& v : data) v = std::bit_cast<double>(get_le(bytes, at, 8));
  if (at != bytes.size()) throw ParseError("trailing bytes after tensor payload", at);
  return Tensor(std::move(shape), std::move(data));
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_tensor(t);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return decode_tensor(std::string(std::istreambuf_iterator<char>(in), {}));
}

}  // namespace mclf
