#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fjs/nn/params.hpp"

namespace fjs::nn {

namespace {

constexpr char kMagic[6] = {'E', 'M', 'A', 'R', 'M', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return value;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const NamedParams<float>& params) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, value] : params) {
    if (name.size() > 0xFFFF) throw CheckpointError("tensor name too long: " + name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, 2);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(value.cols()));
    for (Eigen::Index i = 0; i < value.size(); ++i) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(value.data()[i]));
  }
  return out;
}

NamedParams<float> decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw CheckpointError("bad checkpoint magic");
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>();
  NamedParams<float> params;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = in.get<std::uint16_t>();
    std::string name = in.take(len);
    const auto rank = in.get<std::uint8_t>();
    std::vector<std::uint64_t> dims(rank);
    for (auto& d : dims) d = in.get<std::uint64_t>();
    // Rank 0/1 tensors load as a single row.
    const std::uint64_t rows = rank >= 2 ? dims[0] : 1;
    std::uint64_t cols = rank == 0 ? 1 : dims.back();
    for (std::size_t i = 1; i + 1 < dims.size(); ++i) cols *= dims[i];
    Matrix<float> value(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = std::bit_cast<float>(in.get<std::uint32_t>());
    params.add(name, std::move(value));
  }
  if (!in.done()) throw CheckpointError("trailing bytes after " + std::to_string(count) + " tensors");
  return params;
}

void write_checkpoint(const NamedParams<float>& params, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

NamedParams<float> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return decode_checkpoint(buf.str());
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace fjs::nn
