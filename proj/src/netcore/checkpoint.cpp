#include <bit>
#include <cstring>
#include <fstream>

#include "unrealdc/netcore.hpp"

namespace unrealdc::netcore {

namespace {

constexpr char kMagic[8] = {'U', 'D', 'C', 'K', 'P', 'T', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v & 0xFFFFFFFFULL));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw CheckpointError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return lo | (hi << 32);
}

std::string get_string(std::istream& in, std::uint32_t max_len) {
  const std::uint32_t n = get_u32(in);
  if (n > max_len) throw CheckpointError("checkpoint string field too long");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw CheckpointError("checkpoint truncated");
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Parameters<float>& params) {
  const auto& layout = layout_for(params.config);
  if (params.values.size() != layout.total) throw CheckpointError("parameters/layout mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path.string());

  out.write(kMagic, sizeof kMagic);
  put_u64(out, params.config.fingerprint());
  const std::string text = params.config.canonical();
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_u32(out, static_cast<std::uint32_t>(kBlockCount));
  for (const auto& info : layout.blocks) {
    put_u32(out, static_cast<std::uint32_t>(info.name.size()));
    out.write(info.name.data(), static_cast<std::streamsize>(info.name.size()));
    put_u32(out, static_cast<std::uint32_t>(info.shape.size()));
    for (const int d : info.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < info.size; ++i) {
      put_u32(out, std::bit_cast<std::uint32_t>(params.values[info.offset + i]));
    }
  }
  out.flush();
  if (!out) throw CheckpointError("write failed: " + path.string());
}

Parameters<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointError("not a checkpoint file: " + path.string());
  }
  const std::uint64_t fingerprint = get_u64(in);
  NetworkConfig config;
  try {
    config = parse_canonical(get_string(in, 1U << 16));
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("bad embedded config: ") + e.what());
  }
  if (config.fingerprint() != fingerprint) {
    throw CheckpointError("checkpoint fingerprint does not match its embedded config");
  }
  const auto& layout = layout_for(config);
  if (get_u32(in) != kBlockCount) throw CheckpointError("unexpected block count");

  Parameters<float> params(config);
  for (const auto& info : layout.blocks) {
    if (get_string(in, 256) != info.name) throw CheckpointError("unexpected block '" + info.name + "'");
    const std::uint32_t ndim = get_u32(in);
    if (ndim != info.shape.size()) throw CheckpointError("rank mismatch in " + info.name);
    for (const int d : info.shape) {
      if (get_u32(in) != static_cast<std::uint32_t>(d)) throw CheckpointError("shape mismatch in " + info.name);
    }
    for (std::size_t i = 0; i < info.size; ++i) {
      params.values[info.offset + i] = std::bit_cast<float>(get_u32(in));
    }
  }
  return params;
}

Parameters<float> load_checkpoint(const std::filesystem::path& path, const NetworkConfig& expected) {
  auto params = load_checkpoint(path);
  if (params.config.fingerprint() != expected.fingerprint()) {
    throw CheckpointError("config fingerprint mismatch loading " + path.string());
  }
  return params;
}

}  // namespace unrealdc::netcore
