#include "lesionpipe/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lesionpipe {

namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms unsupported");

void put_u16(std::ostream& out, uint16_t v) {
  const uint8_t b[2] = {uint8_t(v & 0xff), uint8_t(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& out, uint32_t v) {
  const uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16),
                        uint8_t(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  put_u32(out, uint32_t(v));
  put_u32(out, uint32_t(v >> 32));
}

void put_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

uint16_t get_u16(std::istream& in) {
  uint8_t b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return uint16_t(b[0]) | uint16_t(b[1]) << 8;
}

uint32_t get_u32(std::istream& in) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

uint64_t get_u64(std::istream& in) {
  const uint64_t lo = get_u32(in);
  return lo | uint64_t(get_u32(in)) << 32;
}

float get_f32(std::istream& in) {
  const uint32_t bits = get_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void put_f32_span(std::ostream& out, const float* data, size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), std::streamsize(n * 4));
  } else {
    for (size_t i = 0; i < n; ++i) put_f32(out, data[i]);
  }
}

void get_f32_span(std::istream& in, float* data, size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data), std::streamsize(n * 4));
  } else {
    for (size_t i = 0; i < n; ++i) data[i] = get_f32(in);
  }
}

}  // namespace

void write_feature_stack(const std::filesystem::path& path, const FeatureStack& fs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write("LPFS", 4);
  put_u16(out, 1);
  put_u16(out, uint16_t(fs.channels));
  put_u32(out, uint32_t(fs.width));
  put_u32(out, uint32_t(fs.height));
  put_f32_span(out, fs.data.data(), fs.data.size());
  if (!out) throw DataError("short write to " + path.string());
}

FeatureStack read_feature_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LPFS", 4) != 0)
    throw DataError(path.string() + ": not a feature-stack file");
  const uint16_t version = get_u16(in);
  if (version != 1)
    throw DataError(path.string() + ": unsupported version " +
                    std::to_string(version));
  const int channels = get_u16(in);
  const int width = int(get_u32(in));
  const int height = int(get_u32(in));
  if (channels < 1 || width < 1 || height < 1)
    throw DataError(path.string() + ": corrupt header");
  FeatureStack fs(channels, width, height);
  get_f32_span(in, fs.data.data(), fs.data.size());
  if (!in) throw DataError(path.string() + ": truncated payload");
  return fs;
}

namespace {

void write_config(std::ostream& out, const UNetConfig& cfg) {
  put_u16(out, uint16_t(cfg.levels));
  put_u16(out, uint16_t(cfg.base_filters));
  put_u16(out, uint16_t(cfg.conv_size));
  put_u16(out, uint16_t(cfg.pool_size));
  put_u16(out, uint16_t(cfg.in_channels));
  put_u16(out, uint16_t(cfg.out_classes));
}

UNetConfig read_config(std::istream& in) {
  UNetConfig cfg;
  cfg.levels = get_u16(in);
  cfg.base_filters = get_u16(in);
  cfg.conv_size = get_u16(in);
  cfg.pool_size = get_u16(in);
  cfg.in_channels = get_u16(in);
  cfg.out_classes = get_u16(in);
  return cfg;
}

struct NamedBuf {
  std::string name;
  Buf<float>* buf;
};

std::vector<NamedBuf> collect(UNetParams<float>& p, bool learnable_only) {
  std::vector<NamedBuf> out;
  visit_params(p, [&](const std::string& name, Buf<float>& b, ParamKind k) {
    if (!learnable_only || k == ParamKind::Learnable) out.push_back({name, &b});
  });
  return out;
}

}  // namespace

void save_weights(const std::filesystem::path& path, const UNetParams<float>& params,
                  const AdamState* adam) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write("LPWT", 4);
  put_u16(out, 1);
  write_config(out, params.cfg);

  auto bufs = collect(const_cast<UNetParams<float>&>(params), false);
  put_u32(out, uint32_t(bufs.size()));
  for (const auto& nb : bufs) {
    put_u16(out, uint16_t(nb.name.size()));
    out.write(nb.name.data(), std::streamsize(nb.name.size()));
    out.put(char(nb.buf->dims.size()));
    for (uint32_t d : nb.buf->dims) put_u32(out, d);
    put_f32_span(out, nb.buf->data(), nb.buf->size());
  }

  if (!adam) {
    out.put(0);
  } else {
    out.put(1);
    put_u64(out, uint64_t(adam->step));
    auto ms = collect(const_cast<UNetParams<float>&>(adam->m), true);
    auto vs = collect(const_cast<UNetParams<float>&>(adam->v), true);
    for (const auto& nb : ms) put_f32_span(out, nb.buf->data(), nb.buf->size());
    for (const auto& nb : vs) put_f32_span(out, nb.buf->data(), nb.buf->size());
  }
  if (!out) throw DataError("short write to " + path.string());
}

LoadedWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LPWT", 4) != 0)
    throw DataError(path.string() + ": not a weight file");
  const uint16_t version = get_u16(in);
  if (version != 1)
    throw DataError(path.string() + ": unsupported version " +
                    std::to_string(version));
  const UNetConfig cfg = read_config(in);
  cfg.validate();

  LoadedWeights lw{init_params<float>(cfg, 0), std::nullopt};
  auto bufs = collect(lw.params, false);
  const uint32_t count = get_u32(in);
  if (count != bufs.size())
    throw DataError(path.string() + ": parameter count mismatch");

  for (auto& nb : bufs) {
    const uint16_t name_len = get_u16(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (name != nb.name)
      throw DataError(path.string() + ": unexpected parameter '" + name +
                      "' (wanted '" + nb.name + "')");
    const int rank = in.get();
    if (rank != int(nb.buf->dims.size()))
      throw DataError(path.string() + ": rank mismatch for " + name);
    for (uint32_t expect : nb.buf->dims)
      if (get_u32(in) != expect)
        throw DataError(path.string() + ": shape mismatch for " + name);
    get_f32_span(in, nb.buf->data(), nb.buf->size());
  }

  const int flag = in.get();
  if (flag == 1) {
    AdamState adam{zeros_like(lw.params), zeros_like(lw.params), 0};
    adam.step = int64_t(get_u64(in));
    for (auto& nb : collect(adam.m, true))
      get_f32_span(in, nb.buf->data(), nb.buf->size());
    for (auto& nb : collect(adam.v, true))
      get_f32_span(in, nb.buf->data(), nb.buf->size());
    lw.params.step = adam.step;
    lw.adam = std::move(adam);
  } else if (flag != 0) {
    throw DataError(path.string() + ": corrupt trailer");
  }
  if (!in) throw DataError(path.string() + ": truncated payload");
  return lw;
}

}  // namespace lesionpipe
