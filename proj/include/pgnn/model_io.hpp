#pragma once

#include <zlib.h>

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pgnn/dataset.hpp"
#include "pgnn/error.hpp"
#include "pgnn/mlp.hpp"
#include "pgnn/physics.hpp"

namespace pgnn {

// Model container, one file:
//
//   PGNN-MODEL <version>\n
//   <metadata JSON, one line>\n
//   crc32 <8 lowercase hex digits>\n
//   <binary payload>
//
// The CRC-32 covers the metadata line (with its newline) and the payload.
// Payload, all little-endian IEEE-754 doubles:
//   per layer: weights (out x in, row-major), biases (out)
//   if masked: per layer ceil(out*in/8) bytes, bit k of the row-major mask
//              in byte k/8 at position k%8, 1 = kept
//   feature scaler min[], max[]; target scaler min[], max[]
inline constexpr int kModelFormatVersion = 1;

struct ModelMeta {
  std::string label;
  std::uint64_t seed = 0;
  std::string objective = "mse";  // mse | composite
  double lambda = 0.0;
  double dt_minutes = 1.0;
  std::string scheme = "none";    // none | standard | physics-guided
  std::string kind = "none";      // none | neuron | weight
  double ratio = 0.0;
  double alpha = 0.0;

  friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

struct ModelBundle {
  Mlp model;
  MinMaxScaler features;
  MinMaxScaler targets;
  TargetLayout layout;
  ModelMeta meta;

  friend bool operator==(const ModelBundle&, const ModelBundle&) = default;
};

namespace detail {

inline void put_double(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class PayloadReader {
 public:
  explicit PayloadReader(std::string_view data) : data_(data) {}

  double get_double() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }
  unsigned char get_byte() {
    need(1);
    return static_cast<unsigned char>(data_[pos_++]);
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) throw DataError("model payload is shorter than its metadata says");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::string_view a, std::string_view b) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(a.data()), static_cast<uInt>(a.size()));
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(b.data()), static_cast<uInt>(b.size()));
  return static_cast<std::uint32_t>(crc);
}

inline nlohmann::json layout_json(const TargetLayout& l) {
  return {{"dBH_dt", l.dbh_dt}, {"B_N", l.b_n},   {"B_E", l.b_e},        {"dPhi_dt", l.dphi_dt},
          {"V", l.v},           {"Bz_imf", l.bz_imf}, {"theta", l.theta}};
}

inline TargetLayout layout_from_json(const nlohmann::json& j) {
  TargetLayout l;
  l.dbh_dt = j.at("dBH_dt").get<std::size_t>();
  l.b_n = j.at("B_N").get<std::size_t>();
  l.b_e = j.at("B_E").get<std::size_t>();
  l.dphi_dt = j.at("dPhi_dt").get<std::size_t>();
  l.v = j.at("V").get<std::size_t>();
  l.bz_imf = j.at("Bz_imf").get<std::size_t>();
  l.theta = j.at("theta").get<std::size_t>();
  return l;
}

}  // namespace detail

inline std::string serialize_model(const ModelBundle& b) {
  b.model.validate();
  std::string payload;
  for (std::size_t l = 0; l < b.model.layers.size(); ++l) {
    for (double v : b.model.weights[l].values()) detail::put_double(payload, v);
    for (double v : b.model.biases[l]) detail::put_double(payload, v);
  }
  if (b.model.has_masks()) {
    for (const auto& m : b.model.masks) {
      auto mv = m.values();
      std::string bytes((mv.size() + 7) / 8, '\0');
      for (std::size_t k = 0; k < mv.size(); ++k)
        if (mv[k] != 0.0) bytes[k / 8] = static_cast<char>(bytes[k / 8] | (1 << (k % 8)));
      payload += bytes;
    }
  }
  for (const auto* s : {&b.features, &b.targets}) {
    for (double v : s->min) detail::put_double(payload, v);
    for (double v : s->max) detail::put_double(payload, v);
  }

  nlohmann::json meta;
  meta["dims"] = b.model.dims();
  std::vector<std::string> acts;
  for (const auto& l : b.model.layers) acts.emplace_back(to_string(l.activation));
  meta["activations"] = acts;
  meta["masked"] = b.model.has_masks();
  meta["feature_width"] = b.features.width();
  meta["target_width"] = b.targets.width();
  meta["layout"] = detail::layout_json(b.layout);
  meta["provenance"] = {{"label", b.meta.label},         {"seed", b.meta.seed},
                        {"objective", b.meta.objective}, {"lambda", b.meta.lambda},
                        {"dt_minutes", b.meta.dt_minutes}, {"scheme", b.meta.scheme},
                        {"kind", b.meta.kind},           {"ratio", b.meta.ratio},
                        {"alpha", b.meta.alpha}};
  meta["payload_bytes"] = payload.size();
  const std::string meta_line = meta.dump() + "\n";

  char crc[16];
  std::snprintf(crc, sizeof crc, "%08x", detail::crc32_of(meta_line, payload));
  return "PGNN-MODEL " + std::to_string(kModelFormatVersion) + "\n" + meta_line + "crc32 " + crc +
         "\n" + payload;
}

inline ModelBundle deserialize_model(std::string_view file) {
  auto next_line = [&](std::string_view& rest) -> std::string_view {
    auto nl = rest.find('\n');
    if (nl == std::string_view::npos) throw DataError("model file is truncated");
    auto line = rest.substr(0, nl);
    rest.remove_prefix(nl + 1);
    return line;
  };
  std::string_view rest = file;
  auto magic = next_line(rest);
  if (magic.rfind("PGNN-MODEL ", 0) != 0) throw DataError("not a model file");
  const std::string version(magic.substr(11));
  if (version != std::to_string(kModelFormatVersion))
    throw DataError("unsupported model file version '" + version + "'");
  const std::string_view meta_body = next_line(rest);
  const std::string meta_line = std::string(meta_body) + "\n";
  auto crc_line = next_line(rest);
  if (crc_line.rfind("crc32 ", 0) != 0 || crc_line.size() != 14) throw DataError("missing checksum line");
  const std::string_view payload = rest;

  std::uint32_t stored = 0;
  try {
    stored = static_cast<std::uint32_t>(std::stoul(std::string(crc_line.substr(6)), nullptr, 16));
  } catch (const std::exception&) {
    throw DataError("malformed checksum line");
  }
  if (stored != detail::crc32_of(meta_line, payload)) throw DataError("model file checksum mismatch");

  ModelBundle b;
  try {
    const auto meta = nlohmann::json::parse(meta_body);
    if (meta.at("payload_bytes").get<std::size_t>() != payload.size())
      throw DataError("model payload length does not match metadata");
    const auto dims = meta.at("dims").get<std::vector<std::size_t>>();
    const auto acts = meta.at("activations").get<std::vector<std::string>>();
    if (dims.size() < 2 || acts.size() + 1 != dims.size())
      throw DataError("model architecture is inconsistent");
    const bool masked = meta.at("masked").get<bool>();
    const auto fw = meta.at("feature_width").get<std::size_t>();
    const auto tw = meta.at("target_width").get<std::size_t>();
    if (fw != dims.front() || tw != dims.back())
      throw DataError("scaler widths do not match the architecture");
    b.layout = detail::layout_from_json(meta.at("layout"));
    const auto& p = meta.at("provenance");
    b.meta.label = p.at("label").get<std::string>();
    b.meta.seed = p.at("seed").get<std::uint64_t>();
    b.meta.objective = p.at("objective").get<std::string>();
    b.meta.lambda = p.at("lambda").get<double>();
    b.meta.dt_minutes = p.at("dt_minutes").get<double>();
    b.meta.scheme = p.at("scheme").get<std::string>();
    b.meta.kind = p.at("kind").get<std::string>();
    b.meta.ratio = p.at("ratio").get<double>();
    b.meta.alpha = p.at("alpha").get<double>();

    detail::PayloadReader rd(payload);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      Activation a;
      if (acts[l] == "relu")
        a = Activation::ReLU;
      else if (acts[l] == "identity")
        a = Activation::Identity;
      else
        throw DataError("unknown activation '" + acts[l] + "'");
      b.model.layers.push_back({dims[l], dims[l + 1], a});
      Matrix w(dims[l + 1], dims[l]);
      for (double& v : w.values()) v = rd.get_double();
      std::vector<double> bias(dims[l + 1]);
      for (double& v : bias) v = rd.get_double();
      b.model.weights.push_back(std::move(w));
      b.model.biases.push_back(std::move(bias));
    }
    if (masked) {
      for (const auto& l : b.model.layers) {
        Matrix m(l.output_dim, l.input_dim);
        auto mv = m.values();
        std::vector<unsigned char> bytes((mv.size() + 7) / 8);
        for (auto& by : bytes) by = rd.get_byte();
        for (std::size_t k = 0; k < mv.size(); ++k) mv[k] = (bytes[k / 8] >> (k % 8)) & 1 ? 1.0 : 0.0;
        b.model.masks.push_back(std::move(m));
      }
    }
    for (auto* s : {&b.features, &b.targets}) {
      const std::size_t w = s == &b.features ? fw : tw;
      s->min.resize(w);
      s->max.resize(w);
      for (double& v : s->min) v = rd.get_double();
      for (double& v : s->max) v = rd.get_double();
    }
    if (!rd.done()) throw DataError("model payload has trailing bytes");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model metadata is malformed: ") + e.what());
  }
  try {
    b.model.validate();
    b.layout.validate();
  } catch (const Error& e) {
    throw DataError(std::string("model file is inconsistent: ") + e.what());
  }
  for (std::size_t l = 0; l < b.model.masks.size(); ++l) {
    auto w = b.model.weights[l].values();
    auto m = b.model.masks[l].values();
    for (std::size_t k = 0; k < w.size(); ++k)
      if (m[k] == 0.0 && w[k] != 0.0) throw DataError("masked weight stored as nonzero");
  }
  return b;
}

// Written to a sibling temporary and renamed into place.
inline void save_model(const ModelBundle& b, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(b);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move model into place at " + path.string() + ": " + ec.message());
}

inline ModelBundle load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open model " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return deserialize_model(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace pgnn
