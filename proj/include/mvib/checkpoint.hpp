#pragma once

// Binary checkpoint, little-endian throughout:
//
//   "MVIBCKPT" | u32 version | str model_spec_json | str rng_state | str history_json
//   | u64 n_arrays | n_arrays x (str name | u32 rank | u64 dims[rank] | f64 data[])
//   | "MVIB-END"
//
// where str = u64 byte length followed by the bytes.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvib/model.hpp"
#include "mvib/train.hpp"

namespace mvib {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::array<char, 8> kCheckpointMagic{'M', 'V', 'I', 'B', 'C', 'K', 'P', 'T'};
inline constexpr std::array<char, 8> kCheckpointTrailer{'M', 'V', 'I', 'B', '-', 'E', 'N', 'D'};

struct Checkpoint {
  Model model;
  std::string rng_state;
  std::vector<EpochRecord> history;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = nlohmann::json{{"epoch", r.epoch},
                     {"loss_total", r.loss_total},
                     {"loss_ce", r.loss_ce},
                     {"loss_vsd", r.loss_vsd},
                     {"loss_consistency", r.loss_consistency},
                     {"acc_train", r.acc_train},
                     {"acc_val", r.acc_val},
                     {"acc_loo", r.acc_loo}};
}

inline void from_json(const nlohmann::json& j, EpochRecord& r) {
  j.at("epoch").get_to(r.epoch);
  j.at("loss_total").get_to(r.loss_total);
  j.at("loss_ce").get_to(r.loss_ce);
  j.at("loss_vsd").get_to(r.loss_vsd);
  j.at("loss_consistency").get_to(r.loss_consistency);
  j.at("acc_train").get_to(r.acc_train);
  j.at("acc_val").get_to(r.acc_val);
  j.at("acc_loo").get_to(r.acc_loo);
}

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

inline void put_string(std::string& out, const std::string& s) {
  put_le<std::uint64_t>(out, s.size());
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string get_raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw FormatError("checkpoint: truncated file");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  std::string out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_string(out, nlohmann::json(ck.model.spec).dump());
  detail::put_string(out, ck.rng_state);
  detail::put_string(out, nlohmann::json(ck.history).dump());
  detail::put_le<std::uint64_t>(out, ck.model.params.size());
  for (std::size_t k = 0; k < ck.model.params.size(); ++k) {
    const Tensor& t = ck.model.params[k];
    detail::put_string(out, ck.model.names[k]);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) detail::put_le<std::uint64_t>(out, d);
    for (double x : t.data()) detail::put_le<double>(out, x);
  }
  out.append(kCheckpointTrailer.begin(), kCheckpointTrailer.end());
  return out;
}

/// Parses a whole checkpoint or throws FormatError; never returns a partial model.
inline Checkpoint deserialize_checkpoint(const std::string& bytes) {
  detail::Reader in(bytes);
  if (in.get_raw(kCheckpointMagic.size()) != std::string(kCheckpointMagic.begin(), kCheckpointMagic.end())) {
    throw FormatError("checkpoint: bad magic");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  try {
    ck.model.spec = nlohmann::json::parse(in.get_string()).get<ModelSpec>();
    ck.rng_state = in.get_string();
    ck.history = nlohmann::json::parse(in.get_string()).get<std::vector<EpochRecord>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad metadata: ") + e.what());
  }
  const auto n_arrays = in.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < n_arrays; ++k) {
    std::string name = in.get_string();
    const auto rank = in.get<std::uint32_t>();
    if (rank > 8) throw FormatError("checkpoint: implausible rank for '" + name + "'");
    std::vector<std::size_t> shape(rank);
    std::uint64_t count = 1;
    for (auto& d : shape) {
      d = in.get<std::uint64_t>();
      if (d != 0 && count > bytes.size() / d) throw FormatError("checkpoint: truncated file");
      count *= d;
    }
    if (count > bytes.size() / sizeof(double)) throw FormatError("checkpoint: truncated file");
    std::vector<double> data(count);
    for (auto& x : data) x = in.get<double>();
    ck.model.names.push_back(std::move(name));
    ck.model.params.emplace_back(std::move(shape), std::move(data));
  }
  if (in.get_raw(kCheckpointTrailer.size()) != std::string(kCheckpointTrailer.begin(), kCheckpointTrailer.end())) {
    throw FormatError("checkpoint: missing trailer");
  }
  if (!in.at_end()) throw FormatError("checkpoint: trailing bytes");

  const Model reference = make_model(ck.model.spec, 0);
  if (reference.names != ck.model.names) throw FormatError("checkpoint: parameter names do not match the model spec");
  for (std::size_t k = 0; k < reference.params.size(); ++k) {
    if (reference.params[k].shape() != ck.model.params[k].shape()) {
      throw FormatError("checkpoint: shape mismatch for '" + ck.model.names[k] + "'");
    }
  }
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  const std::string bytes = serialize_checkpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace mvib
