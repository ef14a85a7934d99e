// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "common.hpp"

namespace acss::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail(ErrorCode::kIo, "checkpoint is truncated");
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_config(const NetConfig& cfg) {
  std::ostringstream os;
  os << "kind=" << (cfg.head == CountHead::kNone ? "separation" : "counting") << '\n'
     << "num_bins=" << cfg.num_bins << '\n'
     << "d_model=" << cfg.d_model << '\n'
     << "num_heads=" << cfg.num_heads << '\n'
     << "num_blocks=" << cfg.num_blocks << '\n'
     << "rnn_cells=" << cfg.rnn_cells << '\n'
     << "ffn_mult=" << cfg.ffn_mult << '\n'
     << "cross_channel=" << (cfg.cross_channel ? 1 : 0) << '\n'
     << "head=" << to_string(cfg.head) << '\n'
     << "seed=" << cfg.seed << '\n';
  return os.str();
}

NetConfig decode_config(const std::string& header) {
  std::map<std::string, std::string> kv;
  std::istringstream is(header);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorCode::kIo, "checkpoint header lacks '" + key + "'");
    return it->second;
  };
  auto integer = [&](const std::string& key) {
    try {
      return static_cast<Eigen::Index>(std::stoll(field(key)));
    } catch (const std::logic_error&) {
      fail(ErrorCode::kIo, "checkpoint header field '" + key + "' is not an integer");
    }
  };
  NetConfig cfg;
  cfg.num_bins = integer("num_bins");
  cfg.d_model = integer("d_model");
  cfg.num_heads = integer("num_heads");
  cfg.num_blocks = integer("num_blocks");
  cfg.rnn_cells = integer("rnn_cells");
  cfg.ffn_mult = integer("ffn_mult");
  cfg.cross_channel = integer("cross_channel") != 0;
  cfg.head = parse_count_head(field("head"));
  cfg.seed = std::stoull(field("seed"));
  return cfg;
}

std::string serialize(const SpatioTemporalNet& net) {
  const auto& p = net.params();
  const std::string header = encode_config(net.config());
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  put<std::uint64_t>(out, p.size());

  std::size_t table = 0;
  for (std::size_t i = 0; i < p.size(); ++i) table += 4 + p.name(i).size() + 4 + 8 * 3;
  std::uint64_t offset = out.size() + table;
  for (std::size_t i = 0; i < p.size(); ++i) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name(i).size()));
    out += p.name(i);
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value(i).rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value(i).cols()));
    put<std::uint64_t>(out, offset);
    offset += 8 * static_cast<std::uint64_t>(p.value(i).size());
  }
  for (std::size_t i = 0; i < p.size(); ++i)
    out.append(reinterpret_cast<const char*>(p.value(i).data()),
               8 * static_cast<std::size_t>(p.value(i).size()));
  return out;
}

SpatioTemporalNet deserialize(const std::string& bytes) {
  Reader r(bytes);
  if (r.str(8) != std::string(kCheckpointMagic, 8))
    fail(ErrorCode::kIo, "not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    fail(ErrorCode::kIo, "unsupported checkpoint version " + std::to_string(version));
  const auto header_len = r.get<std::uint32_t>();
  const NetConfig cfg = decode_config(r.str(header_len));
  const auto n = r.get<std::uint64_t>();
  ModelParameters params;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    std::string name = r.str(name_len);
    const auto ndim = r.get<std::uint32_t>();
    if (ndim != 2) fail(ErrorCode::kIo, "checkpoint tensor '" + name + "' is not 2-D");
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    const auto offset = r.get<std::uint64_t>();
    const std::uint64_t len = rows * cols * 8;
    if (offset + len > bytes.size())
      fail(ErrorCode::kIo, "checkpoint tensor '" + name + "' exceeds the file");
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::memcpy(m.data(), bytes.data() + offset, len);
    params.add(std::move(name), std::move(m));
  }
  return SpatioTemporalNet(cfg, std::move(params));
}

void save_checkpoint(const std::filesystem::path& path, const SpatioTemporalNet& net) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write checkpoint: " + path.string());
  const std::string bytes = serialize(net);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "short write: " + path.string());
}

SpatioTemporalNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open checkpoint: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace acss::nn
