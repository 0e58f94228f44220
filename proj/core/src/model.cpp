#include "twmlp/model.hpp"

#include <cstring>
#include <sstream>

#include "binary_io.hpp"

namespace twmlp {

std::vector<int> default_fusion_layers(int L) {
  std::vector<int> out;
  for (int l = 1; l <= L; l += 2) out.push_back(l);
  return out;
}

void validate_config(const ModelConfig& config) {
  if (config.T < 2) throw ConfigError("config: T must be >= 2");
  if (config.K < 0) throw ConfigError("config: K must be >= 0");
  if (config.L < 1) throw ConfigError("config: L must be >= 1");
  if (config.D < 2) throw ConfigError("config: D must be >= 2");
  if (config.d_in != kFeatureDim) {
    throw ConfigError("config: d_in must be " + std::to_string(kFeatureDim));
  }
  if (config.d_out != kOutputDim) {
    throw ConfigError("config: d_out must be " + std::to_string(kOutputDim));
  }
  int prev = 0;
  for (int l : config.fusion_layers) {
    if (l < 1 || l > config.L) {
      throw ConfigError("config: fusion layer " + std::to_string(l) + " outside 1.." +
                        std::to_string(config.L));
    }
    if (l <= prev) throw ConfigError("config: fusion_layers must be strictly ascending");
    prev = l;
  }
  if (config.temporal_map == TemporalMap::kBanded && config.band_width < 0) {
    throw ConfigError("config: band_width must be >= 0");
  }
}

namespace {

constexpr std::uint64_t kLnOpsPerElem = 5;
constexpr std::uint64_t kSiluOpsPerElem = 4;

LayerCost ln_cost(const std::string& name, std::uint64_t rows, std::uint64_t cols) {
  return {name, kLnOpsPerElem * rows * cols, 2 * cols, 4 * rows * cols};
}

}  // namespace

CostReport count_cost(const ModelConfig& config) {
  validate_config(config);
  CostReport r;
  const auto T = static_cast<std::uint64_t>(config.T);
  const auto K = static_cast<std::uint64_t>(config.K);
  const auto D = static_cast<std::uint64_t>(config.D);
  const auto din = static_cast<std::uint64_t>(config.d_in);
  const auto dout = static_cast<std::uint64_t>(config.d_out);

  auto add = [&r](LayerCost c) { r.layers.push_back(std::move(c)); };

  add({"input_proj", T * din * D, D * din, 4 * T * D});

  for (int k = 1; k <= config.K; ++k) {
    const std::string name = "window" + std::to_string(k);
    // linear(+bias), layer_norm, silu, mean-pool to one token
    const std::uint64_t flops = T * din * D + T * D + kLnOpsPerElem * T * D +
                                kSiluOpsPerElem * T * D + T * D;
    add({name, flops, D * din + D + 2 * D, 4 * (T * D + D)});
  }

  for (int l = 1; l <= config.L; ++l) {
    const std::string b = "block" + std::to_string(l);
    add(ln_cost(b + ".ln1", T, D));
    add({b + ".time_mix", T * T * D + T * D, T * T, 4 * T * D});  // matmul + residual add
    add(ln_cost(b + ".ln2", T, D));
    add({b + ".fc",
         T * D * D + T * D + kSiluOpsPerElem * T * D + T * D,  // matmul + bias + silu + residual
         D * D + D, 4 * T * D});
    if (config.K > 0) {
      const auto& fl = config.fusion_layers;
      if (std::find(fl.begin(), fl.end(), l) != fl.end()) {
        if (config.fusion_mode == FusionMode::kToken) {
          add({b + ".fuse", T * (T + K) * D, T * (T + K), 4 * T * D});
        } else {
          add({b + ".fuse", T * (K + 1) * D * D, (K + 1) * D * D, 4 * T * D});
        }
      }
    }
  }

  add({"output_proj", T * D * dout, dout * D, 4 * T * dout});
  add({"uncertainty", 0, 2, 0});

  for (const auto& l : r.layers) {
    r.total_flops += l.flops;
    r.total_params += l.params;
    r.total_activation_bytes += l.activation_bytes;
  }
  return r;
}

std::string format_cost_report(const CostReport& report) {
  std::ostringstream os;
  os << "layer                      flops       params  activation_bytes\n";
  for (const auto& l : report.layers) {
    os << l.name;
    for (std::size_t i = l.name.size(); i < 22; ++i) os << ' ';
    os << ' ' << l.flops << ' ' << l.params << ' ' << l.activation_bytes << '\n';
  }
  os << "total flops " << report.total_flops << " ("
     << static_cast<double>(report.total_flops) / 1e9 << " GFLOPs)\n";
  os << "total params " << report.total_params << " ("
     << static_cast<double>(report.total_params) / 1e6 << " M)\n";
  os << "total activation bytes " << report.total_activation_bytes << '\n';
  return os.str();
}

// ---- checkpoint I/O ---------------------------------------------------------

namespace {

constexpr char kMagic[6] = {'T', 'W', 'M', 'L', 'P', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

using io::Reader;
using io::Writer;

void write_config(Writer& w, const ModelConfig& c) {
  w.u32(static_cast<std::uint32_t>(c.T));
  w.u32(static_cast<std::uint32_t>(c.K));
  w.u32(static_cast<std::uint32_t>(c.L));
  w.u32(static_cast<std::uint32_t>(c.D));
  w.u32(static_cast<std::uint32_t>(c.d_in));
  w.u32(static_cast<std::uint32_t>(c.d_out));
  w.u32(static_cast<std::uint32_t>(c.temporal_map));
  w.u32(static_cast<std::uint32_t>(c.band_width));
  w.u32(static_cast<std::uint32_t>(c.fusion_mode));
  w.u32(static_cast<std::uint32_t>(c.fusion_layers.size()));
  for (int l : c.fusion_layers) w.u32(static_cast<std::uint32_t>(l));
}

ModelConfig read_config(Reader& r) {
  ModelConfig c;
  c.T = static_cast<int>(r.u32());
  c.K = static_cast<int>(r.u32());
  c.L = static_cast<int>(r.u32());
  c.D = static_cast<int>(r.u32());
  c.d_in = static_cast<int>(r.u32());
  c.d_out = static_cast<int>(r.u32());
  const std::uint32_t tm = r.u32();
  if (tm > 2) throw FormatError("checkpoint: unknown temporal_map tag", r.offset() - 4);
  c.temporal_map = static_cast<TemporalMap>(tm);
  c.band_width = static_cast<int>(r.u32());
  const std::uint32_t fm = r.u32();
  if (fm > 1) throw FormatError("checkpoint: unknown fusion_mode tag", r.offset() - 4);
  c.fusion_mode = static_cast<FusionMode>(fm);
  const std::uint32_t nf = r.u32();
  c.fusion_layers.clear();
  for (std::uint32_t i = 0; i < nf; ++i) c.fusion_layers.push_back(static_cast<int>(r.u32()));
  return c;
}

}  // namespace

void save_checkpoint(const ModelParams<float>& params, const std::string& path) {
  Writer w(path);
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kFormatVersion);
  write_config(w, params.config);
  w.u32(static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& t : params.tensors) {
    w.u32(2);  // rank
    w.u32(static_cast<std::uint32_t>(t.rows));
    w.u32(static_cast<std::uint32_t>(t.cols));
    for (float v : t.data) w.f32(v);
  }
  w.close();
}

ModelParams<float> load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[6];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("checkpoint: bad magic in " + path, 0);
  }
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version),
                      sizeof(kMagic));
  }
  ModelConfig config = read_config(r);
  ModelParams<float> params;
  try {
    params = make_params<float>(config);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: invalid config: ") + e.what(), sizeof(kMagic) + 4);
  }
  const std::uint32_t count = r.u32();
  if (count != params.tensors.size()) {
    throw FormatError("checkpoint: tensor count " + std::to_string(count) + " != expected " +
                          std::to_string(params.tensors.size()),
                      r.offset() - 4);
  }
  for (auto& t : params.tensors) {
    const std::size_t header_at = r.offset();
    const std::uint32_t rank = r.u32();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rank != 2 || rows != static_cast<std::uint32_t>(t.rows) ||
        cols != static_cast<std::uint32_t>(t.cols)) {
      throw FormatError("checkpoint: tensor '" + t.name + "' has shape " + std::to_string(rows) +
                            "x" + std::to_string(cols) + ", expected " + std::to_string(t.rows) +
                            "x" + std::to_string(t.cols),
                        header_at);
    }
    for (auto& v : t.data) {
      v = r.f32();
      if (!std::isfinite(v)) {
        throw FormatError("checkpoint: non-finite value in tensor '" + t.name + "'",
                          r.offset() - 4);
      }
    }
  }
  if (!r.at_eof()) {
    throw FormatError("checkpoint: trailing bytes after last tensor", r.offset());
  }
  return params;
}

}  // namespace twmlp
