#include "ausm/weights.hpp"

#include <cmath>
#include <json.hpp>

#include "ausm/error.hpp"
#include "ausm/random.hpp"

namespace ausm {

void ModelDims::validate() const {
  if (D == 0 || S == 0 || L_comp == 0 || L_dec == 0 || N_det == 0 || N_id == 0 || K == 0 || P == 0) {
    throw ConfigError("model dimensions must all be >= 1");
  }
}

namespace param {
std::string compressor_layer(std::size_t l) { return "compressor.layer" + std::to_string(l); }
std::string history_decoder_layer(std::size_t l) { return "history_decoder.layer" + std::to_string(l); }
std::string pixel_decoder_layer(std::size_t l) { return "pixel_decoder.layer" + std::to_string(l); }
}  // namespace param

namespace {

void add_linear(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t din, std::size_t dout,
                const char* w = "weight", const char* b = "bias") {
  out.push_back({prefix + "." + w, {din, dout}, InitKind::Uniform, din});
  out.push_back({prefix + "." + b, {dout}, InitKind::Uniform, din});
}

void add_norm(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d) {
  out.push_back({prefix + ".gamma", {d}, InitKind::Ones, 1});
  out.push_back({prefix + ".beta", {d}, InitKind::Zeros, 1});
}

void add_attention(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d) {
  add_linear(out, prefix, d, d, "wq", "bq");
  add_linear(out, prefix, d, d, "wk", "bk");
  add_linear(out, prefix, d, d, "wv", "bv");
  add_linear(out, prefix, d, d, "wo", "bo");
}

void add_ffn(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d, std::size_t hidden) {
  add_linear(out, prefix, d, hidden, "w1", "b1");
  add_linear(out, prefix, hidden, d, "w2", "b2");
}

}  // namespace

std::vector<ParamSpec> parameter_specs(const ModelDims& dims) {
  dims.validate();
  const std::size_t D = dims.D, S = dims.S, H = dims.hidden();
  std::vector<ParamSpec> out;

  add_linear(out, "backbone.patch", dims.P * dims.P * 3, D);
  out.push_back({param::kInitialFrame, {D}, InitKind::Uniform, 1});

  for (std::size_t l = 0; l < dims.L_comp; ++l) {
    const std::string p = param::compressor_layer(l);
    add_norm(out, p + ".ssm_norm", D);
    out.push_back({p + ".ssm.A_log", {D, S}, InitKind::Uniform, 1});
    out.push_back({p + ".ssm.W_delta", {D, D}, InitKind::Uniform, D});
    out.push_back({p + ".ssm.b_delta", {D}, InitKind::Uniform, D});
    out.push_back({p + ".ssm.W_B", {D, S}, InitKind::Uniform, D});
    out.push_back({p + ".ssm.W_C", {D, S}, InitKind::Uniform, D});
    out.push_back({p + ".ssm.D_skip", {D}, InitKind::Uniform, 1});
    add_norm(out, p + ".attn_norm", D);
    add_attention(out, p + ".attn", D);
    add_norm(out, p + ".ffn_norm", D);
    add_ffn(out, p + ".ffn", D, H);
  }

  for (std::size_t l = 0; l < dims.L_dec; ++l) {
    const std::string p = param::history_decoder_layer(l);
    add_norm(out, p + ".query_norm", D);
    add_norm(out, p + ".memory_norm", D);
    add_attention(out, p + ".cross_attn", D);
    add_norm(out, p + ".ffn_norm", D);
    add_ffn(out, p + ".ffn", D, H);
  }
  add_norm(out, "history_decoder.out_norm", D);

  out.push_back({param::kDetQueries, {dims.N_det, D}, InitKind::Uniform, 1});
  out.push_back({param::kIdPool, {dims.N_id, D}, InitKind::Uniform, 1});
  add_linear(out, "pixel_decoder.mask_features", D, D);
  for (std::size_t l = 0; l < dims.L_dec; ++l) {
    const std::string p = param::pixel_decoder_layer(l);
    add_norm(out, p + ".query_norm", D);
    add_attention(out, p + ".cross_attn", D);
    add_norm(out, p + ".ffn_norm", D);
    add_ffn(out, p + ".ffn", D, H);
  }
  add_norm(out, "pixel_decoder.out_norm", D);
  add_linear(out, "pixel_decoder.class_head", D, dims.K + 1);
  add_linear(out, "pixel_decoder.mask_embed", D, D);
  return out;
}

WeightBundle::WeightBundle(ModelDims dims, std::uint64_t seed, std::map<std::string, Tensor> tensors)
    : dims_(dims), seed_(seed), tensors_(std::move(tensors)) {}

WeightBundle WeightBundle::initialize(const ModelDims& dims, std::uint64_t seed) {
  std::map<std::string, Tensor> tensors;
  for (const ParamSpec& spec : parameter_specs(dims)) {
    Tensor t(spec.shape);
    switch (spec.init) {
      case InitKind::Ones:
        for (float& v : t.data()) v = 1.0f;
        break;
      case InitKind::Zeros:
        break;
      case InitKind::Uniform: {
        const CounterRng rng(seed, spec.path);
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        for (std::size_t i = 0; i < t.size(); ++i) {
          t[i] = static_cast<float>((2.0 * rng.uniform(i) - 1.0) * bound);
        }
        break;
      }
    }
    tensors.emplace(spec.path, std::move(t));
  }
  return WeightBundle(dims, seed, std::move(tensors));
}

const Tensor& WeightBundle::get(const std::string& path) const {
  const auto it = tensors_.find(path);
  if (it == tensors_.end()) throw ContractError("weight bundle has no parameter '" + path + "'");
  return it->second;
}

void WeightBundle::set(const std::string& path, Tensor value) {
  const auto it = tensors_.find(path);
  if (it == tensors_.end()) throw ContractError("weight bundle has no parameter '" + path + "'");
  if (it->second.shape() != value.shape()) {
    throw DimensionError("parameter '" + path + "' has shape " + shape_str(it->second.shape()) +
                         ", cannot assign " + shape_str(value.shape()));
  }
  it->second = std::move(value);
}

void WeightBundle::validate() const {
  for (const ParamSpec& spec : parameter_specs(dims_)) {
    const auto it = tensors_.find(spec.path);
    if (it == tensors_.end()) throw ContractError("weight bundle is missing '" + spec.path + "'");
    if (it->second.shape() != spec.shape) {
      throw ContractError("parameter '" + spec.path + "' has shape " + shape_str(it->second.shape()) +
                          ", expected " + shape_str(spec.shape));
    }
    if (!it->second.all_finite()) throw ContractError("parameter '" + spec.path + "' has non-finite values");
  }
}

NormParams WeightBundle::norm(const std::string& prefix) const {
  return {&get(prefix + ".gamma"), &get(prefix + ".beta")};
}

AttentionParams WeightBundle::attention(const std::string& prefix) const {
  return {&get(prefix + ".wq"), &get(prefix + ".bq"), &get(prefix + ".wk"), &get(prefix + ".bk"),
          &get(prefix + ".wv"), &get(prefix + ".bv"), &get(prefix + ".wo"), &get(prefix + ".bo")};
}

FeedForwardParams WeightBundle::feed_forward(const std::string& prefix) const {
  return {&get(prefix + ".w1"), &get(prefix + ".b1"), &get(prefix + ".w2"), &get(prefix + ".b2")};
}

Bytes encode_weights(const WeightBundle& weights) {
  const ModelDims& d = weights.dims();
  const nlohmann::json meta = {{"kind", "ausm.weights"}, {"D", d.D},         {"S", d.S},
                               {"L_comp", d.L_comp},     {"L_dec", d.L_dec}, {"N_det", d.N_det},
                               {"N_id", d.N_id},         {"K", d.K},         {"P", d.P},
                               {"ffn_hidden", d.ffn_hidden}, {"seed", weights.seed()}};
  NamedTensors entries(weights.tensors().begin(), weights.tensors().end());
  return encode_atb(entries, meta.dump());
}

WeightBundle decode_weights(std::span<const std::byte> bytes) {
  AtbContents c = decode_atb(bytes);
  const auto meta = nlohmann::json::parse(c.metadata_json);
  if (meta.value("kind", "") != "ausm.weights") throw FormatError("ATB1 file does not hold ausm weights", 12);
  ModelDims d;
  try {
    d.D = meta.at("D");
    d.S = meta.at("S");
    d.L_comp = meta.at("L_comp");
    d.L_dec = meta.at("L_dec");
    d.N_det = meta.at("N_det");
    d.N_id = meta.at("N_id");
    d.K = meta.at("K");
    d.P = meta.at("P");
    d.ffn_hidden = meta.at("ffn_hidden");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weights metadata incomplete: ") + e.what(), 12);
  }
  std::map<std::string, Tensor> tensors;
  for (auto& [name, t] : c.tensors) tensors.emplace(name, std::move(t));
  WeightBundle w(d, meta.value("seed", std::uint64_t{0}), std::move(tensors));
  w.validate();
  return w;
}

}  // namespace ausm
