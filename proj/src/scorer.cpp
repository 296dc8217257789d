#include "preauction/scorer.hpp"

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace preauction {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajor>;
using ConstBias    = Eigen::Map<const Eigen::VectorXd>;
using GradWeights  = Eigen::Map<RowMajor>;
using GradBias     = Eigen::Map<Eigen::VectorXd>;

struct LayerShape
{
  std::size_t in;
  std::size_t out;
  std::size_t offset;  // start of the weight matrix in the flat vector
  bool        activated;
};

std::vector<LayerShape> layer_shapes(const ScorerArchitecture &arch, std::size_t &encoder_layers)
{
  std::vector<LayerShape> shapes;
  std::size_t             offset = 0;
  std::size_t             in     = arch.input_dim;
  for (std::size_t w : arch.encoder_widths) {
    shapes.push_back({in, w, offset, true});
    offset += w * in + w;
    in = w;
  }
  encoder_layers = shapes.size();
  in             = arch.input_dim + arch.pooled_dim();
  for (std::size_t w : arch.head_widths) {
    shapes.push_back({in, w, offset, true});
    offset += w * in + w;
    in = w;
  }
  shapes.push_back({in, 1, offset, false});
  return shapes;
}

bool is_tanh(const ScorerArchitecture &arch)
{
  return arch.activation == "tanh";
}

void activate(Eigen::MatrixXd &z, bool tanh_act)
{
  if (tanh_act) {
    z = z.array().tanh();
  } else {
    z = z.array().max(0.0);
  }
}

/// Activations of every layer for one forward pass; a[0] is the input.
struct ForwardTrace
{
  std::vector<Eigen::MatrixXd> encoder_out;  // post-activation per encoder layer
  Eigen::MatrixXd              head_in;
  std::vector<Eigen::MatrixXd> head_out;     // post-activation per head hidden layer
  std::vector<Eigen::Index>    max_rows;     // argmax row per pooled max column
  Eigen::VectorXd              scores;
};

ForwardTrace run_forward(const ScorerParams &params, const FeatureMatrix &x)
{
  const auto &arch = params.architecture;
  if (static_cast<std::size_t>(x.cols()) != arch.input_dim) {
    throw std::invalid_argument("scorer_forward: feature dimension " + std::to_string(x.cols()) +
                                " does not match architecture input_dim " +
                                std::to_string(arch.input_dim));
  }
  if (x.rows() == 0) {
    throw std::invalid_argument("scorer_forward: empty ad set");
  }
  std::size_t n_enc  = 0;
  const auto  shapes = layer_shapes(arch, n_enc);
  const bool  tanh_act = is_tanh(arch);
  const double *w    = params.weights.data();
  const auto   n     = x.rows();

  ForwardTrace t;
  Eigen::MatrixXd cur = x;
  for (std::size_t l = 0; l < n_enc; ++l) {
    const auto &s = shapes[l];
    ConstWeights W(w + s.offset, s.out, s.in);
    ConstBias    b(w + s.offset + s.out * s.in, s.out);
    Eigen::MatrixXd z = cur * W.transpose();
    z.rowwise() += b.transpose();
    activate(z, tanh_act);
    t.encoder_out.push_back(z);
    cur = std::move(z);
  }

  const auto    h = cur.cols();
  Eigen::RowVectorXd pooled(static_cast<Eigen::Index>(arch.pooled_dim()));
  Eigen::Index  col = 0;
  for (const auto &agg : arch.aggregations) {
    if (agg == "mean") {
      pooled.segment(col, h) = cur.colwise().mean();
    } else {
      for (Eigen::Index c = 0; c < h; ++c) {
        Eigen::Index r = 0;
        pooled(col + c) = cur.col(c).maxCoeff(&r);
        t.max_rows.push_back(r);
      }
    }
    col += h;
  }

  t.head_in.resize(n, static_cast<Eigen::Index>(arch.input_dim + arch.pooled_dim()));
  t.head_in.leftCols(x.cols()) = x;
  t.head_in.rightCols(pooled.size()) = pooled.replicate(n, 1);

  cur = t.head_in;
  for (std::size_t l = n_enc; l < shapes.size(); ++l) {
    const auto &s = shapes[l];
    ConstWeights W(w + s.offset, s.out, s.in);
    ConstBias    b(w + s.offset + s.out * s.in, s.out);
    Eigen::MatrixXd z = cur * W.transpose();
    z.rowwise() += b.transpose();
    if (s.activated) {
      activate(z, tanh_act);
      t.head_out.push_back(z);
    }
    cur = std::move(z);
  }
  t.scores = cur.col(0);
  return t;
}

/// dL/dz from dL/da for the post-activation values `a`.
Eigen::MatrixXd activation_backward(const Eigen::MatrixXd &grad_a, const Eigen::MatrixXd &a,
                                    bool tanh_act)
{
  if (tanh_act) {
    return grad_a.array() * (1.0 - a.array().square());
  }
  return grad_a.array() * (a.array() > 0.0).cast<double>();
}

}  // namespace

std::string to_string(ScorerKind kind)
{
  switch (kind) {
  case ScorerKind::pas:
    return "pas";
  case ScorerKind::reg:
    return "reg";
  case ScorerKind::regctr:
    return "regctr";
  }
  return "pas";
}

ScorerKind scorer_kind_from_string(const std::string &name)
{
  if (name == "pas") {
    return ScorerKind::pas;
  }
  if (name == "reg") {
    return ScorerKind::reg;
  }
  if (name == "regctr") {
    return ScorerKind::regctr;
  }
  throw std::invalid_argument("unknown scorer kind '" + name + "'");
}

std::size_t ScorerArchitecture::pooled_dim() const
{
  return encoder_widths.empty() ? 0 : encoder_widths.back() * aggregations.size();
}

std::size_t ScorerArchitecture::weight_count() const
{
  std::size_t n_enc  = 0;
  const auto  shapes = layer_shapes(*this, n_enc);
  const auto &last   = shapes.back();
  return last.offset + last.out * last.in + last.out;
}

void ScorerArchitecture::validate() const
{
  if (input_dim == 0) {
    throw std::invalid_argument("scorer architecture: input_dim must be positive");
  }
  if (encoder_widths.empty()) {
    throw std::invalid_argument("scorer architecture: need at least one encoder layer");
  }
  for (std::size_t w : encoder_widths) {
    if (w == 0) {
      throw std::invalid_argument("scorer architecture: zero encoder width");
    }
  }
  for (std::size_t w : head_widths) {
    if (w == 0) {
      throw std::invalid_argument("scorer architecture: zero head width");
    }
  }
  if (activation != "relu" && activation != "tanh") {
    throw std::invalid_argument("scorer architecture: unknown activation '" + activation + "'");
  }
  if (aggregations.empty()) {
    throw std::invalid_argument("scorer architecture: need at least one aggregation");
  }
  for (const auto &a : aggregations) {
    if (a != "mean" && a != "max") {
      throw std::invalid_argument("scorer architecture: unknown aggregation '" + a + "'");
    }
  }
}

ScorerParams ScorerParams::initialize(const ScorerArchitecture &arch, ScorerKind kind,
                                      double init_scale, Rng &rng)
{
  arch.validate();
  ScorerParams p;
  p.kind         = kind;
  p.architecture = arch;
  p.weights.assign(arch.weight_count(), 0.0);
  std::size_t n_enc = 0;
  for (const auto &s : layer_shapes(arch, n_enc)) {
    const double bound = init_scale / std::sqrt(static_cast<double>(s.in));
    for (std::size_t i = 0; i < s.out * s.in + s.out; ++i) {
      p.weights[s.offset + i] = rng.uniform(-bound, bound);
    }
  }
  return p;
}

ScorerParams ScorerParams::zeros(const ScorerArchitecture &arch, ScorerKind kind)
{
  arch.validate();
  ScorerParams p;
  p.kind         = kind;
  p.architecture = arch;
  p.weights.assign(arch.weight_count(), 0.0);
  return p;
}

void ScorerParams::validate() const
{
  architecture.validate();
  if (weights.size() != architecture.weight_count()) {
    throw std::invalid_argument("scorer params: weight count " + std::to_string(weights.size()) +
                                " does not match architecture (" +
                                std::to_string(architecture.weight_count()) + ")");
  }
  if (!std::isfinite(output_scale)) {
    throw std::invalid_argument("scorer params: non-finite output scale");
  }
}

Eigen::VectorXd scorer_forward(const ScorerParams &params, const FeatureMatrix &features)
{
  if (params.weights.size() != params.architecture.weight_count()) {
    throw std::invalid_argument("scorer_forward: weight count does not match architecture");
  }
  return run_forward(params, features).scores * params.output_scale;
}

Eigen::VectorXd scorer_backward(const ScorerParams &params, const FeatureMatrix &features,
                                const std::function<Eigen::VectorXd(const Eigen::VectorXd &)> &upstream,
                                std::span<double> grad)
{
  const auto &arch = params.architecture;
  if (grad.size() != params.weights.size() || grad.size() != arch.weight_count()) {
    throw std::invalid_argument("scorer_backward: gradient buffer has the wrong size");
  }
  const ForwardTrace t = run_forward(params, features);
  const Eigen::VectorXd g_out = upstream(t.scores);

  std::size_t   n_enc    = 0;
  const auto    shapes   = layer_shapes(arch, n_enc);
  const bool    tanh_act = is_tanh(arch);
  const double *w        = params.weights.data();
  double       *gw       = grad.data();
  const auto    n        = features.rows();

  // Head, from the output layer down to the head input.
  Eigen::MatrixXd delta = g_out;  // dL/dz of the current layer, N x out
  for (std::size_t l = shapes.size(); l-- > n_enc;) {
    const auto &s         = shapes[l];
    const std::size_t hid = l - n_enc;  // index into head_out of this layer's output
    if (s.activated) {
      delta = activation_backward(delta, t.head_out[hid], tanh_act);
    }
    const Eigen::MatrixXd &input = hid == 0 ? t.head_in : t.head_out[hid - 1];
    GradWeights(gw + s.offset, s.out, s.in) += delta.transpose() * input;
    GradBias(gw + s.offset + s.out * s.in, s.out) += delta.colwise().sum().transpose();
    ConstWeights W(w + s.offset, s.out, s.in);
    delta = delta * W;  // dL/d(input), N x in
  }

  // Pooled part of the head input, summed over the broadcast rows.
  const auto         pooled = static_cast<Eigen::Index>(arch.pooled_dim());
  Eigen::RowVectorXd g_pool = delta.rightCols(pooled).colwise().sum();

  const Eigen::MatrixXd &enc_last = t.encoder_out.back();
  const auto             h        = enc_last.cols();
  Eigen::MatrixXd        g_enc    = Eigen::MatrixXd::Zero(n, h);
  Eigen::Index           col      = 0;
  std::size_t            max_idx  = 0;
  for (const auto &agg : arch.aggregations) {
    if (agg == "mean") {
      g_enc.rowwise() += g_pool.segment(col, h) / static_cast<double>(n);
    } else {
      for (Eigen::Index c = 0; c < h; ++c) {
        g_enc(t.max_rows[max_idx++], c) += g_pool(col + c);
      }
    }
    col += h;
  }

  delta = std::move(g_enc);
  for (std::size_t l = n_enc; l-- > 0;) {
    const auto &s = shapes[l];
    delta         = activation_backward(delta, t.encoder_out[l], tanh_act);
    const Eigen::MatrixXd &input = l == 0 ? features : t.encoder_out[l - 1];
    GradWeights(gw + s.offset, s.out, s.in) += delta.transpose() * input;
    GradBias(gw + s.offset + s.out * s.in, s.out) += delta.colwise().sum().transpose();
    if (l > 0) {
      ConstWeights W(w + s.offset, s.out, s.in);
      delta = delta * W;
    }
  }
  return t.scores;
}

void save_scorer(const ScorerParams &params, const std::filesystem::path &path)
{
  params.validate();
  nlohmann::ordered_json header;
  header["format"]       = params.version;
  header["kind"]         = to_string(params.kind);
  header["input_dim"]    = params.architecture.input_dim;
  header["encoder"]      = params.architecture.encoder_widths;
  header["head"]         = params.architecture.head_widths;
  header["activation"]   = params.architecture.activation;
  header["aggregations"] = params.architecture.aggregations;
  header["bid_input"]    = params.architecture.bid_input;
  header["output_scale"] = params.output_scale;
  header["n_weights"]    = params.weights.size();

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write model file " + path.string());
  }
  out << header.dump() << '\n';
  for (double v : params.weights) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int b = 0; b < 8; ++b) {
      bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    out.write(bytes, 8);
  }
  if (!out) {
    throw std::runtime_error("failed writing model file " + path.string());
  }
}

ScorerParams load_scorer(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open model file " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("model file " + path.string() + ": missing header");
  }
  ScorerParams p;
  try {
    const auto header = nlohmann::json::parse(line);
    p.version         = header.at("format").get<std::string>();
    if (p.version != ScorerParams::kFormatTag) {
      throw std::runtime_error("unsupported format tag '" + p.version + "'");
    }
    p.kind                         = scorer_kind_from_string(header.at("kind").get<std::string>());
    p.architecture.input_dim       = header.at("input_dim").get<std::size_t>();
    p.architecture.encoder_widths  = header.at("encoder").get<std::vector<std::size_t>>();
    p.architecture.head_widths     = header.at("head").get<std::vector<std::size_t>>();
    p.architecture.activation      = header.at("activation").get<std::string>();
    p.architecture.aggregations    = header.at("aggregations").get<std::vector<std::string>>();
    p.architecture.bid_input       = header.at("bid_input").get<bool>();
    p.output_scale                 = header.at("output_scale").get<double>();
    const auto n_weights           = header.at("n_weights").get<std::size_t>();
    p.architecture.validate();
    if (n_weights != p.architecture.weight_count()) {
      throw std::runtime_error("weight count does not match architecture");
    }
    p.weights.resize(n_weights);
  } catch (const nlohmann::json::exception &e) {
    throw std::runtime_error("model file " + path.string() + ": bad header: " + e.what());
  }
  for (double &v : p.weights) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char *>(bytes), 8)) {
      throw std::runtime_error("model file " + path.string() + ": truncated weights");
    }
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    }
    v = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("model file " + path.string() + ": trailing bytes");
  }
  return p;
}

}  // namespace preauction
