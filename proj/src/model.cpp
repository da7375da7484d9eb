// Copyright 2026 The causex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "causex/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "causex/error.hpp"
#include "causex/parallel.hpp"

namespace causex {
namespace {

constexpr std::string_view kModule = "model";

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Examples per gradient chunk. Fixed so the summation order of a batch
// does not depend on the number of worker threads.
constexpr size_t kChunk = 16;

std::string conv_name(int width, std::string_view what) {
  return "conv" + std::to_string(width) + "." + std::string(what);
}

VectorXd sigmoid(const VectorXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

struct ConvCache {
  int width = 0;
  MatrixXd windows;  // (width * d) x T
  MatrixXd pre;      // filters x T
  std::vector<Eigen::Index> best;  // argmax over time per filter (cnn only)
};

struct LstmCache {
  MatrixXd inputs;  // in x T
  MatrixXd gates;   // 4h x T, activated (i, f, g, o)
  MatrixXd cells;   // h x (T + 1)
  MatrixXd hidden;  // h x (T + 1)
};

struct DenseCache {
  VectorXd input;  // after dropout
  VectorXd pre;
};

// Per-call workspace. Never shared between calls.
struct Pass {
  Eigen::Index n = 0;
  std::vector<ConvCache> convs;
  LstmCache lstm;
  LstmCache lstm_bwd;
  VectorXd features;
  std::vector<VectorXd> masks;  // dropout masks per dense input, or empty
  std::vector<DenseCache> dense;
};

// ---- convolution -------------------------------------------------------

// Sequences shorter than the filter are right-padded with zero vectors.
void conv_forward(const MatrixXd& x, int width, const MatrixXd& w,
                  const MatrixXd& b, ConvCache& cache) {
  const Eigen::Index d = x.rows();
  const Eigen::Index n = x.cols();
  const Eigen::Index len = std::max<Eigen::Index>(n, width);
  const Eigen::Index steps = len - width + 1;
  MatrixXd padded = MatrixXd::Zero(d, len);
  padded.leftCols(n) = x;
  cache.width = width;
  cache.windows.resize(d * width, steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    cache.windows.col(t) =
        Eigen::Map<const VectorXd>(padded.data() + t * d, d * width);
  }
  cache.pre.noalias() = w * cache.windows;
  cache.pre.colwise() += b.col(0);
}

// Returns d loss / d x given d loss / d pre.
MatrixXd conv_backward(const ConvCache& cache, const MatrixXd& d_pre,
                       const MatrixXd& w, Eigen::Index d, Eigen::Index n,
                       MatrixXd* dw, MatrixXd* db) {
  if (dw != nullptr) dw->noalias() += d_pre * cache.windows.transpose();
  if (db != nullptr) db->col(0) += d_pre.rowwise().sum();
  const MatrixXd d_windows = w.transpose() * d_pre;
  const Eigen::Index len = std::max<Eigen::Index>(n, cache.width);
  MatrixXd d_padded = MatrixXd::Zero(d, len);
  for (Eigen::Index t = 0; t < d_windows.cols(); ++t) {
    Eigen::Map<VectorXd>(d_padded.data() + t * d, d * cache.width) +=
        d_windows.col(t);
  }
  return d_padded.leftCols(n);
}

// ---- LSTM ---------------------------------------------------------------

VectorXd lstm_forward(const MatrixXd& inputs, const MatrixXd& wx,
                      const MatrixXd& wh, const MatrixXd& b, LstmCache& cache) {
  const Eigen::Index h = wh.cols();
  const Eigen::Index steps = inputs.cols();
  cache.inputs = inputs;
  cache.gates.resize(4 * h, steps);
  cache.cells = MatrixXd::Zero(h, steps + 1);
  cache.hidden = MatrixXd::Zero(h, steps + 1);
  MatrixXd zx = wx * inputs;
  zx.colwise() += b.col(0);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const VectorXd z = zx.col(t) + wh * cache.hidden.col(t);
    const VectorXd i = sigmoid(z.segment(0, h));
    const VectorXd f = sigmoid(z.segment(h, h));
    const VectorXd g = z.segment(2 * h, h).array().tanh();
    const VectorXd o = sigmoid(z.segment(3 * h, h));
    cache.gates.col(t) << i, f, g, o;
    cache.cells.col(t + 1) =
        f.cwiseProduct(cache.cells.col(t)) + i.cwiseProduct(g);
    cache.hidden.col(t + 1) =
        o.array() * cache.cells.col(t + 1).array().tanh();
  }
  return cache.hidden.col(steps);
}

// Backpropagates d loss / d h_final; returns d loss / d inputs.
MatrixXd lstm_backward(const LstmCache& cache, const VectorXd& d_final,
                       const MatrixXd& wx, const MatrixXd& wh, MatrixXd* dwx,
                       MatrixXd* dwh, MatrixXd* db) {
  const Eigen::Index h = wh.cols();
  const Eigen::Index steps = cache.inputs.cols();
  MatrixXd dz(4 * h, steps);
  VectorXd dh = d_final;
  VectorXd dc = VectorXd::Zero(h);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto i = cache.gates.col(t).segment(0, h).array();
    const auto f = cache.gates.col(t).segment(h, h).array();
    const auto g = cache.gates.col(t).segment(2 * h, h).array();
    const auto o = cache.gates.col(t).segment(3 * h, h).array();
    const Eigen::ArrayXd tc = cache.cells.col(t + 1).array().tanh();
    const Eigen::ArrayXd c_prev = cache.cells.col(t).array();
    const Eigen::ArrayXd d_o = dh.array() * tc;
    dc.array() += dh.array() * o * (1.0 - tc.square());
    const Eigen::ArrayXd d_i = dc.array() * g;
    const Eigen::ArrayXd d_g = dc.array() * i;
    const Eigen::ArrayXd d_f = dc.array() * c_prev;
    dz.col(t).segment(0, h) = d_i * i * (1.0 - i);
    dz.col(t).segment(h, h) = d_f * f * (1.0 - f);
    dz.col(t).segment(2 * h, h) = d_g * (1.0 - g.square());
    dz.col(t).segment(3 * h, h) = d_o * o * (1.0 - o);
    dh = wh.transpose() * dz.col(t);
    dc = (dc.array() * f).matrix();
  }
  if (dwx != nullptr) dwx->noalias() += dz * cache.inputs.transpose();
  if (dwh != nullptr) dwh->noalias() += dz * cache.hidden.leftCols(steps).transpose();
  if (db != nullptr) db->col(0) += dz.rowwise().sum();
  return wx.transpose() * dz;
}

// ---- encoder + head -----------------------------------------------------

struct GradTarget {
  ParamSet* grads = nullptr;
  MatrixXd* get(std::string_view name) const {
    return grads != nullptr ? &grads->at(name) : nullptr;
  }
};

MatrixXd reverse_columns(const MatrixXd& m) { return m.rowwise().reverse(); }

VectorXd encode_forward(const Model& model, const MatrixXd& x, Pass& pass) {
  const Architecture& arch = model.architecture();
  const ParamSet& p = model.params();
  pass.n = x.cols();
  switch (arch.kind) {
    case ArchKind::kMeanMlp: {
      if (pass.n == 0) return VectorXd::Zero(x.rows());
      return x.rowwise().mean();
    }
    case ArchKind::kCnn: {
      VectorXd out(arch.filters * static_cast<Eigen::Index>(arch.filter_widths.size()));
      pass.convs.resize(arch.filter_widths.size());
      for (size_t k = 0; k < arch.filter_widths.size(); ++k) {
        const int w = arch.filter_widths[k];
        ConvCache& cc = pass.convs[k];
        conv_forward(x, w, p.at(conv_name(w, "weight")), p.at(conv_name(w, "bias")), cc);
        cc.best.resize(arch.filters);
        for (int f = 0; f < arch.filters; ++f) {
          Eigen::Index best = 0;
          const double m = cc.pre.row(f).maxCoeff(&best);
          cc.best[f] = best;
          out(static_cast<Eigen::Index>(k) * arch.filters + f) = std::max(0.0, m);
        }
      }
      return out;
    }
    case ArchKind::kLstm:
      return lstm_forward(x, p.at("lstm.wx"), p.at("lstm.wh"), p.at("lstm.bias"), pass.lstm);
    case ArchKind::kBiLstm: {
      VectorXd out(2 * arch.hidden_size);
      out.head(arch.hidden_size) = lstm_forward(
          x, p.at("lstm_fwd.wx"), p.at("lstm_fwd.wh"), p.at("lstm_fwd.bias"), pass.lstm);
      out.tail(arch.hidden_size) =
          lstm_forward(reverse_columns(x), p.at("lstm_bwd.wx"), p.at("lstm_bwd.wh"),
                       p.at("lstm_bwd.bias"), pass.lstm_bwd);
      return out;
    }
    case ArchKind::kCnnLstm: {
      const int w = arch.filter_widths.front();
      pass.convs.resize(1);
      conv_forward(x, w, p.at(conv_name(w, "weight")), p.at(conv_name(w, "bias")),
                   pass.convs[0]);
      const MatrixXd act = pass.convs[0].pre.cwiseMax(0.0);
      return lstm_forward(act, p.at("lstm.wx"), p.at("lstm.wh"), p.at("lstm.bias"), pass.lstm);
    }
  }
  return {};
}

MatrixXd encode_backward(const Model& model, const Pass& pass, const MatrixXd& x,
                         const VectorXd& d_features, const GradTarget& g) {
  const Architecture& arch = model.architecture();
  const ParamSet& p = model.params();
  const Eigen::Index d = x.rows();
  const Eigen::Index n = pass.n;
  switch (arch.kind) {
    case ArchKind::kMeanMlp: {
      MatrixXd dx(d, n);
      if (n > 0) dx.colwise() = d_features / static_cast<double>(n);
      return dx;
    }
    case ArchKind::kCnn: {
      MatrixXd dx = MatrixXd::Zero(d, n);
      for (size_t k = 0; k < arch.filter_widths.size(); ++k) {
        const int w = arch.filter_widths[k];
        const ConvCache& cc = pass.convs[k];
        MatrixXd d_pre = MatrixXd::Zero(cc.pre.rows(), cc.pre.cols());
        for (int f = 0; f < arch.filters; ++f) {
          const Eigen::Index t = cc.best[f];
          if (cc.pre(f, t) > 0.0) {
            d_pre(f, t) = d_features(static_cast<Eigen::Index>(k) * arch.filters + f);
          }
        }
        dx += conv_backward(cc, d_pre, p.at(conv_name(w, "weight")), d, n,
                            g.get(conv_name(w, "weight")), g.get(conv_name(w, "bias")));
      }
      return dx;
    }
    case ArchKind::kLstm:
      return lstm_backward(pass.lstm, d_features, p.at("lstm.wx"), p.at("lstm.wh"),
                           g.get("lstm.wx"), g.get("lstm.wh"), g.get("lstm.bias"));
    case ArchKind::kBiLstm: {
      const Eigen::Index h = arch.hidden_size;
      MatrixXd dx = lstm_backward(pass.lstm, d_features.head(h), p.at("lstm_fwd.wx"),
                                  p.at("lstm_fwd.wh"), g.get("lstm_fwd.wx"),
                                  g.get("lstm_fwd.wh"), g.get("lstm_fwd.bias"));
      dx += reverse_columns(lstm_backward(
          pass.lstm_bwd, d_features.tail(h), p.at("lstm_bwd.wx"), p.at("lstm_bwd.wh"),
          g.get("lstm_bwd.wx"), g.get("lstm_bwd.wh"), g.get("lstm_bwd.bias")));
      return dx;
    }
    case ArchKind::kCnnLstm: {
      const int w = arch.filter_widths.front();
      const ConvCache& cc = pass.convs[0];
      const MatrixXd d_act =
          lstm_backward(pass.lstm, d_features, p.at("lstm.wx"), p.at("lstm.wh"),
                        g.get("lstm.wx"), g.get("lstm.wh"), g.get("lstm.bias"));
      const MatrixXd d_pre = (cc.pre.array() > 0.0).cast<double>() * d_act.array();
      return conv_backward(cc, d_pre, p.at(conv_name(w, "weight")), d, n,
                           g.get(conv_name(w, "weight")), g.get(conv_name(w, "bias")));
    }
  }
  return {};
}

std::string dense_name(size_t k, size_t hidden_layers, std::string_view what) {
  if (k == hidden_layers) return "output." + std::string(what);
  return "dense" + std::to_string(k) + "." + std::string(what);
}

VectorXd head_forward(const Model& model, const VectorXd& features, Pass& pass,
                      Rng* dropout_rng) {
  const Architecture& arch = model.architecture();
  const size_t hidden = arch.dense_sizes.size();
  pass.dense.resize(hidden + 1);
  pass.masks.clear();
  const bool drop = dropout_rng != nullptr && arch.dropout > 0.0;
  const double keep = 1.0 - arch.dropout;
  VectorXd x = features;
  for (size_t k = 0; k <= hidden; ++k) {
    if (drop) {
      VectorXd mask(x.size());
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        mask(j) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
      }
      x = x.cwiseProduct(mask);
      pass.masks.push_back(std::move(mask));
    }
    DenseCache& dc = pass.dense[k];
    dc.input = x;
    dc.pre = model.params().at(dense_name(k, hidden, "weight")) * x +
             model.params().at(dense_name(k, hidden, "bias")).col(0);
    x = k < hidden ? VectorXd(dc.pre.cwiseMax(0.0)) : dc.pre;
  }
  return x;
}

VectorXd head_backward(const Model& model, const Pass& pass, const VectorXd& d_logits,
                       const GradTarget& g) {
  const size_t hidden = model.architecture().dense_sizes.size();
  VectorXd d_pre = d_logits;
  VectorXd dx;
  for (size_t k = hidden + 1; k-- > 0;) {
    const DenseCache& dc = pass.dense[k];
    const std::string wname = dense_name(k, hidden, "weight");
    if (MatrixXd* dw = g.get(wname)) dw->noalias() += d_pre * dc.input.transpose();
    if (MatrixXd* db = g.get(dense_name(k, hidden, "bias"))) db->col(0) += d_pre;
    dx = model.params().at(wname).transpose() * d_pre;
    if (!pass.masks.empty()) dx = dx.cwiseProduct(pass.masks[k]);
    if (k > 0) {
      d_pre = (pass.dense[k - 1].pre.array() > 0.0).cast<double>() * dx.array();
    }
  }
  return dx;
}

VectorXd full_forward(const Model& model, const MatrixXd& x, Pass& pass, Rng* dropout_rng) {
  if (x.rows() != model.embedding_dim()) {
    fail(ErrorKind::kInvalidArgument, kModule,
         "embedded input has " + std::to_string(x.rows()) + " rows, expected " +
             std::to_string(model.embedding_dim()));
  }
  if (x.cols() > model.max_len()) {
    fail(ErrorKind::kInvalidArgument, kModule,
         "sequence length " + std::to_string(x.cols()) + " exceeds max_len " +
             std::to_string(model.max_len()));
  }
  pass.features = encode_forward(model, x, pass);
  return head_forward(model, pass.features, pass, dropout_rng);
}

// log-softmax cross-entropy and its gradient w.r.t. logits.
double cross_entropy(const VectorXd& z, int label, VectorXd* d_logits) {
  const double m = z.maxCoeff();
  const VectorXd e = (z.array() - m).exp();
  const double s = e.sum();
  if (d_logits != nullptr) {
    *d_logits = e / s;
    (*d_logits)(label) -= 1.0;
  }
  return -(z(label) - m - std::log(s));
}

MatrixXd glorot(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  MatrixXd m(rows, cols);
  // Row-major draw order, independent of Eigen's storage order.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
  }
  return m;
}

void add_lstm(ParamSet& p, Rng& rng, const std::string& prefix, int in, int h) {
  p.add(prefix + ".wx", glorot(rng, 4 * h, in));
  p.add(prefix + ".wh", glorot(rng, 4 * h, h));
  MatrixXd bias = MatrixXd::Zero(4 * h, 1);
  bias.block(h, 0, h, 1).setOnes();  // forget gate
  p.add(prefix + ".bias", std::move(bias));
}

}  // namespace

// ---- names --------------------------------------------------------------

std::string_view arch_id(ArchKind kind) {
  switch (kind) {
    case ArchKind::kMeanMlp: return "mean_mlp";
    case ArchKind::kCnn: return "cnn";
    case ArchKind::kLstm: return "lstm";
    case ArchKind::kBiLstm: return "bilstm";
    case ArchKind::kCnnLstm: return "cnn_lstm";
  }
  return "";
}

std::string_view arch_label(ArchKind kind) {
  switch (kind) {
    case ArchKind::kMeanMlp: return "MeanMLP";
    case ArchKind::kCnn: return "CNN";
    case ArchKind::kLstm: return "LSTM";
    case ArchKind::kBiLstm: return "BiLSTM";
    case ArchKind::kCnnLstm: return "CNN-LSTM";
  }
  return "";
}

ArchKind parse_arch(std::string_view id) {
  for (ArchKind k : {ArchKind::kMeanMlp, ArchKind::kCnn, ArchKind::kLstm,
                     ArchKind::kBiLstm, ArchKind::kCnnLstm}) {
    if (arch_id(k) == id) return k;
  }
  fail(ErrorKind::kInvalidArgument, kModule,
       "unknown architecture '" + std::string(id) +
           "' (expected mean_mlp|cnn|lstm|bilstm|cnn_lstm)");
}

// ---- Architecture / TrainConfig -----------------------------------------

Architecture Architecture::defaults(ArchKind kind) {
  Architecture a;
  a.kind = kind;
  if (kind == ArchKind::kMeanMlp) a.dense_sizes = {64};
  if (kind == ArchKind::kCnnLstm) a.filter_widths = {3};
  return a;
}

void Architecture::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorKind::kInvalidArgument, kModule, m); };
  const bool conv = kind == ArchKind::kCnn || kind == ArchKind::kCnnLstm;
  const bool recurrent = kind == ArchKind::kLstm || kind == ArchKind::kBiLstm ||
                         kind == ArchKind::kCnnLstm;
  if (conv) {
    if (filters <= 0) bad("filters must be positive");
    if (filter_widths.empty()) bad("convolutional architecture needs filter widths");
    for (int w : filter_widths) {
      if (w <= 0) bad("filter widths must be positive");
    }
    if (kind == ArchKind::kCnnLstm && filter_widths.size() != 1) {
      bad("cnn_lstm takes exactly one filter width");
    }
    std::vector<int> sorted = filter_widths;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      bad("filter widths must be distinct");
    }
  }
  if (recurrent && hidden_size <= 0) bad("hidden size must be positive");
  for (int s : dense_sizes) {
    if (s <= 0) bad("dense layer sizes must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0, 1)");
}

nlohmann::json architecture_to_json(const Architecture& a) {
  nlohmann::json j;
  j["kind"] = std::string(arch_id(a.kind));
  j["filter_widths"] = a.filter_widths;
  j["filters"] = a.filters;
  j["hidden_size"] = a.hidden_size;
  j["dense_sizes"] = a.dense_sizes;
  j["dropout"] = a.dropout;
  j["trainable_embeddings"] = a.trainable_embeddings;
  return j;
}

Architecture architecture_from_json(const nlohmann::json& j) {
  try {
    Architecture a;
    a.kind = parse_arch(j.at("kind").get<std::string>());
    a.filter_widths = j.at("filter_widths").get<std::vector<int>>();
    a.filters = j.at("filters").get<int>();
    a.hidden_size = j.at("hidden_size").get<int>();
    a.dense_sizes = j.at("dense_sizes").get<std::vector<int>>();
    a.dropout = j.at("dropout").get<double>();
    a.trainable_embeddings = j.at("trainable_embeddings").get<bool>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchema, kModule, std::string("bad architecture: ") + e.what());
  }
}

TrainConfig TrainConfig::defaults_for(ArchKind kind) {
  TrainConfig c;
  if (kind == ArchKind::kCnnLstm) c.learning_rate = 0.0005;
  return c;
}

void TrainConfig::validate() const {
  if (batch_size <= 0) fail(ErrorKind::kInvalidArgument, kModule, "batch size must be positive");
  if (epochs < 0) fail(ErrorKind::kInvalidArgument, kModule, "epochs must be non-negative");
  if (!(learning_rate > 0.0)) fail(ErrorKind::kInvalidArgument, kModule, "learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    fail(ErrorKind::kInvalidArgument, kModule, "invalid Adam hyperparameters");
  }
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["optimizer"] = "adam";
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["seed"] = c.seed;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  try {
    TrainConfig c;
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchema, kModule, std::string("bad train config: ") + e.what());
  }
}

// ---- ParamSet -------------------------------------------------------------

void ParamSet::add(std::string name, Eigen::MatrixXd value) {
  if (contains(name)) fail(ErrorKind::kInvalidArgument, kModule, "duplicate parameter " + name);
  entries_.push_back({std::move(name), std::move(value)});
}

Eigen::MatrixXd& ParamSet::at(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  fail(ErrorKind::kInvalidArgument, kModule, "no parameter named " + std::string(name));
}

const Eigen::MatrixXd& ParamSet::at(std::string_view name) const {
  return const_cast<ParamSet*>(this)->at(name);
}

bool ParamSet::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Param& e) { return e.name == name; });
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& e : entries_) {
    out.entries_.push_back({e.name, MatrixXd::Zero(e.value.rows(), e.value.cols())});
  }
  return out;
}

void ParamSet::set_zero() {
  for (auto& e : entries_) e.value.setZero();
}

void ParamSet::add_scaled(const ParamSet& other, double scale) {
  for (size_t i = 0; i < entries_.size(); ++i) {
    entries_[i].value += scale * other.entries_[i].value;
  }
}

bool ParamSet::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const Param& e) { return e.value.allFinite(); });
}

// ---- Model ----------------------------------------------------------------

std::vector<int> Model::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  const size_t n = std::min(tokens.size(), static_cast<size_t>(max_len_));
  ids.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const auto it = vocab_index_.find(tokens[i]);
    ids.push_back(it == vocab_index_.end() ? kUnkId : it->second + 2);
  }
  return ids;
}

Eigen::MatrixXd Model::embed(std::span<const int> ids) const {
  const MatrixXd& table = embeddings();
  Eigen::Index n = 0;
  for (int id : ids) {
    if (id < 0 || id >= vocab_size()) {
      fail(ErrorKind::kInvalidArgument, kModule,
           "token id " + std::to_string(id) + " outside vocabulary of size " +
               std::to_string(vocab_size()));
    }
    if (id != kPadId) ++n;
  }
  if (n > max_len_) {
    fail(ErrorKind::kInvalidArgument, kModule,
         "sequence length " + std::to_string(n) + " exceeds max_len " + std::to_string(max_len_));
  }
  MatrixXd x(embedding_dim_, n);
  Eigen::Index c = 0;
  for (int id : ids) {
    if (id != kPadId) x.col(c++) = table.col(id);
  }
  return x;
}

Model init_model(const Architecture& arch, const EmbeddingTable& table,
                 uint64_t seed, std::span<const std::string> vocabulary, int max_len) {
  arch.validate();
  if (table.dim() <= 0) fail(ErrorKind::kInvalidArgument, kModule, "embedding table is empty");
  if (max_len <= 0) fail(ErrorKind::kInvalidArgument, kModule, "max_len must be positive");

  Model m;
  m.arch_ = arch;
  m.embedding_dim_ = table.dim();
  m.max_len_ = max_len;
  m.seed_ = seed;
  if (vocabulary.empty()) {
    m.vocab_ = table.tokens();
  } else {
    for (const auto& t : vocabulary) {
      if (table.lookup(t) && !m.vocab_index_.contains(t)) {
        m.vocab_index_.emplace(t, static_cast<int>(m.vocab_.size()));
        m.vocab_.push_back(t);
      }
    }
  }
  m.vocab_index_.clear();
  for (size_t i = 0; i < m.vocab_.size(); ++i) m.vocab_index_.emplace(m.vocab_[i], static_cast<int>(i));

  const int d = table.dim();
  MatrixXd emb = MatrixXd::Zero(d, m.vocab_size());
  for (size_t i = 0; i < m.vocab_.size(); ++i) emb.col(static_cast<Eigen::Index>(i) + 2) = *table.lookup(m.vocab_[i]);
  m.params_.add("embedding", std::move(emb));

  Rng rng(derive_seed(seed, "init"));
  int feature_dim = d;
  switch (arch.kind) {
    case ArchKind::kMeanMlp:
      break;
    case ArchKind::kCnn:
      for (int w : arch.filter_widths) {
        m.params_.add(conv_name(w, "weight"), glorot(rng, arch.filters, w * d));
        m.params_.add(conv_name(w, "bias"), MatrixXd::Zero(arch.filters, 1));
      }
      feature_dim = arch.filters * static_cast<int>(arch.filter_widths.size());
      break;
    case ArchKind::kLstm:
      add_lstm(m.params_, rng, "lstm", d, arch.hidden_size);
      feature_dim = arch.hidden_size;
      break;
    case ArchKind::kBiLstm:
      add_lstm(m.params_, rng, "lstm_fwd", d, arch.hidden_size);
      add_lstm(m.params_, rng, "lstm_bwd", d, arch.hidden_size);
      feature_dim = 2 * arch.hidden_size;
      break;
    case ArchKind::kCnnLstm: {
      const int w = arch.filter_widths.front();
      m.params_.add(conv_name(w, "weight"), glorot(rng, arch.filters, w * d));
      m.params_.add(conv_name(w, "bias"), MatrixXd::Zero(arch.filters, 1));
      add_lstm(m.params_, rng, "lstm", arch.filters, arch.hidden_size);
      feature_dim = arch.hidden_size;
      break;
    }
  }
  const size_t hidden = arch.dense_sizes.size();
  int in = feature_dim;
  for (size_t k = 0; k <= hidden; ++k) {
    const int out = k < hidden ? arch.dense_sizes[k] : kNumClasses;
    m.params_.add(dense_name(k, hidden, "weight"), glorot(rng, out, in));
    m.params_.add(dense_name(k, hidden, "bias"), MatrixXd::Zero(out, 1));
    in = out;
  }
  return m;
}

// ---- forward / gradients ----------------------------------------------------

Eigen::VectorXd logits(const Model& model, const Eigen::MatrixXd& embedded) {
  Pass pass;
  return full_forward(model, embedded, pass, nullptr);
}

Probabilities softmax(const Eigen::VectorXd& z) {
  const double m = z.maxCoeff();
  const VectorXd e = (z.array() - m).exp();
  const double s = e.sum();
  Probabilities p{};
  for (int c = 0; c < kNumClasses; ++c) p[c] = e(c) / s;
  return p;
}

Probabilities forward(const Model& model, std::span<const int> token_ids) {
  return softmax(logits(model, model.embed(token_ids)));
}

Probabilities predict_tokens(const Model& model, std::span<const std::string> tokens) {
  const auto ids = model.encode(tokens);
  return forward(model, ids);
}

int argmax(const Probabilities& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

Eigen::MatrixXd input_gradients(const Model& model, const Eigen::MatrixXd& embedded,
                                int target_class) {
  if (target_class < 0 || target_class >= kNumClasses) {
    fail(ErrorKind::kInvalidArgument, kModule, "target class outside 0-5");
  }
  if (!embedded.allFinite()) fail(ErrorKind::kNumeric, kModule, "non-finite embedded input");
  Pass pass;
  full_forward(model, embedded, pass, nullptr);
  VectorXd d_logits = VectorXd::Zero(kNumClasses);
  d_logits(target_class) = 1.0;
  const VectorXd d_features = head_backward(model, pass, d_logits, GradTarget{});
  return encode_backward(model, pass, embedded, d_features, GradTarget{});
}

double loss_and_gradients_embedded(const Model& model, const Eigen::MatrixXd& embedded,
                                   int label, ParamSet* grads, Eigen::MatrixXd* input_grad,
                                   Rng* dropout_rng) {
  Pass pass;
  const VectorXd z = full_forward(model, embedded, pass, dropout_rng);
  VectorXd d_logits;
  const double loss = cross_entropy(z, label, &d_logits);
  const GradTarget g{grads};
  const VectorXd d_features = head_backward(model, pass, d_logits, g);
  const bool needs_input = input_grad != nullptr || grads != nullptr;
  if (needs_input) {
    MatrixXd dx = encode_backward(model, pass, embedded, d_features, g);
    if (input_grad != nullptr) *input_grad = std::move(dx);
  }
  return loss;
}

double loss_and_gradients(const Model& model, std::span<const int> token_ids, int label,
                          ParamSet& grads, Rng* dropout_rng) {
  const MatrixXd x = model.embed(token_ids);
  MatrixXd dx;
  const bool trainable = model.architecture().trainable_embeddings;
  const double loss = loss_and_gradients_embedded(model, x, label, &grads,
                                                  trainable ? &dx : nullptr, dropout_rng);
  if (trainable) {
    MatrixXd& de = grads.at("embedding");
    Eigen::Index c = 0;
    for (int id : token_ids) {
      if (id == kPadId) continue;
      de.col(id) += dx.col(c++);
    }
  }
  return loss;
}

Eigen::VectorXd encoder_features(const Model& model, const Eigen::MatrixXd& embedded) {
  Pass pass;
  full_forward(model, embedded, pass, nullptr);
  return pass.features;
}

// ---- training -------------------------------------------------------------

TrainResult train(Model model, std::span<const Document> train_docs,
                  std::span<const Document> val_docs, const TrainConfig& cfg, int jobs) {
  cfg.validate();
  if (train_docs.empty()) fail(ErrorKind::kInvalidArgument, kModule, "empty training set");

  std::vector<std::vector<int>> inputs;
  inputs.reserve(train_docs.size());
  for (const auto& d : train_docs) inputs.push_back(model.encode(d.tokens));

  ParamSet& params = model.params();
  ParamSet m1 = params.zeros_like();
  ParamSet m2 = params.zeros_like();
  const bool trainable = model.architecture().trainable_embeddings;
  const uint64_t shuffle_seed = derive_seed(cfg.seed, "shuffle");
  const uint64_t dropout_seed = derive_seed(cfg.seed, "dropout");
  const size_t n = train_docs.size();
  long step = 0;

  std::vector<EpochRecord> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(shuffle_seed, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (size_t start = 0, batch = 0; start < n; start += cfg.batch_size, ++batch) {
      const size_t end = std::min(n, start + static_cast<size_t>(cfg.batch_size));
      const size_t chunks = (end - start + kChunk - 1) / kChunk;
      std::vector<ParamSet> chunk_grads(chunks);
      std::vector<double> chunk_loss(chunks, 0.0);
      parallel_for(chunks, jobs, [&](size_t c) {
        chunk_grads[c] = params.zeros_like();
        const size_t lo = start + c * kChunk;
        const size_t hi = std::min(end, lo + kChunk);
        for (size_t k = lo; k < hi; ++k) {
          const size_t ex = order[k];
          Rng drop(derive_seed(dropout_seed, static_cast<uint64_t>(epoch) * n + ex));
          chunk_loss[c] += loss_and_gradients(model, inputs[ex],
                                              train_docs[ex].label_index(),
                                              chunk_grads[c], &drop);
        }
      });
      ParamSet grad = std::move(chunk_grads[0]);
      double batch_loss = chunk_loss[0];
      for (size_t c = 1; c < chunks; ++c) {
        grad.add_scaled(chunk_grads[c], 1.0);
        batch_loss += chunk_loss[c];
      }
      const double count = static_cast<double>(end - start);
      if (!std::isfinite(batch_loss) || !grad.all_finite()) {
        fail(ErrorKind::kNumeric, kModule,
             "non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                 std::to_string(batch + 1));
      }
      epoch_loss += batch_loss;

      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto& pe = params.entries();
      for (size_t i = 0; i < pe.size(); ++i) {
        if (pe[i].name == "embedding" && !trainable) continue;
        const MatrixXd gi = grad.entries()[i].value / count;
        MatrixXd& a = m1.entries()[i].value;
        MatrixXd& b = m2.entries()[i].value;
        a = cfg.beta1 * a + (1.0 - cfg.beta1) * gi;
        b = cfg.beta2 * b + (1.0 - cfg.beta2) * gi.cwiseProduct(gi);
        pe[i].value.array() -= cfg.learning_rate * (a.array() / bc1) /
                               ((b.array() / bc2).sqrt() + cfg.epsilon);
      }
      if (trainable) {
        // Pad and unknown columns stay zero.
        params.at("embedding").col(kPadId).setZero();
        params.at("embedding").col(kUnkId).setZero();
      }
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = epoch_loss / static_cast<double>(n);
    if (!val_docs.empty()) rec.val_accuracy = evaluate(model, val_docs, jobs).accuracy;
    history.push_back(rec);
  }
  model.train_config = cfg;
  model.history.insert(model.history.end(), history.begin(), history.end());
  return {std::move(model), std::move(history)};
}

// ---- evaluation -------------------------------------------------------------

MetricsReport metrics_from_confusion(
    const std::array<std::array<int, kNumClasses>, kNumClasses>& confusion) {
  MetricsReport r;
  r.confusion = confusion;
  long total = 0, correct = 0;
  for (int g = 0; g < kNumClasses; ++g) {
    for (int p = 0; p < kNumClasses; ++p) {
      total += confusion[g][p];
      if (g == p) correct += confusion[g][p];
      r.support[g] += confusion[g][p];
    }
  }
  for (int c = 0; c < kNumClasses; ++c) {
    long predicted = 0;
    for (int g = 0; g < kNumClasses; ++g) predicted += confusion[g][c];
    const double tp = confusion[c][c];
    r.precision[c] = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
    r.recall[c] = r.support[c] > 0 ? tp / static_cast<double>(r.support[c]) : 0.0;
    const double s = r.precision[c] + r.recall[c];
    r.per_class_f1[c] = s > 0.0 ? 2.0 * r.precision[c] * r.recall[c] / s : 0.0;
  }
  r.accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  return r;
}

MetricsReport evaluate(const Model& model, std::span<const Document> test_docs, int jobs) {
  if (test_docs.empty()) fail(ErrorKind::kInvalidArgument, kModule, "empty test set");
  std::vector<int> predicted(test_docs.size());
  parallel_for(test_docs.size(), jobs, [&](size_t i) {
    predicted[i] = argmax(predict_tokens(model, test_docs[i].tokens));
  });
  std::array<std::array<int, kNumClasses>, kNumClasses> confusion{};
  for (size_t i = 0; i < test_docs.size(); ++i) {
    ++confusion[test_docs[i].label_index()][predicted[i]];
  }
  return metrics_from_confusion(confusion);
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
  nlohmann::json j;
  j["per_class_f1"] = m.per_class_f1;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["support"] = m.support;
  j["accuracy"] = m.accuracy;
  j["confusion"] = m.confusion;
  return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  try {
    return metrics_from_confusion(
        j.at("confusion").get<std::array<std::array<int, kNumClasses>, kNumClasses>>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchema, kModule, std::string("bad metrics file: ") + e.what());
  }
}

// ---- serialization ------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'C', 'A', 'U', 'S', 'E', 'X', 'M', '1'};

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint64_t get_u64(std::string_view in) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

float get_f32(const char* p) {
  uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

std::string model_to_bytes(const Model& model) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["architecture"] = architecture_to_json(model.architecture());
  header["embedding_dim"] = model.embedding_dim();
  header["max_len"] = model.max_len();
  header["seed"] = model.seed();
  header["vocabulary"] = model.vocabulary();
  header["train_config"] =
      model.train_config ? train_config_to_json(*model.train_config) : nlohmann::json();
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : model.history) {
    hist.push_back({{"epoch", r.epoch},
                    {"train_loss", r.train_loss},
                    {"val_accuracy", r.val_accuracy ? nlohmann::json(*r.val_accuracy)
                                                    : nlohmann::json()}});
  }
  header["history"] = hist;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& p : model.params().entries()) {
    blocks.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  header["blocks"] = blocks;

  const std::string text = header.dump();
  std::string out(kMagic, 8);
  put_u64(out, text.size());
  out += text;
  for (const auto& p : model.params().entries()) {
    const double* data = p.value.data();
    for (Eigen::Index i = 0; i < p.value.size(); ++i) put_f32(out, static_cast<float>(data[i]));
  }
  return out;
}

Model model_from_bytes(std::string_view bytes) {
  auto bad = [](const std::string& m) { fail(ErrorKind::kSchema, kModule, "model file: " + m); };
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) bad("bad magic");
  const uint64_t len = get_u64(bytes.substr(8, 8));
  if (len > bytes.size() - 16) bad("truncated header");
  nlohmann::json h = nlohmann::json::parse(bytes.substr(16, len), nullptr, false);
  if (h.is_discarded() || !h.is_object()) bad("header is not JSON");
  Model m;
  try {
    if (h.at("format_version").get<int>() != 1) bad("unsupported format version");
    m.arch_ = architecture_from_json(h.at("architecture"));
    m.arch_.validate();
    m.embedding_dim_ = h.at("embedding_dim").get<int>();
    m.max_len_ = h.at("max_len").get<int>();
    m.seed_ = h.at("seed").get<uint64_t>();
    m.vocab_ = h.at("vocabulary").get<std::vector<std::string>>();
    for (size_t i = 0; i < m.vocab_.size(); ++i) m.vocab_index_.emplace(m.vocab_[i], static_cast<int>(i));
    if (!h.at("train_config").is_null()) m.train_config = train_config_from_json(h["train_config"]);
    for (const auto& r : h.at("history")) {
      EpochRecord rec;
      rec.epoch = r.at("epoch").get<int>();
      rec.train_loss = r.at("train_loss").get<double>();
      if (!r.at("val_accuracy").is_null()) rec.val_accuracy = r["val_accuracy"].get<double>();
      m.history.push_back(rec);
    }
    size_t offset = 16 + len;
    for (const auto& b : h.at("blocks")) {
      const auto rows = b.at("rows").get<Eigen::Index>();
      const auto cols = b.at("cols").get<Eigen::Index>();
      if (rows < 0 || cols < 0) bad("negative block shape");
      const size_t count = static_cast<size_t>(rows * cols);
      if (offset + 4 * count > bytes.size()) bad("truncated parameter block " + b.at("name").get<std::string>());
      MatrixXd v(rows, cols);
      for (size_t i = 0; i < count; ++i) v.data()[i] = get_f32(bytes.data() + offset + 4 * i);
      offset += 4 * count;
      m.params_.add(b.at("name").get<std::string>(), std::move(v));
    }
    if (offset != bytes.size()) bad("trailing bytes after parameter blocks");
  } catch (const nlohmann::json::exception& e) {
    bad(e.what());
  }
  if (!m.params_.contains("embedding") ||
      m.params_.at("embedding").rows() != m.embedding_dim_ ||
      m.params_.at("embedding").cols() != m.vocab_size()) {
    bad("embedding block does not match vocabulary");
  }
  // Names and shapes must match a freshly built model of the same layout.
  EmbeddingTable shape_only = EmbeddingTable::Builder(m.embedding_dim_).build();
  const Model reference = init_model(m.arch_, shape_only, 0, {}, m.max_len_);
  const auto& want = reference.params().entries();
  const auto& got = m.params_.entries();
  if (want.size() != got.size()) bad("parameter block count does not match architecture");
  for (size_t i = 1; i < want.size(); ++i) {
    if (want[i].name != got[i].name || want[i].value.rows() != got[i].value.rows() ||
        want[i].value.cols() != got[i].value.cols()) {
      bad("parameter block " + got[i].name + " does not match architecture");
    }
  }
  if (!m.params_.all_finite()) bad("non-finite parameters");
  return m;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  write_file(path, model_to_bytes(model), kModule);
}

Model load_model(const std::filesystem::path& path) {
  return model_from_bytes(read_file(path, kModule));
}

}  // namespace causex
