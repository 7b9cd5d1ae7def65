#include "corridornav/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace corridornav::nn {

namespace {

struct Dims {
  int c, h, w;
};

// Walks the layer stack and returns the activation dims entering each layer
// (plus the final dims). Throws on inconsistency.
std::vector<Dims> trace_dims(const RegressorSpec& spec) {
  std::vector<Dims> dims;
  Dims cur{spec.input_c, spec.input_h, spec.input_w};
  if (cur.c <= 0 || cur.h <= 0 || cur.w <= 0)
    throw std::invalid_argument("regressor spec: bad input dims");
  bool dense_seen = false;
  for (const LayerSpec& l : spec.layers) {
    if (dense_seen) throw std::invalid_argument("regressor spec: dense layer must be last");
    dims.push_back(cur);
    switch (l.kind) {
      case LayerKind::Conv:
        if (l.in_ch != cur.c) throw std::invalid_argument("regressor spec: conv in_ch mismatch");
        if (l.out_ch <= 0 || l.kernel <= 0 || l.kernel % 2 == 0)
          throw std::invalid_argument("regressor spec: conv needs odd kernel, out_ch > 0");
        cur.c = l.out_ch;
        break;
      case LayerKind::Pool:
        cur.h /= 2;
        cur.w /= 2;
        if (cur.h == 0 || cur.w == 0)
          throw std::invalid_argument("regressor spec: pooled to nothing");
        break;
      case LayerKind::Dense:
        if (l.in_ch != cur.c * cur.h * cur.w)
          throw std::invalid_argument("regressor spec: dense in mismatch");
        if (l.out_ch != 1) throw std::invalid_argument("regressor spec: output must be 1x1");
        dense_seen = true;
        cur = {1, 1, 1};
        break;
    }
  }
  if (!dense_seen) throw std::invalid_argument("regressor spec: missing dense output layer");
  dims.push_back(cur);
  return dims;
}

inline double sign_or_zero(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void conv_forward(const LayerSpec& l, const ParamBlock& p, const Tensor& in, Tensor& out) {
  const int k = l.kernel, pad = k / 2;
  const int h = in.h, w = in.w;
  for (int oc = 0; oc < l.out_ch; ++oc) {
    double* op = &out.at(oc, 0, 0);
    std::fill(op, op + static_cast<size_t>(h) * w, p.b[oc]);
    for (int ic = 0; ic < l.in_ch; ++ic) {
      const double* wbase = &p.w[((static_cast<size_t>(oc) * l.in_ch + ic) * k) * k];
      for (int ky = 0; ky < k; ++ky) {
        const int oy_lo = std::max(0, pad - ky);
        const int oy_hi = std::min(h, h + pad - ky);
        for (int kx = 0; kx < k; ++kx) {
          const double wv = wbase[ky * k + kx];
          if (wv == 0.0) continue;
          const int dx = kx - pad;
          const int ox_lo = std::max(0, -dx);
          const int ox_hi = std::min(w, w - dx);
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            const double* irow =
                in.v.data() + (static_cast<size_t>(ic) * h + (oy + ky - pad)) * w;
            double* orow = op + static_cast<size_t>(oy) * w;
            for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * irow[ox + dx];
          }
        }
      }
    }
    if (l.relu) {
      for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i)
        if (op[i] < 0.0) op[i] = 0.0;
    }
  }
}

void conv_backward(const LayerSpec& l, const ParamBlock& p, const Tensor& in,
                   const Tensor& d_out, Tensor& d_in, ParamBlock& g) {
  const int k = l.kernel, pad = k / 2;
  const int h = in.h, w = in.w;
  for (int oc = 0; oc < l.out_ch; ++oc) {
    const double* dop = d_out.v.data() + static_cast<size_t>(oc) * h * w;
    double bsum = 0.0;
    for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) bsum += dop[i];
    g.b[oc] += bsum;
    for (int ic = 0; ic < l.in_ch; ++ic) {
      const size_t wbase = (static_cast<size_t>(oc) * l.in_ch + ic) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        const int oy_lo = std::max(0, pad - ky);
        const int oy_hi = std::min(h, h + pad - ky);
        for (int kx = 0; kx < k; ++kx) {
          const double wv = p.w[wbase + ky * k + kx];
          const int dx = kx - pad;
          const int ox_lo = std::max(0, -dx);
          const int ox_hi = std::min(w, w - dx);
          double wsum = 0.0;
          for (int oy = oy_lo; oy < oy_hi; ++oy) {
            const size_t in_row = (static_cast<size_t>(ic) * h + (oy + ky - pad)) * w;
            const double* irow = in.v.data() + in_row;
            double* dirow = d_in.v.data() + in_row;
            const double* dorow = dop + static_cast<size_t>(oy) * w;
            for (int ox = ox_lo; ox < ox_hi; ++ox) {
              wsum += dorow[ox] * irow[ox + dx];
              dirow[ox + dx] += wv * dorow[ox];
            }
          }
          g.w[wbase + ky * k + kx] += wsum;
        }
      }
    }
  }
}

void pool_forward(const Tensor& in, Tensor& out, std::vector<int>& argmax) {
  argmax.assign(out.size(), 0);
  for (int c = 0; c < in.c; ++c)
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) {
        int best = -1;
        double bv = 0.0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int iy = 2 * y + dy, ix = 2 * x + dx;
            const int idx = (c * in.h + iy) * in.w + ix;
            if (best < 0 || in.v[idx] > bv) {
              best = idx;
              bv = in.v[idx];
            }
          }
        out.at(c, y, x) = bv;
        argmax[(static_cast<size_t>(c) * out.h + y) * out.w + x] = best;
      }
}

}  // namespace

void RegressorSpec::validate() const { trace_dims(*this); }

size_t RegressorSpec::param_count() const {
  size_t n = 0;
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::Conv)
      n += static_cast<size_t>(l.out_ch) * l.in_ch * l.kernel * l.kernel + l.out_ch;
    else if (l.kind == LayerKind::Dense)
      n += static_cast<size_t>(l.in_ch) * l.out_ch + l.out_ch;
  }
  return n;
}

RegressorSpec default_regressor_spec(int input_w, int input_h) {
  RegressorSpec spec;
  spec.input_c = 3;
  spec.input_h = input_h;
  spec.input_w = input_w;
  int h = input_h, w = input_w;
  const int chans[] = {3, 8, 16, 32, 32};
  for (int i = 0; i < 4; ++i) {
    spec.layers.push_back({LayerKind::Conv, chans[i], chans[i + 1], 3, true});
    spec.layers.push_back({LayerKind::Pool, 0, 0, 2, false});
    h /= 2;
    w /= 2;
  }
  spec.layers.push_back({LayerKind::Dense, 32 * h * w, 1, 0, false});
  spec.validate();
  return spec;
}

Model init_weights(const RegressorSpec& spec, uint64_t seed) {
  spec.validate();
  Model m;
  m.spec = spec;
  Rng rng(seed);
  for (const LayerSpec& l : spec.layers) {
    ParamBlock p;
    if (l.kind == LayerKind::Conv) {
      // He-style: std = sqrt(2 / (c k^2)) with c the output channel count.
      const double std = std::sqrt(2.0 / (static_cast<double>(l.out_ch) * l.kernel * l.kernel));
      p.w.resize(static_cast<size_t>(l.out_ch) * l.in_ch * l.kernel * l.kernel);
      for (double& x : p.w) x = rng.gaussian(0.0, std);
      p.b.assign(l.out_ch, 0.0);
    } else if (l.kind == LayerKind::Dense) {
      const double std = std::sqrt(2.0 / static_cast<double>(l.in_ch));
      p.w.resize(static_cast<size_t>(l.in_ch) * l.out_ch);
      for (double& x : p.w) x = rng.gaussian(0.0, std);
      p.b.assign(l.out_ch, 0.0);
    }
    m.params.push_back(std::move(p));
  }
  return m;
}

double forward(const Model& model, const Tensor& input, Workspace& ws) {
  const RegressorSpec& spec = model.spec;
  if (input.c != spec.input_c || input.h != spec.input_h || input.w != spec.input_w)
    throw std::invalid_argument("forward: input shape mismatch");

  const size_t n = spec.layers.size();
  ws.acts.resize(n + 1);
  ws.pool_argmax.resize(n);
  ws.acts[0] = input;

  double out_scalar = 0.0;
  Dims cur{spec.input_c, spec.input_h, spec.input_w};
  for (size_t i = 0; i < n; ++i) {
    const LayerSpec& l = spec.layers[i];
    const Tensor& in = ws.acts[i];
    Tensor& out = ws.acts[i + 1];
    switch (l.kind) {
      case LayerKind::Conv:
        if (out.c != l.out_ch || out.h != cur.h || out.w != cur.w)
          out = Tensor(l.out_ch, cur.h, cur.w);
        conv_forward(l, model.params[i], in, out);
        cur.c = l.out_ch;
        break;
      case LayerKind::Pool:
        if (out.c != cur.c || out.h != cur.h / 2 || out.w != cur.w / 2)
          out = Tensor(cur.c, cur.h / 2, cur.w / 2);
        pool_forward(in, out, ws.pool_argmax[i]);
        cur.h /= 2;
        cur.w /= 2;
        break;
      case LayerKind::Dense: {
        const ParamBlock& p = model.params[i];
        double acc = p.b[0];
        for (size_t j = 0; j < in.size(); ++j) acc += p.w[j] * in.v[j];
        out = Tensor(1, 1, 1);
        out.v[0] = acc;
        out_scalar = acc;
        cur = {1, 1, 1};
        break;
      }
    }
  }
  return out_scalar;
}

double forward(const Model& model, const Tensor& input) {
  Workspace ws;
  return forward(model, input, ws);
}

void zero_grads(const Model& model, std::vector<ParamBlock>& grads) {
  grads.resize(model.params.size());
  for (size_t i = 0; i < model.params.size(); ++i) {
    grads[i].w.assign(model.params[i].w.size(), 0.0);
    grads[i].b.assign(model.params[i].b.size(), 0.0);
  }
}

void backward(const Model& model, const Workspace& ws, double d_out,
              std::vector<ParamBlock>& grads) {
  const RegressorSpec& spec = model.spec;
  const size_t n = spec.layers.size();
  if (ws.acts.size() != n + 1) throw std::invalid_argument("backward: stale workspace");

  Tensor d_cur(1, 1, 1);
  d_cur.v[0] = d_out;
  for (size_t ii = n; ii-- > 0;) {
    const LayerSpec& l = spec.layers[ii];
    const Tensor& in = ws.acts[ii];
    const Tensor& out = ws.acts[ii + 1];
    Tensor d_in(in.c, in.h, in.w);
    switch (l.kind) {
      case LayerKind::Dense: {
        const double d = d_cur.v[0];
        grads[ii].b[0] += d;
        for (size_t j = 0; j < in.size(); ++j) {
          grads[ii].w[j] += d * in.v[j];
          d_in.v[j] = d * model.params[ii].w[j];
        }
        break;
      }
      case LayerKind::Pool: {
        const std::vector<int>& am = ws.pool_argmax[ii];
        for (size_t j = 0; j < d_cur.size(); ++j) d_in.v[am[j]] += d_cur.v[j];
        break;
      }
      case LayerKind::Conv: {
        Tensor d_gated = d_cur;
        if (l.relu) {
          for (size_t j = 0; j < d_gated.size(); ++j)
            if (out.v[j] <= 0.0) d_gated.v[j] = 0.0;
        }
        conv_backward(l, model.params[ii], in, d_gated, d_in, grads[ii]);
        break;
      }
    }
    d_cur = std::move(d_in);
  }
}

double mae_loss(const std::vector<double>& predicted, const std::vector<double>& target) {
  if (predicted.empty()) throw std::invalid_argument("mae_loss: empty batch");
  if (predicted.size() != target.size())
    throw std::invalid_argument("mae_loss: size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) acc += std::abs(predicted[i] - target[i]);
  return acc / static_cast<double>(predicted.size());
}

LrStep lr_step(const std::vector<double>& history, double lr, const TrainConfig& config) {
  if (static_cast<int>(history.size()) < config.plateau_window) return {LrDecision::Keep, lr};
  double lo = history[history.size() - config.plateau_window];
  double hi = lo;
  for (size_t i = history.size() - config.plateau_window; i < history.size(); ++i) {
    lo = std::min(lo, history[i]);
    hi = std::max(hi, history[i]);
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));
  if (hi - lo > config.plateau_tol * scale) return {LrDecision::Keep, lr};
  const double next = lr / config.lr_factor;
  if (next < config.lr_floor) return {LrDecision::Stop, lr};
  return {LrDecision::Reduced, next};
}

TrainResult train(const std::vector<TrainSample>& samples, const RegressorSpec& spec,
                  const TrainConfig& config) {
  if (samples.empty()) throw std::invalid_argument("train: empty dataset");
  spec.validate();

  TrainResult result;
  result.model = init_weights(spec, hash64(config.seed, 1));
  Model& model = result.model;

  std::vector<ParamBlock> velocity, grads;
  zero_grads(model, velocity);
  zero_grads(model, grads);

  double lr = config.lr;
  std::vector<double> window;
  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  Workspace ws;
  bool stop = false;
  for (int epoch = 0; epoch < config.max_epochs && !stop; ++epoch) {
    Rng shuffle_rng(hash64(config.seed, 2, static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = shuffle_rng.below(i);
      std::swap(order[i - 1], order[j]);
    }

    for (size_t start = 0; start < order.size() && !stop; start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      const double bn = static_cast<double>(end - start);
      zero_grads(model, grads);
      double loss_acc = 0.0;
      for (size_t s = start; s < end; ++s) {
        const TrainSample& sample = samples[order[s]];
        const double pred = forward(model, sample.input, ws);
        loss_acc += std::abs(pred - sample.label);
        backward(model, ws, sign_or_zero(pred - sample.label) / bn, grads);
      }
      const double loss = loss_acc / bn;

      for (size_t li = 0; li < model.params.size(); ++li) {
        ParamBlock& p = model.params[li];
        ParamBlock& v = velocity[li];
        ParamBlock& g = grads[li];
        for (size_t j = 0; j < p.w.size(); ++j) {
          v.w[j] = config.momentum * v.w[j] + (g.w[j] + config.l2 * p.w[j]);
          p.w[j] -= lr * v.w[j];
        }
        for (size_t j = 0; j < p.b.size(); ++j) {
          v.b[j] = config.momentum * v.b[j] + (g.b[j] + config.l2 * p.b[j]);
          p.b[j] -= lr * v.b[j];
        }
      }

      result.loss_curve.push_back(loss);
      result.lr_curve.push_back(lr);
      window.push_back(loss);
      if (static_cast<int>(window.size()) > config.plateau_window)
        window.erase(window.begin());
      const LrStep step = lr_step(window, lr, config);
      if (step.decision == LrDecision::Reduced) {
        lr = step.lr;
        window.clear();  // cooldown: a fresh window per learning rate
      } else if (step.decision == LrDecision::Stop) {
        result.stopped_by_lr_floor = true;
        stop = true;
      }
    }
    result.epochs_run = epoch + 1;
  }
  return result;
}

namespace {

constexpr char kMagic[8] = {'C', 'N', 'A', 'V', 'M', 'D', 'L', '1'};

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const std::string& in, size_t& pos) {
  if (pos + 4 > in.size()) throw std::runtime_error("model file truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

void save_model(const Model& model, const std::string& path, const std::string& target_name) {
  nlohmann::ordered_json desc;
  desc["format"] = "corridornav-model";
  desc["target"] = target_name;
  desc["input"] = {{"c", model.spec.input_c}, {"h", model.spec.input_h}, {"w", model.spec.input_w}};
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const LayerSpec& l : model.spec.layers) {
    nlohmann::ordered_json jl;
    switch (l.kind) {
      case LayerKind::Conv:
        jl = {{"kind", "conv"}, {"in", l.in_ch}, {"out", l.out_ch}, {"k", l.kernel}, {"relu", l.relu}};
        break;
      case LayerKind::Pool:
        jl = {{"kind", "pool"}};
        break;
      case LayerKind::Dense:
        jl = {{"kind", "dense"}, {"in", l.in_ch}, {"out", l.out_ch}};
        break;
    }
    layers.push_back(jl);
  }
  desc["layers"] = layers;
  desc["param_count"] = model.spec.param_count();
  const std::string json = desc.dump();

  std::string blob;
  blob.reserve(16 + json.size() + model.spec.param_count() * 4);
  blob.append(kMagic, sizeof(kMagic));
  put_u32(blob, 1);  // container version
  put_u32(blob, static_cast<uint32_t>(json.size()));
  blob += json;
  auto put_f32 = [&blob](double x) {
    const float f = static_cast<float>(x);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(blob, bits);
  };
  for (const ParamBlock& p : model.params) {
    for (double x : p.w) put_f32(x);
    for (double x : p.b) put_f32(x);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw std::runtime_error("short write: " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 16 || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a corridornav model file: " + path);

  size_t pos = sizeof(kMagic);
  const uint32_t version = get_u32(data, pos);
  if (version != 1) throw std::runtime_error("unsupported model version");
  const uint32_t jlen = get_u32(data, pos);
  if (pos + jlen > data.size()) throw std::runtime_error("model file truncated");
  const nlohmann::json desc = nlohmann::json::parse(data.substr(pos, jlen));
  pos += jlen;

  LoadedModel lm;
  lm.target_name = desc.at("target").get<std::string>();
  RegressorSpec spec;
  spec.input_c = desc.at("input").at("c").get<int>();
  spec.input_h = desc.at("input").at("h").get<int>();
  spec.input_w = desc.at("input").at("w").get<int>();
  for (const auto& jl : desc.at("layers")) {
    const std::string kind = jl.at("kind").get<std::string>();
    LayerSpec l;
    if (kind == "conv") {
      l.kind = LayerKind::Conv;
      l.in_ch = jl.at("in").get<int>();
      l.out_ch = jl.at("out").get<int>();
      l.kernel = jl.at("k").get<int>();
      l.relu = jl.at("relu").get<bool>();
    } else if (kind == "pool") {
      l.kind = LayerKind::Pool;
    } else if (kind == "dense") {
      l.kind = LayerKind::Dense;
      l.in_ch = jl.at("in").get<int>();
      l.out_ch = jl.at("out").get<int>();
      l.kernel = 0;
      l.relu = false;
    } else {
      throw std::runtime_error("unknown layer kind in model file: " + kind);
    }
    spec.layers.push_back(l);
  }
  spec.validate();

  Model model = init_weights(spec, 0);  // shapes only; overwritten below
  for (ParamBlock& p : model.params) {
    for (double& x : p.w) {
      const uint32_t bits = get_u32(data, pos);
      float f;
      std::memcpy(&f, &bits, 4);
      x = f;
    }
    for (double& x : p.b) {
      const uint32_t bits = get_u32(data, pos);
      float f;
      std::memcpy(&f, &bits, 4);
      x = f;
    }
  }
  if (pos != data.size()) throw std::runtime_error("model file has trailing bytes");
  lm.model = std::move(model);
  return lm;
}

}  // namespace corridornav::nn
