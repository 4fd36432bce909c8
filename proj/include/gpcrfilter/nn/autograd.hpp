#pragma once

// Minimal reverse-mode autodiff over Tensor<T>.
//
// A Tape records every operation of one forward pass; Tape::backward walks the
// records in reverse and accumulates gradients, finally adding leaf gradients
// into the Parameter objects they came from. Ops only compute input gradients
// for inputs that need them (parameters or values derived from parameters).
//
// Op backward closures capture the tape by reference: a Tape must outlive its
// backward() call and must not be moved while recording.

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "gpcrfilter/error.hpp"
#include "gpcrfilter/nn/tensor.hpp"
#include "gpcrfilter/rng.hpp"

namespace gpcrfilter::nn {

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad.fill(T(0)); }
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

template <class T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // allocated on first use
    bool needs_grad = false;
    Parameter<T>* param = nullptr;
    std::function<void()> backward;
  };

  Var constant(Tensor<T> value) {
    nodes_.push_back(Node{std::move(value), {}, false, nullptr, {}});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var param(Parameter<T>& p) {
    nodes_.push_back(Node{p.value, {}, true, &p, {}});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  // The id the next recorded node will get, so closures can refer to it.
  Var next() const { return Var{static_cast<int>(nodes_.size())}; }

  Var record(Tensor<T> value, std::initializer_list<Var> inputs, std::function<void()> backward) {
    bool needs = false;
    for (Var v : inputs)
      if (v.valid()) needs = needs || nodes_[v.id].needs_grad;
    nodes_.push_back(Node{std::move(value), {}, needs, nullptr, needs ? std::move(backward) : nullptr});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Tensor<T>& value(Var v) const { return nodes_[v.id].value; }
  bool needs_grad(Var v) const { return v.valid() && nodes_[v.id].needs_grad; }

  Tensor<T>& grad(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty() && !n.value.empty()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }

  // Seeds d(loss)/d(loss) = 1 for a scalar loss and propagates to parameters.
  void backward(Var loss) {
    if (value(loss).size() != 1) throw InvariantError("backward() needs a scalar loss");
    grad(loss)[0] = T(1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.empty()) continue;
      if (n.backward) n.backward();
      if (n.param) {
        auto& pg = n.param->grad;
        if (pg.shape() != n.value.shape()) pg = Tensor<T>(n.value.shape());
        for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Ops. "[.., K]" means any leading dimensions with last dimension K.

// y[.., M] = x[.., K] W[K, M] (+ b[M])
template <class T>
Var linear(Tape<T>& tape, Var x, Var w, Var b = {}) {
  const Tensor<T>& X = tape.value(x);
  const Tensor<T>& W = tape.value(w);
  const int K = X.cols();
  if (W.rank() != 2 || W.dim(0) != K)
    throw InvariantError("linear: shape mismatch " + shape_string(X.shape()) + " x " + shape_string(W.shape()));
  const int M = W.dim(1);
  const std::size_t R = X.rows();
  std::vector<int> out_shape = X.shape();
  out_shape.back() = M;
  Tensor<T> Y(out_shape);
  const T* bias = b.valid() ? tape.value(b).data() : nullptr;
  for (std::size_t r = 0; r < R; ++r) {
    T* y = Y.data() + r * M;
    if (bias) std::copy(bias, bias + M, y);
    const T* xr = X.data() + r * K;
    for (int k = 0; k < K; ++k) {
      const T xv = xr[k];
      const T* wr = W.data() + static_cast<std::size_t>(k) * M;
      for (int m = 0; m < M; ++m) y[m] += xv * wr[m];
    }
  }
  const Var out = tape.next();
  return tape.record(std::move(Y), {x, w, b}, [&tape, x, w, b, out, R, K, M]() {
    const Tensor<T>& G = tape.grad(out);
    if (tape.needs_grad(x)) {
      const Tensor<T>& W = tape.value(w);
      Tensor<T>& GX = tape.grad(x);
      for (std::size_t r = 0; r < R; ++r) {
        const T* g = G.data() + r * M;
        T* gx = GX.data() + r * K;
        for (int k = 0; k < K; ++k) {
          const T* wr = W.data() + static_cast<std::size_t>(k) * M;
          T acc = 0;
          for (int m = 0; m < M; ++m) acc += g[m] * wr[m];
          gx[k] += acc;
        }
      }
    }
    if (tape.needs_grad(w)) {
      const Tensor<T>& X = tape.value(x);
      Tensor<T>& GW = tape.grad(w);
      for (std::size_t r = 0; r < R; ++r) {
        const T* g = G.data() + r * M;
        const T* xr = X.data() + r * K;
        for (int k = 0; k < K; ++k) {
          const T xv = xr[k];
          T* gw = GW.data() + static_cast<std::size_t>(k) * M;
          for (int m = 0; m < M; ++m) gw[m] += xv * g[m];
        }
      }
    }
    if (tape.needs_grad(b)) {
      Tensor<T>& GB = tape.grad(b);
      for (std::size_t r = 0; r < R; ++r) {
        const T* g = G.data() + r * M;
        for (int m = 0; m < M; ++m) GB[m] += g[m];
      }
    }
  });
}

template <class T>
Var add(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& A = tape.value(a);
  const Tensor<T>& B = tape.value(b);
  if (A.shape() != B.shape())
    throw InvariantError("add: shape mismatch " + shape_string(A.shape()) + " vs " + shape_string(B.shape()));
  Tensor<T> Y = A;
  for (std::size_t i = 0; i < Y.size(); ++i) Y[i] += B[i];
  const Var out = tape.next();
  return tape.record(std::move(Y), {a, b}, [&tape, a, b, out]() {
    const Tensor<T>& G = tape.grad(out);
    for (Var v : {a, b}) {
      if (!tape.needs_grad(v)) continue;
      Tensor<T>& GV = tape.grad(v);
      for (std::size_t i = 0; i < G.size(); ++i) GV[i] += G[i];
    }
  });
}

template <class T>
Var relu(Tape<T>& tape, Var x) {
  Tensor<T> Y = tape.value(x);
  for (auto& v : Y.vec()) v = v > T(0) ? v : T(0);
  const Var out = tape.next();
  return tape.record(std::move(Y), {x}, [&tape, x, out]() {
    const Tensor<T>& G = tape.grad(out);
    const Tensor<T>& X = tape.value(x);
    Tensor<T>& GX = tape.grad(x);
    for (std::size_t i = 0; i < G.size(); ++i)
      if (X[i] > T(0)) GX[i] += G[i];
  });
}

// Per-row normalization over the last dimension with gain and bias.
template <class T>
Var layer_norm(Tape<T>& tape, Var x, Var gamma, Var beta, T eps = T(1e-5)) {
  const Tensor<T>& X = tape.value(x);
  const int D = X.cols();
  const std::size_t R = X.rows();
  const Tensor<T>& Gm = tape.value(gamma);
  const Tensor<T>& Bt = tape.value(beta);
  if (static_cast<int>(Gm.size()) != D || static_cast<int>(Bt.size()) != D)
    throw InvariantError("layer_norm: parameter width mismatch");
  Tensor<T> Y(X.shape());
  Tensor<T> xhat(X.shape());
  std::vector<T> inv_std(R);
  for (std::size_t r = 0; r < R; ++r) {
    const T* xr = X.data() + r * D;
    T mean = 0;
    for (int d = 0; d < D; ++d) mean += xr[d];
    mean /= T(D);
    T var = 0;
    for (int d = 0; d < D; ++d) var += (xr[d] - mean) * (xr[d] - mean);
    var /= T(D);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[r] = is;
    for (int d = 0; d < D; ++d) {
      const T h = (xr[d] - mean) * is;
      xhat[r * D + d] = h;
      Y[r * D + d] = h * Gm[d] + Bt[d];
    }
  }
  const Var out = tape.next();
  return tape.record(std::move(Y), {x, gamma, beta},
                     [&tape, x, gamma, beta, out, R, D, xhat = std::move(xhat), inv_std = std::move(inv_std)]() {
                       const Tensor<T>& G = tape.grad(out);
                       const Tensor<T>& Gm = tape.value(gamma);
                       if (tape.needs_grad(gamma) || tape.needs_grad(beta)) {
                         Tensor<T>* GG = tape.needs_grad(gamma) ? &tape.grad(gamma) : nullptr;
                         Tensor<T>* GB = tape.needs_grad(beta) ? &tape.grad(beta) : nullptr;
                         for (std::size_t r = 0; r < R; ++r)
                           for (int d = 0; d < D; ++d) {
                             if (GG) (*GG)[d] += G[r * D + d] * xhat[r * D + d];
                             if (GB) (*GB)[d] += G[r * D + d];
                           }
                       }
                       if (!tape.needs_grad(x)) return;
                       Tensor<T>& GX = tape.grad(x);
                       for (std::size_t r = 0; r < R; ++r) {
                         T mean_g = 0, mean_gx = 0;
                         for (int d = 0; d < D; ++d) {
                           const T gh = G[r * D + d] * Gm[d];
                           mean_g += gh;
                           mean_gx += gh * xhat[r * D + d];
                         }
                         mean_g /= T(D);
                         mean_gx /= T(D);
                         for (int d = 0; d < D; ++d) {
                           const T gh = G[r * D + d] * Gm[d];
                           GX[r * D + d] += inv_std[r] * (gh - mean_g - xhat[r * D + d] * mean_gx);
                         }
                       }
                     });
}

// Inverted dropout; identity when !training or p == 0.
template <class T>
Var dropout(Tape<T>& tape, Var x, double p, bool training, Rng& rng) {
  if (!training || p <= 0.0) return x;
  const Tensor<T>& X = tape.value(x);
  Tensor<T> mask(X.shape());
  const T keep_scale = T(1.0 / (1.0 - p));
  for (auto& m : mask.vec()) m = rng.uniform() >= p ? keep_scale : T(0);
  Tensor<T> Y = X;
  for (std::size_t i = 0; i < Y.size(); ++i) Y[i] *= mask[i];
  const Var out = tape.next();
  return tape.record(std::move(Y), {x}, [&tape, x, out, mask = std::move(mask)]() {
    const Tensor<T>& G = tape.grad(out);
    Tensor<T>& GX = tape.grad(x);
    for (std::size_t i = 0; i < G.size(); ++i) GX[i] += G[i] * mask[i];
  });
}

// Multi-head attention logits. Q [B,N,D], K [B,M,D] -> S [B*H, N, M] with
// S[b*H+h, n, m] = scale * <Q[b,n,head h], K[b,m,head h]>.
template <class T>
Var head_scores(Tape<T>& tape, Var q, Var k, int heads) {
  const Tensor<T>& Q = tape.value(q);
  const Tensor<T>& K = tape.value(k);
  const int B = Q.dim(0), N = Q.dim(1), D = Q.dim(2), M = K.dim(1);
  if (K.dim(0) != B || K.dim(2) != D || D % heads != 0) throw InvariantError("head_scores: shape mismatch");
  const int dh = D / heads;
  const T scale = T(1) / std::sqrt(T(dh));
  Tensor<T> S({B * heads, N, M});
  for (int b = 0; b < B; ++b)
    for (int h = 0; h < heads; ++h)
      for (int n = 0; n < N; ++n) {
        const T* qr = &Q.at(b, n, h * dh);
        T* sr = &S.at(b * heads + h, n, 0);
        for (int m = 0; m < M; ++m) {
          const T* kr = &K.at(b, m, h * dh);
          T acc = 0;
          for (int c = 0; c < dh; ++c) acc += qr[c] * kr[c];
          sr[m] = acc * scale;
        }
      }
  const Var out = tape.next();
  return tape.record(std::move(S), {q, k}, [&tape, q, k, out, B, N, M, heads, dh, scale]() {
    const Tensor<T>& G = tape.grad(out);
    const Tensor<T>& Q = tape.value(q);
    const Tensor<T>& K = tape.value(k);
    Tensor<T>* GQ = tape.needs_grad(q) ? &tape.grad(q) : nullptr;
    Tensor<T>* GK = tape.needs_grad(k) ? &tape.grad(k) : nullptr;
    for (int b = 0; b < B; ++b)
      for (int h = 0; h < heads; ++h)
        for (int n = 0; n < N; ++n) {
          const T* gr = &G.at(b * heads + h, n, 0);
          for (int m = 0; m < M; ++m) {
            const T g = gr[m] * scale;
            if (g == T(0)) continue;
            if (GQ) {
              T* gq = &GQ->at(b, n, h * dh);
              const T* kr = &K.at(b, m, h * dh);
              for (int c = 0; c < dh; ++c) gq[c] += g * kr[c];
            }
            if (GK) {
              T* gk = &GK->at(b, m, h * dh);
              const T* qr = &Q.at(b, n, h * dh);
              for (int c = 0; c < dh; ++c) gk[c] += g * qr[c];
            }
          }
        }
  });
}

// Softmax over the last dim of S [B*H, N, M] restricted to keys with
// key_mask[b*M + m] != 0. Masked entries are exactly 0 and never read.
template <class T>
Var masked_softmax(Tape<T>& tape, Var s, const std::vector<std::uint8_t>& key_mask, int heads) {
  const Tensor<T>& S = tape.value(s);
  const int BH = S.dim(0), N = S.dim(1), M = S.dim(2);
  const int B = BH / heads;
  if (static_cast<int>(key_mask.size()) != B * M) throw InvariantError("masked_softmax: mask shape mismatch");
  Tensor<T> P(S.shape());
  for (int bh = 0; bh < BH; ++bh) {
    const std::uint8_t* mask = key_mask.data() + static_cast<std::size_t>(bh / heads) * M;
    for (int n = 0; n < N; ++n) {
      const T* sr = &S.at(bh, n, 0);
      T* pr = &P.at(bh, n, 0);
      T mx = -std::numeric_limits<T>::infinity();
      bool any = false;
      for (int m = 0; m < M; ++m)
        if (mask[m]) {
          any = true;
          if (sr[m] > mx) mx = sr[m];
        }
      if (!any) throw InputError("attention over an all-masked key set");
      if (mx == -std::numeric_limits<T>::infinity()) {
        // Every live score is NaN or -inf; propagate NaN so the loss check reports it.
        for (int m = 0; m < M; ++m)
          if (mask[m]) pr[m] = std::numeric_limits<T>::quiet_NaN();
        continue;
      }
      T total = 0;
      for (int m = 0; m < M; ++m) {
        if (!mask[m]) continue;
        pr[m] = std::exp(sr[m] - mx);
        total += pr[m];
      }
      for (int m = 0; m < M; ++m)
        if (mask[m]) pr[m] /= total;
    }
  }
  const Var out = tape.next();
  return tape.record(std::move(P), {s}, [&tape, s, out, BH, N, M]() {
    const Tensor<T>& G = tape.grad(out);
    const Tensor<T>& P = tape.value(out);
    Tensor<T>& GS = tape.grad(s);
    for (int bh = 0; bh < BH; ++bh)
      for (int n = 0; n < N; ++n) {
        const T* pr = &P.at(bh, n, 0);
        const T* gr = &G.at(bh, n, 0);
        T dot = 0;
        for (int m = 0; m < M; ++m) dot += pr[m] * gr[m];
        T* gs = &GS.at(bh, n, 0);
        for (int m = 0; m < M; ++m)
          if (pr[m] != T(0)) gs[m] += pr[m] * (gr[m] - dot);
      }
  });
}

// O[b, n, head h] = sum_m P[b*H+h, n, m] V[b, m, head h]; P [B*H,N,M], V [B,M,D].
// Zero weights are skipped, so masked keys never touch the output.
template <class T>
Var head_mix(Tape<T>& tape, Var p, Var v, int heads) {
  const Tensor<T>& P = tape.value(p);
  const Tensor<T>& V = tape.value(v);
  const int B = V.dim(0), M = V.dim(1), D = V.dim(2), N = P.dim(1);
  if (P.dim(0) != B * heads || P.dim(2) != M || D % heads != 0) throw InvariantError("head_mix: shape mismatch");
  const int dh = D / heads;
  Tensor<T> O({B, N, D});
  for (int b = 0; b < B; ++b)
    for (int h = 0; h < heads; ++h)
      for (int n = 0; n < N; ++n) {
        const T* pr = &P.at(b * heads + h, n, 0);
        T* orow = &O.at(b, n, h * dh);
        for (int m = 0; m < M; ++m) {
          const T w = pr[m];
          if (w == T(0)) continue;
          const T* vr = &V.at(b, m, h * dh);
          for (int c = 0; c < dh; ++c) orow[c] += w * vr[c];
        }
      }
  const Var out = tape.next();
  return tape.record(std::move(O), {p, v}, [&tape, p, v, out, B, N, M, heads, dh]() {
    const Tensor<T>& G = tape.grad(out);
    const Tensor<T>& P = tape.value(p);
    const Tensor<T>& V = tape.value(v);
    Tensor<T>* GP = tape.needs_grad(p) ? &tape.grad(p) : nullptr;
    Tensor<T>* GV = tape.needs_grad(v) ? &tape.grad(v) : nullptr;
    for (int b = 0; b < B; ++b)
      for (int h = 0; h < heads; ++h)
        for (int n = 0; n < N; ++n) {
          const T* gr = &G.at(b, n, h * dh);
          const T* pr = &P.at(b * heads + h, n, 0);
          for (int m = 0; m < M; ++m) {
            if (pr[m] == T(0)) continue;
            const T* vr = &V.at(b, m, h * dh);
            if (GP) {
              T acc = 0;
              for (int c = 0; c < dh; ++c) acc += gr[c] * vr[c];
              GP->at(b * heads + h, n, m) += acc;
            }
            if (GV) {
              T* gv = &GV->at(b, m, h * dh);
              for (int c = 0; c < dh; ++c) gv[c] += pr[m] * gr[c];
            }
          }
        }
  });
}

// Sparse neighbourhood aggregation for graph convolution:
// out[b, i] = sum over edges (b, i, j, w) of w * X[b, j]. X is [B, N, D].
struct WeightedEdge {
  int batch;
  int target;
  int source;
  double weight;
};

template <class T>
Var graph_aggregate(Tape<T>& tape, Var x, const std::vector<WeightedEdge>& edges) {
  const Tensor<T>& X = tape.value(x);
  const int D = X.dim(2);
  Tensor<T> Y(X.shape());
  for (const auto& e : edges) {
    const T w = T(e.weight);
    const T* src = &X.at(e.batch, e.source, 0);
    T* dst = &Y.at(e.batch, e.target, 0);
    for (int d = 0; d < D; ++d) dst[d] += w * src[d];
  }
  const Var out = tape.next();
  return tape.record(std::move(Y), {x}, [&tape, x, out, edges, D]() {
    const Tensor<T>& G = tape.grad(out);
    Tensor<T>& GX = tape.grad(x);
    for (const auto& e : edges) {
      const T w = T(e.weight);
      const T* g = &G.at(e.batch, e.target, 0);
      T* gx = &GX.at(e.batch, e.source, 0);
      for (int d = 0; d < D; ++d) gx[d] += w * g[d];
    }
  });
}

// [B, N, D] -> [B, N+1, D] with `token` [D] as row 0 of every batch element.
template <class T>
Var prepend_token(Tape<T>& tape, Var x, Var token) {
  const Tensor<T>& X = tape.value(x);
  const Tensor<T>& Tk = tape.value(token);
  const int B = X.dim(0), N = X.dim(1), D = X.dim(2);
  if (static_cast<int>(Tk.size()) != D) throw InvariantError("prepend_token: width mismatch");
  Tensor<T> Y({B, N + 1, D});
  for (int b = 0; b < B; ++b) {
    std::copy(Tk.data(), Tk.data() + D, &Y.at(b, 0, 0));
    if (N > 0) std::copy(&X.at(b, 0, 0), &X.at(b, 0, 0) + static_cast<std::size_t>(N) * D, &Y.at(b, 1, 0));
  }
  const Var out = tape.next();
  return tape.record(std::move(Y), {x, token}, [&tape, x, token, out, B, N, D]() {
    const Tensor<T>& G = tape.grad(out);
    if (tape.needs_grad(token)) {
      Tensor<T>& GT = tape.grad(token);
      for (int b = 0; b < B; ++b)
        for (int d = 0; d < D; ++d) GT[d] += G.at(b, 0, d);
    }
    if (tape.needs_grad(x)) {
      Tensor<T>& GX = tape.grad(x);
      for (int b = 0; b < B; ++b)
        for (int n = 0; n < N; ++n)
          for (int d = 0; d < D; ++d) GX.at(b, n, d) += G.at(b, n + 1, d);
    }
  });
}

// [B, N, D] -> [B, D], row `index` of each batch element.
template <class T>
Var select_row(Tape<T>& tape, Var x, int index) {
  const Tensor<T>& X = tape.value(x);
  const int B = X.dim(0), D = X.dim(2);
  Tensor<T> Y({B, D});
  for (int b = 0; b < B; ++b) std::copy(&X.at(b, index, 0), &X.at(b, index, 0) + D, &Y.at(b, 0));
  const Var out = tape.next();
  return tape.record(std::move(Y), {x}, [&tape, x, out, B, D, index]() {
    const Tensor<T>& G = tape.grad(out);
    Tensor<T>& GX = tape.grad(x);
    for (int b = 0; b < B; ++b)
      for (int d = 0; d < D; ++d) GX.at(b, index, d) += G.at(b, d);
  });
}

// Embedding-row lookup: table [R, D], indices -> [n, D].
template <class T>
Var lookup_rows(Tape<T>& tape, Var table, const std::vector<int>& indices) {
  const Tensor<T>& Tb = tape.value(table);
  const int D = Tb.dim(1);
  Tensor<T> Y({static_cast<int>(indices.size()), D});
  for (std::size_t i = 0; i < indices.size(); ++i)
    std::copy(&Tb.at(indices[i], 0), &Tb.at(indices[i], 0) + D, &Y.at(static_cast<int>(i), 0));
  const Var out = tape.next();
  return tape.record(std::move(Y), {table}, [&tape, table, out, indices, D]() {
    const Tensor<T>& G = tape.grad(out);
    Tensor<T>& GT = tape.grad(table);
    for (std::size_t i = 0; i < indices.size(); ++i)
      for (int d = 0; d < D; ++d) GT.at(indices[i], d) += G.at(static_cast<int>(i), d);
  });
}

// Mean 2-class (or C-class) cross-entropy of logits [B, C] against labels.
template <class T>
Var cross_entropy(Tape<T>& tape, Var logits, const std::vector<int>& labels) {
  const Tensor<T>& L = tape.value(logits);
  const int B = L.dim(0), C = L.dim(1);
  if (static_cast<int>(labels.size()) != B) throw InvariantError("cross_entropy: label count mismatch");
  Tensor<T> probs(L.shape());
  T total = 0;
  for (int b = 0; b < B; ++b) {
    int arg = 0;
    for (int c = 1; c < C; ++c)
      if (L.at(b, c) > L.at(b, arg)) arg = c;
    const T mx = L.at(b, arg);
    // log-sum-exp as mx + log1p(sum of the non-maximal terms), exact for confident rows
    T rest = 0;
    for (int c = 0; c < C; ++c)
      if (c != arg) rest += std::exp(L.at(b, c) - mx);
    const T lse = mx + std::log1p(rest);
    for (int c = 0; c < C; ++c) probs.at(b, c) = std::exp(L.at(b, c) - lse);
    total += (mx - L.at(b, labels[b])) + std::log1p(rest);
  }
  Tensor<T> Y({1}, T(total / T(B)));
  const Var out = tape.next();
  return tape.record(std::move(Y), {logits}, [&tape, logits, out, labels, B, C, probs = std::move(probs)]() {
    const T g = tape.grad(out)[0] / T(B);
    Tensor<T>& GL = tape.grad(logits);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) GL.at(b, c) += g * (probs.at(b, c) - (c == labels[b] ? T(1) : T(0)));
  });
}

// Scalar sum_i weights[i] * x[i]; a test harness for per-op gradient checks.
template <class T>
Var weighted_sum(Tape<T>& tape, Var x, const Tensor<T>& weights) {
  const Tensor<T>& X = tape.value(x);
  if (X.size() != weights.size()) throw InvariantError("weighted_sum: size mismatch");
  T acc = 0;
  for (std::size_t i = 0; i < X.size(); ++i) acc += X[i] * weights[i];
  const Var out = tape.next();
  return tape.record(Tensor<T>({1}, acc), {x}, [&tape, x, out, weights]() {
    const T g = tape.grad(out)[0];
    Tensor<T>& GX = tape.grad(x);
    for (std::size_t i = 0; i < GX.size(); ++i) GX[i] += g * weights[i];
  });
}

}  // namespace gpcrfilter::nn
