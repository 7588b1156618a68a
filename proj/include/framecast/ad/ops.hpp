#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <cblas.h>

#include "framecast/ad/tensor.hpp"

namespace framecast::ad {

enum class RunMode { train, eval };

namespace detail {

// Row-major C = alpha * op(A) * op(B) + beta * C.
inline void gemm(bool trans_a, bool trans_b, int m, int n, int k,
                 double alpha, const double* a, int lda,
                 const double* b, int ldb, double beta, double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans,
                m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw UsageError(msg);
}

// Gathers conv patches into a (C*kh*kw) x (oh*ow) matrix for one sample.
inline void im2col(const double* x, int C, int H, int W, int kh, int kw,
                   int stride, int pad, int oh, int ow, double* cols) {
    for (int c = 0; c < C; ++c) {
        for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
                double* row = cols + ((static_cast<size_t>(c) * kh + i) * kw + j) *
                                         (static_cast<size_t>(oh) * ow);
                for (int y = 0; y < oh; ++y) {
                    int iy = y * stride - pad + i;
                    double* dst = row + static_cast<size_t>(y) * ow;
                    if (iy < 0 || iy >= H) {
                        std::fill(dst, dst + ow, 0.0);
                        continue;
                    }
                    const double* src = x + (static_cast<size_t>(c) * H + iy) * W;
                    for (int xo = 0; xo < ow; ++xo) {
                        int ix = xo * stride - pad + j;
                        dst[xo] = (ix >= 0 && ix < W) ? src[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// Scatter-adds a cols matrix back onto the sample gradient (inverse of im2col).
inline void col2im_add(const double* cols, int C, int H, int W, int kh, int kw,
                       int stride, int pad, int oh, int ow, double* dx) {
    for (int c = 0; c < C; ++c) {
        for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
                const double* row = cols + ((static_cast<size_t>(c) * kh + i) * kw + j) *
                                               (static_cast<size_t>(oh) * ow);
                for (int y = 0; y < oh; ++y) {
                    int iy = y * stride - pad + i;
                    if (iy < 0 || iy >= H) continue;
                    double* dst = dx + (static_cast<size_t>(c) * H + iy) * W;
                    const double* src = row + static_cast<size_t>(y) * ow;
                    for (int xo = 0; xo < ow; ++xo) {
                        int ix = xo * stride - pad + j;
                        if (ix >= 0 && ix < W) dst[ix] += src[xo];
                    }
                }
            }
        }
    }
}

} // namespace detail

/// y = x W + b for x:[B,in], W:[in,out], b:[out].
inline TensorPtr dense_affine(Tape* tape, const TensorPtr& x, const TensorPtr& W,
                              const TensorPtr& b) {
    detail::require(x->shape.rank() == 2 && W->shape.rank() == 2 && b->shape.rank() == 1,
                    "dense_affine expects x:[B,in], W:[in,out], b:[out]");
    const int B = static_cast<int>(x->shape[0]);
    const int in = static_cast<int>(x->shape[1]);
    const int out = static_cast<int>(W->shape[1]);
    detail::require(W->shape[0] == in, "dense_affine: W rows " + W->shape.str() +
                                           " do not match input width " + x->shape.str());
    detail::require(b->shape[0] == out, "dense_affine: bias width mismatch");

    auto y = make_tensor(Shape{B, out});
    for (int r = 0; r < B; ++r)
        std::copy(b->data.begin(), b->data.end(), y->data.begin() + static_cast<size_t>(r) * out);
    detail::gemm(false, false, B, out, in, 1.0, x->data.data(), in, W->data.data(), out,
                 1.0, y->data.data(), out);

    if (tape) {
        tape->record(y, [x, W, b, y, B, in, out] {
            const double* dy = y->grad.data();
            if (x->needs_grad) {
                x->ensure_grad();
                detail::gemm(false, true, B, in, out, 1.0, dy, out, W->data.data(), out,
                             1.0, x->grad.data(), in);
            }
            if (W->needs_grad) {
                W->ensure_grad();
                detail::gemm(true, false, in, out, B, 1.0, x->data.data(), in, dy, out,
                             1.0, W->grad.data(), out);
            }
            if (b->needs_grad) {
                b->ensure_grad();
                for (int r = 0; r < B; ++r)
                    for (int c = 0; c < out; ++c)
                        b->grad[c] += dy[static_cast<size_t>(r) * out + c];
            }
        });
    }
    return y;
}

/// Cross-correlation with zero padding. x:[B,C,H,W], k:[F,C,kh,kw].
inline TensorPtr conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& k,
                        int stride, int pad) {
    detail::require(x->shape.rank() == 4 && k->shape.rank() == 4,
                    "conv2d expects x:[B,C,H,W] and k:[F,C,kh,kw]");
    detail::require(stride >= 1 && pad >= 0, "conv2d: stride must be >= 1 and pad >= 0");
    const int B = static_cast<int>(x->shape[0]), C = static_cast<int>(x->shape[1]);
    const int H = static_cast<int>(x->shape[2]), W = static_cast<int>(x->shape[3]);
    const int F = static_cast<int>(k->shape[0]);
    const int kh = static_cast<int>(k->shape[2]), kw = static_cast<int>(k->shape[3]);
    detail::require(k->shape[1] == C, "conv2d: kernel channel count mismatch");
    detail::require(kh <= H + 2 * pad && kw <= W + 2 * pad,
                    "conv2d: kernel larger than padded input");
    const int oh = (H + 2 * pad - kh) / stride + 1;
    const int ow = (W + 2 * pad - kw) / stride + 1;
    const int ckk = C * kh * kw;
    const size_t hw = static_cast<size_t>(oh) * ow;

    auto y = make_tensor(Shape{B, F, oh, ow});
    std::vector<double> cols(static_cast<size_t>(ckk) * hw);
    for (int bta = 0; bta < B; ++bta) {
        const double* xs = x->data.data() + static_cast<size_t>(bta) * C * H * W;
        detail::im2col(xs, C, H, W, kh, kw, stride, pad, oh, ow, cols.data());
        detail::gemm(false, false, F, static_cast<int>(hw), ckk, 1.0, k->data.data(), ckk,
                     cols.data(), static_cast<int>(hw), 0.0,
                     y->data.data() + static_cast<size_t>(bta) * F * hw, static_cast<int>(hw));
    }

    if (tape) {
        tape->record(y, [x, k, y, B, C, H, W, F, kh, kw, stride, pad, oh, ow, ckk, hw] {
            std::vector<double> cols(static_cast<size_t>(ckk) * hw);
            std::vector<double> dcols;
            if (x->needs_grad) {
                x->ensure_grad();
                dcols.resize(cols.size());
            }
            if (k->needs_grad) k->ensure_grad();
            for (int bta = 0; bta < B; ++bta) {
                const double* dys = y->grad.data() + static_cast<size_t>(bta) * F * hw;
                if (k->needs_grad) {
                    const double* xs = x->data.data() + static_cast<size_t>(bta) * C * H * W;
                    detail::im2col(xs, C, H, W, kh, kw, stride, pad, oh, ow, cols.data());
                    detail::gemm(false, true, F, ckk, static_cast<int>(hw), 1.0, dys,
                                 static_cast<int>(hw), cols.data(), static_cast<int>(hw),
                                 1.0, k->grad.data(), ckk);
                }
                if (x->needs_grad) {
                    detail::gemm(true, false, ckk, static_cast<int>(hw), F, 1.0,
                                 k->data.data(), ckk, dys, static_cast<int>(hw), 0.0,
                                 dcols.data(), static_cast<int>(hw));
                    detail::col2im_add(dcols.data(), C, H, W, kh, kw, stride, pad, oh, ow,
                                       x->grad.data() + static_cast<size_t>(bta) * C * H * W);
                }
            }
        });
    }
    return y;
}

/// Per-feature batch normalization over [B,F] or per-channel over [B,C,H,W].
/// Train mode normalizes with batch statistics (biased variance) and folds them
/// into the running buffers; eval mode normalizes with the running buffers.
inline TensorPtr batch_norm(Tape* tape, const TensorPtr& x, const TensorPtr& gamma,
                            const TensorPtr& beta, RunMode mode,
                            const TensorPtr& running_mean, const TensorPtr& running_var,
                            double momentum = 0.9, double eps = 1e-5) {
    detail::require(x->shape.rank() == 2 || x->shape.rank() == 4,
                    "batch_norm expects a [B,F] or [B,C,H,W] tensor");
    const int B = static_cast<int>(x->shape[0]);
    const int C = static_cast<int>(x->shape[1]);
    const int M = x->shape.rank() == 4 ? static_cast<int>(x->shape[2] * x->shape[3]) : 1;
    detail::require(gamma->numel() == C && beta->numel() == C &&
                        running_mean->numel() == C && running_var->numel() == C,
                    "batch_norm: parameter width must equal the feature count");
    if (mode == RunMode::train)
        detail::require(B >= 2, "batch_norm: train mode requires batch size >= 2");

    const size_t n_red = static_cast<size_t>(B) * M;
    auto mean = std::make_shared<std::vector<double>>(C, 0.0);
    auto inv_std = std::make_shared<std::vector<double>>(C, 0.0);

    if (mode == RunMode::train) {
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int n = 0; n < B; ++n) {
                const double* p = x->data.data() + (static_cast<size_t>(n) * C + c) * M;
                for (int m = 0; m < M; ++m) s += p[m];
            }
            (*mean)[c] = s / static_cast<double>(n_red);
        }
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int n = 0; n < B; ++n) {
                const double* p = x->data.data() + (static_cast<size_t>(n) * C + c) * M;
                for (int m = 0; m < M; ++m) {
                    double d = p[m] - (*mean)[c];
                    s += d * d;
                }
            }
            double var = s / static_cast<double>(n_red);
            (*inv_std)[c] = 1.0 / std::sqrt(var + eps);
            running_mean->data[c] = momentum * running_mean->data[c] + (1 - momentum) * (*mean)[c];
            running_var->data[c] = momentum * running_var->data[c] + (1 - momentum) * var;
        }
    } else {
        for (int c = 0; c < C; ++c) {
            (*mean)[c] = running_mean->data[c];
            (*inv_std)[c] = 1.0 / std::sqrt(running_var->data[c] + eps);
        }
    }

    auto y = make_tensor(x->shape);
    for (int n = 0; n < B; ++n) {
        for (int c = 0; c < C; ++c) {
            const double* px = x->data.data() + (static_cast<size_t>(n) * C + c) * M;
            double* py = y->data.data() + (static_cast<size_t>(n) * C + c) * M;
            const double g = gamma->data[c], bt = beta->data[c];
            const double mu = (*mean)[c], is = (*inv_std)[c];
            for (int m = 0; m < M; ++m) py[m] = g * (px[m] - mu) * is + bt;
        }
    }

    if (tape) {
        const bool train = mode == RunMode::train;
        tape->record(y, [x, gamma, beta, y, mean, inv_std, B, C, M, n_red, train] {
            const double* dy = y->grad.data();
            if (gamma->needs_grad) gamma->ensure_grad();
            if (beta->needs_grad) beta->ensure_grad();
            if (x->needs_grad) x->ensure_grad();
            for (int c = 0; c < C; ++c) {
                const double mu = (*mean)[c], is = (*inv_std)[c], g = gamma->data[c];
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (int n = 0; n < B; ++n) {
                    const size_t base = (static_cast<size_t>(n) * C + c) * M;
                    for (int m = 0; m < M; ++m) {
                        const double xhat = (x->data[base + m] - mu) * is;
                        sum_dy += dy[base + m];
                        sum_dy_xhat += dy[base + m] * xhat;
                    }
                }
                if (gamma->needs_grad) gamma->grad[c] += sum_dy_xhat;
                if (beta->needs_grad) beta->grad[c] += sum_dy;
                if (!x->needs_grad) continue;
                const double inv_n = 1.0 / static_cast<double>(n_red);
                for (int n = 0; n < B; ++n) {
                    const size_t base = (static_cast<size_t>(n) * C + c) * M;
                    for (int m = 0; m < M; ++m) {
                        if (train) {
                            const double xhat = (x->data[base + m] - mu) * is;
                            x->grad[base + m] += g * is *
                                (dy[base + m] - inv_n * sum_dy - inv_n * xhat * sum_dy_xhat);
                        } else {
                            x->grad[base + m] += g * is * dy[base + m];
                        }
                    }
                }
            }
        });
    }
    return y;
}

/// Elementwise max(0, x); the subgradient at exactly 0 is taken as 0.
inline TensorPtr relu(Tape* tape, const TensorPtr& x) {
    auto y = make_tensor(x->shape);
    for (size_t i = 0; i < x->data.size(); ++i) y->data[i] = x->data[i] > 0 ? x->data[i] : 0.0;
    if (tape) {
        tape->record(y, [x, y] {
            if (!x->needs_grad) return;
            x->ensure_grad();
            for (size_t i = 0; i < x->data.size(); ++i)
                if (x->data[i] > 0) x->grad[i] += y->grad[i];
        });
    }
    return y;
}

/// Square-window max pooling; gradient routes to the first argmax per window.
/// Padded positions are ignored rather than treated as zeros.
inline TensorPtr max_pool2d(Tape* tape, const TensorPtr& x, int window, int stride,
                            int pad = 0) {
    detail::require(x->shape.rank() == 4, "max_pool2d expects a [B,C,H,W] tensor");
    detail::require(window >= 1 && stride >= 1 && pad >= 0, "max_pool2d: invalid window/stride/pad");
    const int B = static_cast<int>(x->shape[0]), C = static_cast<int>(x->shape[1]);
    const int H = static_cast<int>(x->shape[2]), W = static_cast<int>(x->shape[3]);
    detail::require(window <= H + 2 * pad && window <= W + 2 * pad,
                    "max_pool2d: window exceeds padded spatial extent");
    const int oh = (H + 2 * pad - window) / stride + 1;
    const int ow = (W + 2 * pad - window) / stride + 1;

    auto y = make_tensor(Shape{B, C, oh, ow});
    auto argmax = std::make_shared<std::vector<int32_t>>(y->data.size());
    size_t q = 0;
    for (int n = 0; n < B; ++n) {
        for (int c = 0; c < C; ++c) {
            const double* plane = x->data.data() + (static_cast<size_t>(n) * C + c) * H * W;
            for (int yo = 0; yo < oh; ++yo) {
                for (int xo = 0; xo < ow; ++xo, ++q) {
                    double best = -std::numeric_limits<double>::infinity();
                    int32_t best_idx = -1;
                    for (int i = 0; i < window; ++i) {
                        const int iy = yo * stride - pad + i;
                        if (iy < 0 || iy >= H) continue;
                        for (int j = 0; j < window; ++j) {
                            const int ix = xo * stride - pad + j;
                            if (ix < 0 || ix >= W) continue;
                            const double v = plane[iy * W + ix];
                            if (v > best) { best = v; best_idx = iy * W + ix; }
                        }
                    }
                    y->data[q] = best;
                    (*argmax)[q] = best_idx;
                }
            }
        }
    }

    if (tape) {
        const size_t plane_sz = static_cast<size_t>(H) * W;
        const size_t out_plane = static_cast<size_t>(oh) * ow;
        tape->record(y, [x, y, argmax, B, C, plane_sz, out_plane] {
            if (!x->needs_grad) return;
            x->ensure_grad();
            size_t q = 0;
            for (int n = 0; n < B; ++n)
                for (int c = 0; c < C; ++c) {
                    double* dplane = x->grad.data() + (static_cast<size_t>(n) * C + c) * plane_sz;
                    for (size_t m = 0; m < out_plane; ++m, ++q)
                        dplane[(*argmax)[q]] += y->grad[q];
                }
        });
    }
    return y;
}

/// Mean over the spatial extent: [B,C,H,W] -> [B,C].
inline TensorPtr global_avg_pool(Tape* tape, const TensorPtr& x) {
    detail::require(x->shape.rank() == 4, "global_avg_pool expects a [B,C,H,W] tensor");
    const int B = static_cast<int>(x->shape[0]), C = static_cast<int>(x->shape[1]);
    const size_t M = static_cast<size_t>(x->shape[2] * x->shape[3]);
    auto y = make_tensor(Shape{B, C});
    for (int n = 0; n < B; ++n)
        for (int c = 0; c < C; ++c) {
            const double* p = x->data.data() + (static_cast<size_t>(n) * C + c) * M;
            double s = 0.0;
            for (size_t m = 0; m < M; ++m) s += p[m];
            y->data[static_cast<size_t>(n) * C + c] = s / static_cast<double>(M);
        }
    if (tape) {
        tape->record(y, [x, y, B, C, M] {
            if (!x->needs_grad) return;
            x->ensure_grad();
            const double inv = 1.0 / static_cast<double>(M);
            for (int n = 0; n < B; ++n)
                for (int c = 0; c < C; ++c) {
                    const double g = y->grad[static_cast<size_t>(n) * C + c] * inv;
                    double* p = x->grad.data() + (static_cast<size_t>(n) * C + c) * M;
                    for (size_t m = 0; m < M; ++m) p[m] += g;
                }
        });
    }
    return y;
}

/// Inverted dropout: train mode zeroes each element with probability `rate`
/// and scales survivors by 1/(1-rate); eval mode is the identity.
inline TensorPtr dropout(Tape* tape, const TensorPtr& x, double rate, RunMode mode,
                         std::mt19937_64& rng) {
    detail::require(rate >= 0.0 && rate < 1.0, "dropout rate must lie in [0,1)");
    if (mode == RunMode::eval || rate == 0.0) {
        auto y = make_tensor(x->shape, x->data);
        if (tape) {
            tape->record(y, [x, y] {
                if (!x->needs_grad) return;
                x->ensure_grad();
                for (size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += y->grad[i];
            });
        }
        return y;
    }
    const double scale = 1.0 / (1.0 - rate);
    auto mask = std::make_shared<std::vector<uint8_t>>(x->data.size());
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto y = make_tensor(x->shape);
    for (size_t i = 0; i < x->data.size(); ++i) {
        const bool keep = uni(rng) >= rate;
        (*mask)[i] = keep;
        y->data[i] = keep ? x->data[i] * scale : 0.0;
    }
    if (tape) {
        tape->record(y, [x, y, mask, scale] {
            if (!x->needs_grad) return;
            x->ensure_grad();
            for (size_t i = 0; i < x->grad.size(); ++i)
                if ((*mask)[i]) x->grad[i] += y->grad[i] * scale;
        });
    }
    return y;
}

/// Feature-axis concatenation of [B,d_i] tensors in the given order.
inline TensorPtr concat_features(Tape* tape, const std::vector<TensorPtr>& parts) {
    detail::require(!parts.empty(), "concat_features: empty input list");
    const int B = static_cast<int>(parts.front()->shape[0]);
    int64_t total = 0;
    for (const auto& p : parts) {
        detail::require(p->shape.rank() == 2, "concat_features expects [B,d] tensors");
        detail::require(p->shape[0] == B, "concat_features: batch dimension mismatch");
        total += p->shape[1];
    }
    auto y = make_tensor(Shape{B, total});
    int64_t off = 0;
    for (const auto& p : parts) {
        const int64_t d = p->shape[1];
        for (int n = 0; n < B; ++n)
            std::copy(p->data.begin() + n * d, p->data.begin() + (n + 1) * d,
                      y->data.begin() + n * total + off);
        off += d;
    }
    if (tape) {
        tape->record(y, [parts, y, B, total] {
            int64_t off = 0;
            for (const auto& p : parts) {
                const int64_t d = p->shape[1];
                if (p->needs_grad) {
                    p->ensure_grad();
                    for (int n = 0; n < B; ++n)
                        for (int64_t c = 0; c < d; ++c)
                            p->grad[n * d + c] += y->grad[n * total + off + c];
                }
                off += d;
            }
        });
    }
    return y;
}

/// Elementwise sum of two same-shape tensors.
inline TensorPtr add(Tape* tape, const TensorPtr& x, const TensorPtr& y_in) {
    detail::require(x->shape == y_in->shape, "add: shape mismatch " + x->shape.str() +
                                                 " vs " + y_in->shape.str());
    auto y = make_tensor(x->shape);
    for (size_t i = 0; i < x->data.size(); ++i) y->data[i] = x->data[i] + y_in->data[i];
    if (tape) {
        tape->record(y, [x, y_in, y] {
            for (const auto& t : {x, y_in}) {
                if (!t->needs_grad) continue;
                t->ensure_grad();
                for (size_t i = 0; i < t->grad.size(); ++i) t->grad[i] += y->grad[i];
            }
        });
    }
    return y;
}

/// Mean of squared residuals over every entry.
inline TensorPtr mse_loss(Tape* tape, const TensorPtr& pred, const TensorPtr& target) {
    detail::require(pred->shape == target->shape, "mse_loss: shape mismatch");
    const double inv_n = 1.0 / static_cast<double>(pred->numel());
    double s = 0.0;
    for (size_t i = 0; i < pred->data.size(); ++i) {
        const double d = pred->data[i] - target->data[i];
        s += d * d;
    }
    auto y = make_tensor(Shape{1}, {s * inv_n});
    if (tape) {
        tape->record(y, [pred, target, y, inv_n] {
            const double g = y->grad[0] * 2.0 * inv_n;
            if (pred->needs_grad) {
                pred->ensure_grad();
                for (size_t i = 0; i < pred->data.size(); ++i)
                    pred->grad[i] += g * (pred->data[i] - target->data[i]);
            }
            if (target->needs_grad) {
                target->ensure_grad();
                for (size_t i = 0; i < target->data.size(); ++i)
                    target->grad[i] -= g * (pred->data[i] - target->data[i]);
            }
        });
    }
    return y;
}

/// lambda * sum of squared entries over the given weight tensors.
inline TensorPtr l2_penalty(Tape* tape, const std::vector<TensorPtr>& weights, double lambda) {
    detail::require(lambda >= 0.0, "l2_penalty: lambda must be >= 0");
    double s = 0.0;
    for (const auto& w : weights)
        for (double v : w->data) s += v * v;
    auto y = make_tensor(Shape{1}, {lambda * s});
    if (tape) {
        tape->record(y, [weights, y, lambda] {
            const double g = y->grad[0] * 2.0 * lambda;
            for (const auto& w : weights) {
                if (!w->needs_grad) continue;
                w->ensure_grad();
                for (size_t i = 0; i < w->data.size(); ++i) w->grad[i] += g * w->data[i];
            }
        });
    }
    return y;
}

/// Sum of all entries down to a scalar.
inline TensorPtr reduce_sum(Tape* tape, const TensorPtr& x) {
    double s = 0.0;
    for (double v : x->data) s += v;
    auto y = make_tensor(Shape{1}, {s});
    if (tape) {
        tape->record(y, [x, y] {
            if (!x->needs_grad) return;
            x->ensure_grad();
            for (size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += y->grad[0];
        });
    }
    return y;
}

} // namespace framecast::ad
