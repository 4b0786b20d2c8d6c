// Serial reference kernels. Deliberately plain loops; the OpenMP versions in
// kernels_omp.cpp must match these bit for bit.

#include "jess/neural/kernels.hpp"

#include <cmath>

namespace jess::neural {

namespace detail {

int conv1d_out_len(int in_len, int kernel, int stride) {
    return (in_len - kernel) / stride + 1;
}

int tconv1d_out_len(int in_len, int kernel, int stride) {
    return (in_len - 1) * stride + kernel;
}

void check_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
    if (x.shape.size() != 3 || w.shape.size() != 3 || b.shape.size() != 1) {
        throw ShapeError("conv1d: expected x:(B,Cin,L) w:(Cout,Cin,K) b:(Cout)");
    }
    if (w.shape[1] != x.shape[1]) throw ShapeError("conv1d: input channel mismatch");
    if (b.shape[0] != w.shape[0]) throw ShapeError("conv1d: bias/filter count mismatch");
    if (stride < 1) throw ShapeError("conv1d: stride must be >= 1");
    if (x.shape[2] < w.shape[2]) throw ShapeError("conv1d: input shorter than kernel");
}

void check_tconv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
    if (x.shape.size() != 3 || w.shape.size() != 3 || b.shape.size() != 1) {
        throw ShapeError("tconv1d: expected x:(B,Cin,L) w:(Cin,Cout,K) b:(Cout)");
    }
    if (w.shape[0] != x.shape[1]) throw ShapeError("tconv1d: input channel mismatch");
    if (b.shape[0] != w.shape[1]) throw ShapeError("tconv1d: bias/channel mismatch");
    if (stride < 1) throw ShapeError("tconv1d: stride must be >= 1");
}

void check_dense(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.shape.size() != 2 || w.shape.size() != 2 || b.shape.size() != 1) {
        throw ShapeError("dense: expected x:(B,In) w:(Out,In) b:(Out)");
    }
    if (w.shape[1] != x.shape[1]) throw ShapeError("dense: input width mismatch");
    if (b.shape[0] != w.shape[0]) throw ShapeError("dense: bias width mismatch");
}

void check_batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, bool training) {
    if (x.shape.size() != 3) throw ShapeError("batchnorm: expected x:(B,C,L)");
    if (gamma.shape != std::vector<int>{x.shape[1]} || beta.shape != std::vector<int>{x.shape[1]}) {
        throw ShapeError("batchnorm: gamma/beta must be (C)");
    }
    if (training && x.shape[0] < 2) {
        throw InputError("batchnorm: training mode requires batch size >= 2");
    }
}

} // namespace detail

namespace ref {

void conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, Tensor& y) {
    detail::check_conv1d(x, w, b, stride);
    const int batch = x.shape[0], cin = x.shape[1], in_len = x.shape[2];
    const int cout = w.shape[0], kernel = w.shape[2];
    const int out_len = detail::conv1d_out_len(in_len, kernel, stride);
    y = Tensor::zeros({batch, cout, out_len});

    for (int n = 0; n < batch; ++n) {
        for (int f = 0; f < cout; ++f) {
            for (int t = 0; t < out_len; ++t) {
                double acc = b.data[f];
                for (int c = 0; c < cin; ++c) {
                    for (int k = 0; k < kernel; ++k) {
                        acc += x.at(n, c, t * stride + k) * w.at(f, c, k);
                    }
                }
                y.at(n, f, t) = acc;
            }
        }
    }
}

void conv1d_backward(const Tensor& x, const Tensor& w, int stride, const Tensor& gy, Tensor& gx,
                     Tensor& gw, Tensor& gb) {
    const int batch = x.shape[0], cin = x.shape[1], in_len = x.shape[2];
    const int cout = w.shape[0], kernel = w.shape[2];
    const int out_len = detail::conv1d_out_len(in_len, kernel, stride);
    gy.require_shape({batch, cout, out_len}, "conv1d_backward gy");
    gx = Tensor::zeros(x.shape);
    gw = Tensor::zeros(w.shape);
    gb = Tensor::zeros({cout});

    for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < cin; ++c) {
            for (int i = 0; i < in_len; ++i) {
                double acc = 0.0;
                for (int f = 0; f < cout; ++f) {
                    for (int k = 0; k < kernel; ++k) {
                        const int pos = i - k;
                        if (pos >= 0 && pos % stride == 0) {
                            const int t = pos / stride;
                            if (t < out_len) acc += gy.at(n, f, t) * w.at(f, c, k);
                        }
                    }
                }
                gx.at(n, c, i) = acc;
            }
        }
    }
    for (int f = 0; f < cout; ++f) {
        for (int c = 0; c < cin; ++c) {
            for (int k = 0; k < kernel; ++k) {
                double acc = 0.0;
                for (int n = 0; n < batch; ++n) {
                    for (int t = 0; t < out_len; ++t) {
                        acc += gy.at(n, f, t) * x.at(n, c, t * stride + k);
                    }
                }
                gw.at(f, c, k) = acc;
            }
        }
    }
    for (int f = 0; f < cout; ++f) {
        double acc = 0.0;
        for (int n = 0; n < batch; ++n) {
            for (int t = 0; t < out_len; ++t) acc += gy.at(n, f, t);
        }
        gb.data[f] = acc;
    }
}

void tconv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, Tensor& y) {
    detail::check_tconv1d(x, w, b, stride);
    const int batch = x.shape[0], cin = x.shape[1], in_len = x.shape[2];
    const int cout = w.shape[1], kernel = w.shape[2];
    const int out_len = detail::tconv1d_out_len(in_len, kernel, stride);
    y = Tensor::zeros({batch, cout, out_len});

    // Gather form: y[n,f,j] = b[f] + sum over (c,i,k with i*stride+k == j).
    for (int n = 0; n < batch; ++n) {
        for (int f = 0; f < cout; ++f) {
            for (int j = 0; j < out_len; ++j) {
                double acc = b.data[f];
                for (int c = 0; c < cin; ++c) {
                    for (int k = 0; k < kernel; ++k) {
                        const int pos = j - k;
                        if (pos >= 0 && pos % stride == 0) {
                            const int i = pos / stride;
                            if (i < in_len) acc += x.at(n, c, i) * w.at(c, f, k);
                        }
                    }
                }
                y.at(n, f, j) = acc;
            }
        }
    }
}

void tconv1d_backward(const Tensor& x, const Tensor& w, int stride, const Tensor& gy, Tensor& gx,
                      Tensor& gw, Tensor& gb) {
    const int batch = x.shape[0], cin = x.shape[1], in_len = x.shape[2];
    const int cout = w.shape[1], kernel = w.shape[2];
    const int out_len = detail::tconv1d_out_len(in_len, kernel, stride);
    gy.require_shape({batch, cout, out_len}, "tconv1d_backward gy");
    gx = Tensor::zeros(x.shape);
    gw = Tensor::zeros(w.shape);
    gb = Tensor::zeros({cout});

    for (int n = 0; n < batch; ++n) {
        for (int c = 0; c < cin; ++c) {
            for (int i = 0; i < in_len; ++i) {
                double acc = 0.0;
                for (int f = 0; f < cout; ++f) {
                    for (int k = 0; k < kernel; ++k) {
                        acc += gy.at(n, f, i * stride + k) * w.at(c, f, k);
                    }
                }
                gx.at(n, c, i) = acc;
            }
        }
    }
    for (int c = 0; c < cin; ++c) {
        for (int f = 0; f < cout; ++f) {
            for (int k = 0; k < kernel; ++k) {
                double acc = 0.0;
                for (int n = 0; n < batch; ++n) {
                    for (int i = 0; i < in_len; ++i) {
                        acc += x.at(n, c, i) * gy.at(n, f, i * stride + k);
                    }
                }
                gw.at(c, f, k) = acc;
            }
        }
    }
    for (int f = 0; f < cout; ++f) {
        double acc = 0.0;
        for (int n = 0; n < batch; ++n) {
            for (int j = 0; j < out_len; ++j) acc += gy.at(n, f, j);
        }
        gb.data[f] = acc;
    }
}

void dense_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
    detail::check_dense(x, w, b);
    const int batch = x.shape[0], in = x.shape[1], out = w.shape[0];
    y = Tensor::zeros({batch, out});
    for (int n = 0; n < batch; ++n) {
        for (int o = 0; o < out; ++o) {
            double acc = b.data[o];
            for (int i = 0; i < in; ++i) acc += x.at(n, i) * w.at(o, i);
            y.at(n, o) = acc;
        }
    }
}

void dense_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx, Tensor& gw,
                    Tensor& gb) {
    const int batch = x.shape[0], in = x.shape[1], out = w.shape[0];
    gy.require_shape({batch, out}, "dense_backward gy");
    gx = Tensor::zeros(x.shape);
    gw = Tensor::zeros(w.shape);
    gb = Tensor::zeros({out});

    for (int n = 0; n < batch; ++n) {
        for (int i = 0; i < in; ++i) {
            double acc = 0.0;
            for (int o = 0; o < out; ++o) acc += gy.at(n, o) * w.at(o, i);
            gx.at(n, i) = acc;
        }
    }
    for (int o = 0; o < out; ++o) {
        for (int i = 0; i < in; ++i) {
            double acc = 0.0;
            for (int n = 0; n < batch; ++n) acc += gy.at(n, o) * x.at(n, i);
            gw.at(o, i) = acc;
        }
    }
    for (int o = 0; o < out; ++o) {
        double acc = 0.0;
        for (int n = 0; n < batch; ++n) acc += gy.at(n, o);
        gb.data[o] = acc;
    }
}

void batchnorm_forward_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                             Tensor& y, Tensor& mean, Tensor& var) {
    detail::check_batchnorm(x, gamma, beta, true);
    const int batch = x.shape[0], chans = x.shape[1], len = x.shape[2];
    const double count = static_cast<double>(batch) * len;
    y = Tensor::zeros(x.shape);
    mean = Tensor::zeros({chans});
    var = Tensor::zeros({chans});

    for (int c = 0; c < chans; ++c) {
        double sum = 0.0;
        for (int n = 0; n < batch; ++n) {
            for (int t = 0; t < len; ++t) sum += x.at(n, c, t);
        }
        const double mu = sum / count;
        double sq = 0.0;
        for (int n = 0; n < batch; ++n) {
            for (int t = 0; t < len; ++t) {
                const double d = x.at(n, c, t) - mu;
                sq += d * d;
            }
        }
        const double v = sq / count; // biased
        mean.data[c] = mu;
        var.data[c] = v;
        const double inv_std = 1.0 / std::sqrt(v + eps);
        for (int n = 0; n < batch; ++n) {
            for (int t = 0; t < len; ++t) {
                y.at(n, c, t) = gamma.data[c] * (x.at(n, c, t) - mu) * inv_std + beta.data[c];
            }
        }
    }
}

void batchnorm_forward_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                             const Tensor& running_mean, const Tensor& running_var, double eps,
                             Tensor& y) {
    detail::check_batchnorm(x, gamma, beta, false);
    const int batch = x.shape[0], chans = x.shape[1], len = x.shape[2];
    y = Tensor::zeros(x.shape);
    for (int c = 0; c < chans; ++c) {
        const double inv_std = 1.0 / std::sqrt(running_var.data[c] + eps);
        const double mu = running_mean.data[c];
        for (int n = 0; n < batch; ++n) {
            for (int t = 0; t < len; ++t) {
                y.at(n, c, t) = gamma.data[c] * (x.at(n, c, t) - mu) * inv_std + beta.data[c];
            }
        }
    }
}

void batchnorm_backward(const Tensor& x, const Tensor& gamma, const Tensor& mean,
                        const Tensor& var, double eps, const Tensor& gy, Tensor& gx,
                        Tensor& ggamma, Tensor& gbeta) {
    const int batch = x.shape[0], chans = x.shape[1], len = x.shape[2];
    gy.require_shape(x.shape, "batchnorm_backward gy");
    const double count = static_cast<double>(batch) * len;
    gx = Tensor::zeros(x.shape);
    ggamma = Tensor::zeros({chans});
    gbeta = Tensor::zeros({chans});

    for (int c = 0; c < chans; ++c) {
        const double mu = mean.data[c];
        const double inv_std = 1.0 / std::sqrt(var.data[c] + eps);
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (int n = 0; n < batch; ++n) {
            for (int t = 0; t < len; ++t) {
                const double xhat = (x.at(n, c, t) - mu) * inv_std;
                sum_gy += gy.at(n, c, t);
                sum_gy_xhat += gy.at(n, c, t) * xhat;
            }
        }
        ggamma.data[c] = sum_gy_xhat;
        gbeta.data[c] = sum_gy;
        const double g = gamma.data[c];
        for (int n = 0; n < batch; ++n) {
            for (int t = 0; t < len; ++t) {
                const double xhat = (x.at(n, c, t) - mu) * inv_std;
                gx.at(n, c, t) =
                    g * inv_std *
                    (gy.at(n, c, t) - sum_gy / count - xhat * sum_gy_xhat / count);
            }
        }
    }
}

void relu_forward(const Tensor& x, Tensor& y) {
    y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
}

void relu_backward(const Tensor& x, const Tensor& gy, Tensor& gx) {
    gy.require_shape(x.shape, "relu_backward gy");
    gx = Tensor::zeros(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        gx.data[i] = x.data[i] > 0.0 ? gy.data[i] : 0.0;
    }
}

void sigmoid_forward(const Tensor& x, Tensor& y) {
    y = x;
    for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
}

void sigmoid_backward(const Tensor& y, const Tensor& gy, Tensor& gx) {
    gy.require_shape(y.shape, "sigmoid_backward gy");
    gx = Tensor::zeros(y.shape);
    for (size_t i = 0; i < y.data.size(); ++i) {
        gx.data[i] = gy.data[i] * y.data[i] * (1.0 - y.data[i]);
    }
}

} // namespace ref
} // namespace jess::neural
