#pragma once

#include "jess/neural/tensor.hpp"

namespace jess::neural {

// Layer kernels exist twice with identical contracts: jess::neural::ref holds
// the plain serial loops used as the testing reference, jess::neural::par
// holds the OpenMP versions used in production. Both accumulate each output
// element in the same order, so results are bit-identical and independent of
// the thread count.
//
// Shapes (row-major):
//   conv1d    x:(B,Cin,L)  w:(Cout,Cin,K)  b:(Cout)  y:(B,Cout,Lo), Lo=(L-K)/stride+1
//   tconv1d   x:(B,Cin,L)  w:(Cin,Cout,K)  b:(Cout)  y:(B,Cout,Lo), Lo=(L-1)*stride+K
//   dense     x:(B,In)     w:(Out,In)      b:(Out)   y:(B,Out)
//   batchnorm x:(B,C,L), per-channel statistics over batch x time
#define JESS_DECLARE_KERNELS()                                                               \
    void conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride,       \
                        Tensor& y);                                                          \
    void conv1d_backward(const Tensor& x, const Tensor& w, int stride, const Tensor& gy,     \
                         Tensor& gx, Tensor& gw, Tensor& gb);                                \
    void tconv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride,      \
                         Tensor& y);                                                         \
    void tconv1d_backward(const Tensor& x, const Tensor& w, int stride, const Tensor& gy,    \
                          Tensor& gx, Tensor& gw, Tensor& gb);                               \
    void dense_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y);        \
    void dense_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx,      \
                        Tensor& gw, Tensor& gb);                                             \
    void batchnorm_forward_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,   \
                                 double eps, Tensor& y, Tensor& mean, Tensor& var);          \
    void batchnorm_forward_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta,   \
                                 const Tensor& running_mean, const Tensor& running_var,      \
                                 double eps, Tensor& y);                                     \
    void batchnorm_backward(const Tensor& x, const Tensor& gamma, const Tensor& mean,        \
                            const Tensor& var, double eps, const Tensor& gy, Tensor& gx,     \
                            Tensor& ggamma, Tensor& gbeta);                                  \
    void relu_forward(const Tensor& x, Tensor& y);                                           \
    void relu_backward(const Tensor& x, const Tensor& gy, Tensor& gx);                       \
    void sigmoid_forward(const Tensor& x, Tensor& y);                                        \
    void sigmoid_backward(const Tensor& y, const Tensor& gy, Tensor& gx)

namespace ref {
JESS_DECLARE_KERNELS();
}

namespace par {
JESS_DECLARE_KERNELS();
}

#undef JESS_DECLARE_KERNELS

enum class Backend { Serial, Parallel };

Backend backend();
void set_backend(Backend b);

// Dispatch to the active backend.
namespace kops {
void conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, Tensor& y);
void conv1d_backward(const Tensor& x, const Tensor& w, int stride, const Tensor& gy, Tensor& gx,
                     Tensor& gw, Tensor& gb);
void tconv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, Tensor& y);
void tconv1d_backward(const Tensor& x, const Tensor& w, int stride, const Tensor& gy, Tensor& gx,
                      Tensor& gw, Tensor& gb);
void dense_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y);
void dense_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx, Tensor& gw,
                    Tensor& gb);
void batchnorm_forward_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                             Tensor& y, Tensor& mean, Tensor& var);
void batchnorm_forward_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                             const Tensor& running_mean, const Tensor& running_var, double eps,
                             Tensor& y);
void batchnorm_backward(const Tensor& x, const Tensor& gamma, const Tensor& mean,
                        const Tensor& var, double eps, const Tensor& gy, Tensor& gx,
                        Tensor& ggamma, Tensor& gbeta);
void relu_forward(const Tensor& x, Tensor& y);
void relu_backward(const Tensor& x, const Tensor& gy, Tensor& gx);
void sigmoid_forward(const Tensor& x, Tensor& y);
void sigmoid_backward(const Tensor& y, const Tensor& gy, Tensor& gx);
} // namespace kops

// Shared shape checks; throw ShapeError on mismatch.
namespace detail {
void check_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride);
void check_tconv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride);
void check_dense(const Tensor& x, const Tensor& w, const Tensor& b);
void check_batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, bool training);
int conv1d_out_len(int in_len, int kernel, int stride);
int tconv1d_out_len(int in_len, int kernel, int stride);
} // namespace detail

} // namespace jess::neural
