#include "jess/neural/kernels.hpp"

namespace jess::neural {

namespace {
Backend g_backend = Backend::Parallel;
}

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

namespace kops {

#define JESS_DISPATCH(fn, ...)                           \
    do {                                                 \
        if (g_backend == Backend::Serial)                \
            ref::fn(__VA_ARGS__);                        \
        else                                             \
            par::fn(__VA_ARGS__);                        \
    } while (0)

void conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, Tensor& y) {
    JESS_DISPATCH(conv1d_forward, x, w, b, stride, y);
}
void conv1d_backward(const Tensor& x, const Tensor& w, int stride, const Tensor& gy, Tensor& gx,
                     Tensor& gw, Tensor& gb) {
    JESS_DISPATCH(conv1d_backward, x, w, stride, gy, gx, gw, gb);
}
void tconv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, Tensor& y) {
    JESS_DISPATCH(tconv1d_forward, x, w, b, stride, y);
}
void tconv1d_backward(const Tensor& x, const Tensor& w, int stride, const Tensor& gy, Tensor& gx,
                      Tensor& gw, Tensor& gb) {
    JESS_DISPATCH(tconv1d_backward, x, w, stride, gy, gx, gw, gb);
}
void dense_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
    JESS_DISPATCH(dense_forward, x, w, b, y);
}
void dense_backward(const Tensor& x, const Tensor& w, const Tensor& gy, Tensor& gx, Tensor& gw,
                    Tensor& gb) {
    JESS_DISPATCH(dense_backward, x, w, gy, gx, gw, gb);
}
void batchnorm_forward_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                             Tensor& y, Tensor& mean, Tensor& var) {
    JESS_DISPATCH(batchnorm_forward_train, x, gamma, beta, eps, y, mean, var);
}
void batchnorm_forward_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                             const Tensor& running_mean, const Tensor& running_var, double eps,
                             Tensor& y) {
    JESS_DISPATCH(batchnorm_forward_infer, x, gamma, beta, running_mean, running_var, eps, y);
}
void batchnorm_backward(const Tensor& x, const Tensor& gamma, const Tensor& mean,
                        const Tensor& var, double eps, const Tensor& gy, Tensor& gx,
                        Tensor& ggamma, Tensor& gbeta) {
    JESS_DISPATCH(batchnorm_backward, x, gamma, mean, var, eps, gy, gx, ggamma, gbeta);
}
void relu_forward(const Tensor& x, Tensor& y) { JESS_DISPATCH(relu_forward, x, y); }
void relu_backward(const Tensor& x, const Tensor& gy, Tensor& gx) {
    JESS_DISPATCH(relu_backward, x, gy, gx);
}
void sigmoid_forward(const Tensor& x, Tensor& y) { JESS_DISPATCH(sigmoid_forward, x, y); }
void sigmoid_backward(const Tensor& y, const Tensor& gy, Tensor& gx) {
    JESS_DISPATCH(sigmoid_backward, y, gy, gx);
}

#undef JESS_DISPATCH

} // namespace kops
} // namespace jess::neural
