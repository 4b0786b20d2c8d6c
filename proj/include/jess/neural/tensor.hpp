#pragma once

#include "jess/errors.hpp"

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace jess::neural {

// Dense row-major tensor. Double precision in memory; the on-disk weight
// format stores 32-bit floats.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;

    static Tensor zeros(std::vector<int> shape) {
        Tensor t;
        t.shape = std::move(shape);
        t.data.assign(t.numel_of(t.shape), 0.0);
        return t;
    }

    static Tensor full(std::vector<int> shape, double value) {
        Tensor t = zeros(std::move(shape));
        std::fill(t.data.begin(), t.data.end(), value);
        return t;
    }

    size_t numel() const { return data.size(); }

    int dim(size_t i) const { return shape.at(i); }

    double& at(int i) { return data[static_cast<size_t>(i)]; }

    // (d0, d1) indexing for 2-D tensors
    double& at(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }

    // (d0, d1, d2) indexing for 3-D tensors
    double& at(int i, int j, int k) {
        return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double at(int i, int j, int k) const {
        return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    void require_shape(const std::vector<int>& expect, const char* what) const {
        if (shape != expect) {
            throw ShapeError(std::string(what) + ": shape mismatch, got " + shape_str(shape) +
                             ", expected " + shape_str(expect));
        }
    }

    static std::string shape_str(const std::vector<int>& s) {
        std::string out = "(";
        for (size_t i = 0; i < s.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(s[i]);
        }
        return out + ")";
    }

private:
    static size_t numel_of(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            if (d <= 0) throw ShapeError("tensor dimensions must be positive");
            n *= static_cast<size_t>(d);
        }
        return n;
    }
};

} // namespace jess::neural
