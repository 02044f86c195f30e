#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "cmsc/common.hpp"

namespace cmsc {

// Dense row-major tensor of 64-bit reals. Feature maps use H x W x C
// layout (channel fastest), packed features K x C, weights KH x KW x Cg x Cout.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), fill);
    }
    static Tensor from(std::vector<int> s, std::vector<double> values) {
        Tensor t;
        t.shape = std::move(s);
        check(static_cast<long long>(values.size()) == numel_of(t.shape),
              "Tensor::from: data length does not match shape");
        t.data = std::move(values);
        return t;
    }

    static long long numel_of(const std::vector<int>& s) {
        long long n = 1;
        for (int d : s) n *= d;
        return n;
    }

    long long numel() const { return static_cast<long long>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }

    // H x W x C accessors
    double& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * shape[1] + x) * shape[2] + c];
    }
    const double& at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * shape[1] + x) * shape[2] + c];
    }
    // K x C accessors
    double& at(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
    const double& at(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    void add_(const Tensor& o) {
        check(same_shape(o), "Tensor::add_: shape mismatch");
        for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    }
    void scale_(double s) {
        for (double& v : data) v *= s;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

inline Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }

inline double mse(const Tensor& a, const Tensor& b) {
    check(a.same_shape(b), "mse: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

// d/da of mse(a, b), i.e. 2 (a - b) / N.
inline Tensor mse_grad(const Tensor& a, const Tensor& b) {
    Tensor g(a.shape);
    const double k = 2.0 / static_cast<double>(a.data.size());
    for (size_t i = 0; i < a.data.size(); ++i) g.data[i] = k * (a.data[i] - b.data[i]);
    return g;
}

inline double variance(const Tensor& t) {
    double mean = 0.0;
    for (double v : t.data) mean += v;
    mean /= static_cast<double>(t.data.size());
    double acc = 0.0;
    for (double v : t.data) acc += (v - mean) * (v - mean);
    return acc / static_cast<double>(t.data.size());
}

}  // namespace cmsc
