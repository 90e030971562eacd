#pragma once

#include <cstdint>
#include <random>

#include "modflight/geom.hpp"

namespace modflight::testing {

// Hand-rolled random generators for property tests. Every test seeds its own
// instance so failures reproduce from the printed case index.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    Vec3 vec(double scale = 1.0) { return Vec3(normal(scale), normal(scale), normal(scale)); }

    Vec3 unit() {
        Vec3 v = vec();
        while (v.norm() < 1e-6) v = vec();
        return v.normalized();
    }

    RotationMatrix rotation() { return RotationMatrix::about_axis(unit(), uniform(-3.14159, 3.14159)); }

    Matrix matrix(Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(scale);
        return m;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline Mat3 closed_form_rz(double a) {
    Mat3 m;
    m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return m;
}

inline Mat3 closed_form_ry(double a) {
    Mat3 m;
    m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
    return m;
}

inline Mat3 closed_form_rx(double a) {
    Mat3 m;
    m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
    return m;
}

}  // namespace modflight::testing
