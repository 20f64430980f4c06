#pragma once

#include "safedp/model.hpp"

#include <string>

#ifndef SAFEDP_FIXTURE_DIR
#error "SAFEDP_FIXTURE_DIR must point at the fixtures directory"
#endif

namespace safedp::testing {

inline std::string fixture(const std::string& name) { return std::string(SAFEDP_FIXTURE_DIR) + "/" + name; }

inline MdpModel ex1() { return load_model_file(fixture("ex1.json")); }

/// EX1 pure policy by (action at a, action at b, action at c).
inline Policy ex1_policy(const MdpModel& model, const std::string& a, const std::string& b,
                         const std::string& c = "u1") {
    return pure_policy(model, {{"a", a}, {"b", b}, {"c", c}});
}

inline Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index k = 0;
    for (double x : xs)
        v(k++) = x;
    return v;
}

inline double sup_diff(const Vector& a, const Vector& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

} // namespace safedp::testing
