#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace prens {

enum class Family { gaussian, binomial, poisson, mgaussian };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::gaussian: return "gaussian";
        case Family::binomial: return "binomial";
        case Family::poisson: return "poisson";
        case Family::mgaussian: return "mgaussian";
    }
    return "?";
}

inline Family family_from_string(std::string_view s) {
    if (s == "gaussian") return Family::gaussian;
    if (s == "binomial") return Family::binomial;
    if (s == "poisson") return Family::poisson;
    if (s == "mgaussian") return Family::mgaussian;
    throw std::invalid_argument("unknown family '" + std::string(s) + "'");
}

// numerically stable logistic
inline double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// link-scale value -> response scale
inline double link_inverse(Family f, double eta) {
    switch (f) {
        case Family::binomial: return logistic(eta);
        case Family::poisson: return std::exp(eta);
        default: return eta;
    }
}

} // namespace prens
