#pragma once

#include <map>
#include <mutex>

#include "layerstab/reduced.hpp"
#include "layerstab/spectral.hpp"
#include "layerstab/steady.hpp"

namespace fixtures {

inline layerstab::ModelParams defaults() { return {}; }

inline const layerstab::ReducedProfile& profile() {
    static const layerstab::ReducedProfile p = layerstab::solve_reduced(defaults());
    return p;
}

inline const layerstab::SlepConstants& constants() {
    static const layerstab::SlepConstants c = layerstab::build_constants(defaults(), profile(), {});
    return c;
}

inline const layerstab::LayeredStateEps& state(double eps) {
    static std::map<double, layerstab::LayeredStateEps> cache;
    static std::mutex m;
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(eps);
    if (it == cache.end()) {
        auto p = defaults();
        p.eps = eps;
        it = cache.emplace(eps, layerstab::solve_layered_eps(p, profile())).first;
    }
    return it->second;
}

}  // namespace fixtures
