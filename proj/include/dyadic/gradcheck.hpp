#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>

#include "dyadic/cells.hpp"
#include "dyadic/seq2seq.hpp"

namespace dyadic {

inline constexpr double kGradcheckEpsilon = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-4;

/// |analytic - numeric| / max(|analytic|, |numeric|, floor). The floor keeps components that are
/// zero up to rounding from dividing by ~0.
double relative_error(double analytic, double numeric, double floor = 1e-6);

struct GradcheckResult {
    std::map<std::string, double> max_rel_error;  // per parameter group
    double worst = 0.0;
    bool passed() const { return worst <= kGradcheckTolerance; }
};

/// Lets a harness tamper with analytic gradients before they are compared (negative control).
using GradientFault = std::function<void(Gradients&)>;

struct GradcheckOptions {
    std::size_t dim = 3;
    std::size_t vocab = 6;
    std::size_t message_length = 4;
    std::size_t response_length = 4;
    std::uint64_t seed = 0;
    double init_scale = 0.5;
};

/// Full-model check of backward_exchange against central differences on one random exchange.
GradcheckResult gradcheck_model(ModelVariant variant, const GradcheckOptions& options,
                                const GradientFault& fault = {});

/// Single-sequence language-model check of cell_backward for any cell variant.
GradcheckResult gradcheck_cell(CellVariant variant, const GradcheckOptions& options);

/// Personality head check of head_backward.
GradcheckResult gradcheck_head(const GradcheckOptions& options);

}  // namespace dyadic
