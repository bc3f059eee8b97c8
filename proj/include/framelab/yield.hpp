#ifndef FRAMELAB_YIELD_HPP
#define FRAMELAB_YIELD_HPP

#include "framelab/fem.hpp"
#include "framelab/frame.hpp"

#include <vector>

namespace framelab {

/// Portal-method first-yield estimate. Beams are assumed to yield before
/// columns, so only beam sections are consulted.
struct YieldEstimate {
    double yield_moment = 0.0;  // M_y, N m
    double yield_shear = 0.0;   // V_y = 2 M_y / h_story, N
    double elastic_bound = 0.0; // fraction of V_y below which response is elastic, N
};

constexpr double kDefaultElasticFraction = 0.6;

/// Throws Error(invalid_argument) for a frame without beams or F_y <= 0.
YieldEstimate portal_yield(const Frame& frame, double yield_strength,
                           double elastic_fraction = kDefaultElasticFraction);

enum class Regime { linear, transition, nonlinear };

const char* to_string(Regime regime);

/// Screening classification from story shears against the Portal estimate.
/// Each story shear is compared to the bounds independently.
Regime classify_regime_estimate(const LoadCase& loads, const YieldEstimate& estimate);

/// Authoritative label: nonlinear iff the hinge solver forms at least one hinge.
Regime classify_regime_fem(const Frame& frame, const LoadCase& loads,
                           const NonlinearOptions& options = {});

struct ScanRow {
    int step = 0;
    double load_factor = 0.0;
    double force = 0.0; // f_top = f_mid
    double ratio_story1 = 0.0;
    double ratio_story2 = 0.0;
    bool first_yield = false; // first row with ratio_story1 >= 1
};

std::vector<ScanRow> increment_scan(double f_max, int n_steps, const YieldEstimate& estimate);

} // namespace framelab

#endif // FRAMELAB_YIELD_HPP
