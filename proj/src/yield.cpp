#include "framelab/yield.hpp"

#include "framelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace framelab {

YieldEstimate portal_yield(const Frame& frame, double yield_strength, double elastic_fraction) {
    if (!(yield_strength > 0.0)) {
        fail(ErrorKind::invalid_argument, "portal_yield: yield strength must be positive");
    }
    if (!(elastic_fraction > 0.0 && elastic_fraction < 1.0)) {
        fail(ErrorKind::invalid_argument, "portal_yield: elastic fraction must lie in (0, 1)");
    }
    // The weakest beam governs.
    double z = std::numeric_limits<double>::infinity();
    for (const auto& m : frame.members) {
        if (m.kind == MemberKind::beam) {
            const auto s = derive_section(m.section.area, m.section.moment_of_inertia, yield_strength);
            z = std::min(z, s.plastic_modulus);
        }
    }
    if (!std::isfinite(z)) {
        fail(ErrorKind::invalid_argument, "portal_yield: frame has no beams");
    }
    YieldEstimate e;
    e.yield_moment = z * yield_strength;
    e.yield_shear = 2.0 * e.yield_moment / frame.story_height;
    e.elastic_bound = elastic_fraction * e.yield_shear;
    return e;
}

const char* to_string(Regime regime) {
    switch (regime) {
    case Regime::linear:
        return "linear";
    case Regime::transition:
        return "transition";
    case Regime::nonlinear:
        return "nonlinear";
    }
    return "unknown";
}

Regime classify_regime_estimate(const LoadCase& loads, const YieldEstimate& estimate) {
    const auto v = story_shears(loads);
    const double demand = std::max(std::abs(v.v1), std::abs(v.v2));
    if (demand < estimate.elastic_bound) {
        return Regime::linear;
    }
    if (demand >= estimate.yield_shear) {
        return Regime::nonlinear;
    }
    return Regime::transition;
}

Regime classify_regime_fem(const Frame& frame, const LoadCase& loads,
                           const NonlinearOptions& options) {
    const auto result = solve_nonlinear(frame, loads, options);
    return result.yielded_count() > 0 ? Regime::nonlinear : Regime::linear;
}

std::vector<ScanRow> increment_scan(double f_max, int n_steps, const YieldEstimate& estimate) {
    if (!(f_max > 0.0) || n_steps < 1) {
        fail(ErrorKind::invalid_argument, "increment_scan: need F_max > 0 and at least one step");
    }
    std::vector<ScanRow> rows;
    rows.reserve(static_cast<std::size_t>(n_steps));
    bool flagged = false;
    for (int k = 1; k <= n_steps; ++k) {
        ScanRow r;
        r.step = k;
        r.load_factor = static_cast<double>(k) / n_steps;
        r.force = r.load_factor * f_max;
        const auto v = story_shears({r.force, r.force});
        r.ratio_story1 = v.v1 / estimate.yield_shear;
        r.ratio_story2 = v.v2 / estimate.yield_shear;
        if (!flagged && r.ratio_story1 >= 1.0) {
            r.first_yield = true;
            flagged = true;
        }
        rows.push_back(r);
    }
    return rows;
}

} // namespace framelab
