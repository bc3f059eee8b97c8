#ifndef FRAMELAB_EVALUATOR_HPP
#define FRAMELAB_EVALUATOR_HPP

#include "framelab/dataset.hpp"
#include "framelab/fem.hpp"
#include "framelab/learner.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace framelab {

/// Absolute error thresholds per regime. Displacements in mm, rotations in deg.
struct ToleranceProfile {
    std::string name;
    double linear_disp_mm = 0.0;
    double linear_rot_deg = 0.0;
    double nonlinear_disp_mm = 0.0;
    double nonlinear_rot_deg = 0.0;

    /// component: 0 = u_x, 1 = u_y, 2 = r_z
    double tolerance(Regime regime, std::size_t component) const;
};

ToleranceProfile strict_profile(); // 0.01 mm / 0.001 deg in every regime
ToleranceProfile zone_profile();   // linear 0.2 mm / 0.05 deg, nonlinear 1.0 mm / 1.0 deg
/// "strict" or "zone"; throws Error(invalid_argument) otherwise.
ToleranceProfile profile_by_name(std::string_view name);

bool component_accurate(double pred, double actual, double tolerance);

/// One line of a report: accuracies are fractions in [0, 1]. `count` is the
/// number of datapoints, one per (case, node, component).
struct AccuracyRow {
    std::string dataset;
    std::string phase; // overall | linear | nonlinear
    std::size_t count = 0;
    double overall = 0.0;
    std::array<double, 3> component{}; // u_x, u_y, r_z
};

struct AccuracyReport {
    std::string dataset;
    std::string profile;
    std::size_t cases = 0;
    AccuracyRow overall;
    std::vector<AccuracyRow> regimes; // only regimes present in the split
    std::vector<int> node_ids;
    std::vector<double> node_accuracy; // over all cases and components
};

AccuracyReport evaluate_predictions(const std::vector<CaseRecord>& records,
                                    const std::vector<ResponseField>& predictions,
                                    const ToleranceProfile& profile, std::string dataset);

/// Predicts every record and scores it. Throws Error(invalid_argument) on an
/// empty split.
AccuracyReport evaluate(const TrainedModel& model, const Frame& frame,
                        const std::vector<CaseRecord>& records, const ToleranceProfile& profile,
                        std::string dataset);

/// Header "dataset,phase,count,overall,ux,uy,rz"; one overall row per report
/// followed by its regime rows.
std::string report_to_csv(const std::vector<AccuracyReport>& reports);
std::vector<AccuracyRow> parse_report_csv(const std::string& text);
/// Aligned table with percentages, plus the per-node breakdown.
std::string report_to_text(const std::vector<AccuracyReport>& reports);

struct CaseTableRow {
    int node_id = 0;
    NodeResponse predicted;
    NodeResponse actual;
};

/// Predicted vs FEM response at every frame node for one load case.
std::vector<CaseTableRow> case_table(const TrainedModel& model, const Frame& frame,
                                     const LoadCase& loads, const NonlinearOptions& solver = {});
std::string format_case_table(const std::vector<CaseTableRow>& rows);

/// Columns: load_factor, V1, V2, then ux/uy/rz per node.
std::string curve_to_csv(const PushoverCurve& curve, const Frame& frame);
/// Line chart of u_x per node against the applied lower-story shear.
std::string curve_to_svg(const PushoverCurve& curve, const Frame& frame);

} // namespace framelab

#endif // FRAMELAB_EVALUATOR_HPP
