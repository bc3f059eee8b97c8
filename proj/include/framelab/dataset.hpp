#ifndef FRAMELAB_DATASET_HPP
#define FRAMELAB_DATASET_HPP

#include "framelab/fem.hpp"
#include "framelab/frame.hpp"
#include "framelab/yield.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace framelab {

constexpr int kDatasetSchemaVersion = 1;

struct ForceRange {
    double min = 0.0; // N
    double max = 0.0; // N
};

struct DatasetConfig {
    int n_cases = 500;
    ForceRange linear_range{5.0e4, 2.3e5};
    ForceRange nonlinear_range{3.0e5, 1.0e6};
    double mix = 0.6;   // probability that a case is drawn from the linear range
    double split = 0.85;
    std::uint64_t seed = 0;
    NonlinearOptions solver;
};

/// Throws Error(invalid_argument) listing the first violated constraint.
void validate_config(const DatasetConfig& config);

struct SampledCase {
    int case_id = 0;
    LoadCase loads;
    Regime intended = Regime::linear;
};

/// Independent uniform draws per case from the regime's range. Each case uses
/// its own RNG stream seeded from (master seed, case id).
std::vector<SampledCase> sample_loads(const DatasetConfig& config);

struct CaseRecord {
    int case_id = 0;
    double f_mid = 0.0; // N
    double f_top = 0.0; // N
    Regime regime = Regime::linear; // linear or nonlinear only
    ResponseField targets;
    std::vector<int> node_ids; // frame node labels, parallel to targets

    LoadCase loads() const { return {f_mid, f_top}; }
    friend bool operator==(const CaseRecord&, const CaseRecord&);
};

/// Solves one case with the FEM oracle and labels its regime. Cases whose
/// elastic solution stays below every M_p are solved linearly; the rest go
/// through the hinge solver and are labelled by hinge formation.
CaseRecord solve_case(const Frame& frame, int case_id, const LoadCase& loads,
                      const NonlinearOptions& solver = {});

std::vector<CaseRecord> generate_dataset(const Frame& frame, const DatasetConfig& config);

/// Regime-stratified deterministic split. Training size is round(fraction * N)
/// clamped to [1, N - 1]; each regime contributes proportionally.
std::pair<std::vector<CaseRecord>, std::vector<CaseRecord>>
split_dataset(const std::vector<CaseRecord>& records, double fraction, std::uint64_t seed);

std::string record_to_json_line(const CaseRecord& record);
void save_dataset(const std::vector<CaseRecord>& records, const std::string& path);
std::vector<CaseRecord> load_dataset(const std::string& path);
std::vector<CaseRecord> parse_dataset(const std::string& text);

} // namespace framelab

#endif // FRAMELAB_DATASET_HPP
