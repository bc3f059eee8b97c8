#include "framelab/evaluator.hpp"

#include "framelab/error.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace framelab {

namespace {

constexpr const char* kCsvHeader = "dataset,phase,count,overall,ux,uy,rz";

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

double component_of(const NodeResponse& r, std::size_t c) {
    return c == 0 ? r.ux_mm : (c == 1 ? r.uy_mm : r.rz_deg);
}

struct Tally {
    std::size_t total = 0;
    std::size_t hit = 0;
    std::array<std::size_t, 3> comp_total{};
    std::array<std::size_t, 3> comp_hit{};

    void add(std::size_t c, bool ok) {
        ++total;
        ++comp_total[c];
        if (ok) {
            ++hit;
            ++comp_hit[c];
        }
    }

    AccuracyRow row(std::string dataset, std::string phase) const {
        AccuracyRow r;
        r.dataset = std::move(dataset);
        r.phase = std::move(phase);
        r.count = total;
        r.overall = total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            r.component[c] = comp_total[c] ? static_cast<double>(comp_hit[c]) /
                                                 static_cast<double>(comp_total[c])
                                           : 0.0;
        }
        return r;
    }
};

} // namespace

double ToleranceProfile::tolerance(Regime regime, std::size_t component) const {
    const bool rot = component == 2;
    if (regime == Regime::linear) {
        return rot ? linear_rot_deg : linear_disp_mm;
    }
    return rot ? nonlinear_rot_deg : nonlinear_disp_mm;
}

ToleranceProfile strict_profile() {
    return {"strict", 0.01, 0.001, 0.01, 0.001};
}

ToleranceProfile zone_profile() {
    return {"zone", 0.2, 0.05, 1.0, 1.0};
}

ToleranceProfile profile_by_name(std::string_view name) {
    if (name == "strict") {
        return strict_profile();
    }
    if (name == "zone") {
        return zone_profile();
    }
    fail(ErrorKind::invalid_argument,
         "unknown tolerance profile '" + std::string(name) + "' (expected strict or zone)");
}

bool component_accurate(double pred, double actual, double tolerance) {
    return std::abs(pred - actual) <= tolerance;
}

AccuracyReport evaluate_predictions(const std::vector<CaseRecord>& records,
                                    const std::vector<ResponseField>& predictions,
                                    const ToleranceProfile& profile, std::string dataset) {
    if (records.empty()) {
        fail(ErrorKind::invalid_argument, "evaluate: empty split");
    }
    if (records.size() != predictions.size()) {
        fail(ErrorKind::invalid_argument, "evaluate: prediction count does not match records");
    }
    const std::size_t nf = records.front().targets.size();
    Tally all;
    Tally lin;
    Tally non;
    std::vector<std::size_t> node_hit(nf, 0);
    std::vector<std::size_t> node_total(nf, 0);
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        const auto& pred = predictions[r];
        if (rec.targets.size() != nf || pred.size() != nf) {
            fail(ErrorKind::invalid_argument, "evaluate: inconsistent node count in case " +
                                                  std::to_string(rec.case_id));
        }
        Tally& group = rec.regime == Regime::linear ? lin : non;
        for (std::size_t k = 0; k < nf; ++k) {
            for (std::size_t c = 0; c < 3; ++c) {
                const bool ok = component_accurate(component_of(pred[k], c),
                                                   component_of(rec.targets[k], c),
                                                   profile.tolerance(rec.regime, c));
                all.add(c, ok);
                group.add(c, ok);
                ++node_total[k];
                node_hit[k] += ok ? 1 : 0;
            }
        }
    }
    AccuracyReport rep;
    rep.dataset = dataset;
    rep.profile = profile.name;
    rep.cases = records.size();
    rep.overall = all.row(dataset, "overall");
    if (lin.total) {
        rep.regimes.push_back(lin.row(dataset, "linear"));
    }
    if (non.total) {
        rep.regimes.push_back(non.row(dataset, "nonlinear"));
    }
    for (std::size_t k = 0; k < nf; ++k) {
        rep.node_ids.push_back(records.front().node_ids.size() == nf
                                   ? records.front().node_ids[k]
                                   : static_cast<int>(k + 1));
        rep.node_accuracy.push_back(static_cast<double>(node_hit[k]) /
                                    static_cast<double>(node_total[k]));
    }
    return rep;
}

AccuracyReport evaluate(const TrainedModel& model, const Frame& frame,
                        const std::vector<CaseRecord>& records, const ToleranceProfile& profile,
                        std::string dataset) {
    if (records.empty()) {
        fail(ErrorKind::invalid_argument, "evaluate: empty split");
    }
    std::vector<LoadCase> loads;
    loads.reserve(records.size());
    for (const auto& r : records) {
        loads.push_back(r.loads());
    }
    return evaluate_predictions(records, model.predict(frame, loads), profile, std::move(dataset));
}

std::string report_to_csv(const std::vector<AccuracyReport>& reports) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    auto emit = [&out](const AccuracyRow& r) {
        out << r.dataset << ',' << r.phase << ',' << r.count << ',' << fmt("%.17g", r.overall);
        for (double v : r.component) {
            out << ',' << fmt("%.17g", v);
        }
        out << '\n';
    };
    for (const auto& rep : reports) {
        emit(rep.overall);
        for (const auto& r : rep.regimes) {
            emit(r);
        }
    }
    return out.str();
}

std::vector<AccuracyRow> parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        fail(ErrorKind::parse, "report CSV: missing or unexpected header");
    }
    std::vector<AccuracyRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != 7) {
            fail(ErrorKind::parse, "report CSV line " + std::to_string(line_no) +
                                       ": expected 7 fields");
        }
        AccuracyRow r;
        try {
            r.dataset = cells[0];
            r.phase = cells[1];
            r.count = std::stoull(cells[2]);
            r.overall = std::stod(cells[3]);
            for (std::size_t c = 0; c < 3; ++c) {
                r.component[c] = std::stod(cells[4 + c]);
            }
        } catch (const std::logic_error&) {
            fail(ErrorKind::parse, "report CSV line " + std::to_string(line_no) +
                                       ": malformed number");
        }
        rows.push_back(r);
    }
    return rows;
}

std::string report_to_text(const std::vector<AccuracyReport>& reports) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-10s %-10s %8s %9s %9s %9s %9s\n", "Dataset", "Phase",
                  "Count", "Overall", "U_X", "U_Y", "R_Z");
    out << buf;
    auto emit = [&](const AccuracyRow& r) {
        std::snprintf(buf, sizeof buf, "%-10s %-10s %8zu %8.2f%% %8.2f%% %8.2f%% %8.2f%%\n",
                      r.dataset.c_str(), r.phase.c_str(), r.count, 100.0 * r.overall,
                      100.0 * r.component[0], 100.0 * r.component[1], 100.0 * r.component[2]);
        out << buf;
    };
    for (const auto& rep : reports) {
        emit(rep.overall);
        for (const auto& r : rep.regimes) {
            emit(r);
        }
    }
    for (const auto& rep : reports) {
        out << '\n' << rep.dataset << " per-node accuracy (" << rep.profile << ")\n";
        for (std::size_t k = 0; k < rep.node_ids.size(); ++k) {
            std::snprintf(buf, sizeof buf, "  node %-3d %7.2f%%\n", rep.node_ids[k],
                          100.0 * rep.node_accuracy[k]);
            out << buf;
        }
    }
    return out.str();
}

std::vector<CaseTableRow> case_table(const TrainedModel& model, const Frame& frame,
                                     const LoadCase& loads, const NonlinearOptions& solver) {
    const auto predicted = model.predict(frame, loads);
    const auto actual = solve_case(frame, 0, loads, solver);
    std::vector<CaseTableRow> rows;
    for (std::size_t k = 0; k < frame.nodes.size(); ++k) {
        rows.push_back({frame.nodes[k].id, predicted[k], actual.targets[k]});
    }
    return rows;
}

std::string format_case_table(const std::vector<CaseTableRow>& rows) {
    std::ostringstream out;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-5s %12s %12s %12s %12s %12s %12s\n", "Node", "UX_pred",
                  "UX_act", "UY_pred", "UY_act", "RZ_pred", "RZ_act");
    out << buf;
    // Print "0.000" rather than "-0.000" for values that round to zero.
    auto clean = [](double v, double unit) { return std::abs(v) < 0.5 * unit ? 0.0 : v; };
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-5d %12.3f %12.3f %12.3f %12.3f %12.6f %12.6f\n",
                      r.node_id, clean(r.predicted.ux_mm, 1e-3), clean(r.actual.ux_mm, 1e-3),
                      clean(r.predicted.uy_mm, 1e-3), clean(r.actual.uy_mm, 1e-3),
                      clean(r.predicted.rz_deg, 1e-6), clean(r.actual.rz_deg, 1e-6));
        out << buf;
    }
    return out.str();
}

} // namespace framelab
