#include "framelab/dataset.hpp"

#include "framelab/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace framelab {

namespace {

using nlohmann::json;

std::mt19937_64 case_stream(std::uint64_t master, std::uint64_t id) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
    return std::mt19937_64(seq);
}

// 53-bit uniform in [0, 1); spelled out so streams are identical across
// standard library implementations.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double draw(std::mt19937_64& rng, const ForceRange& r) {
    return r.min + (r.max - r.min) * unit_uniform(rng);
}

Regime parse_regime(const std::string& s, std::size_t line) {
    if (s == "linear") {
        return Regime::linear;
    }
    if (s == "nonlinear") {
        return Regime::nonlinear;
    }
    fail(ErrorKind::schema, "line " + std::to_string(line) + ": unknown regime '" + s + "'");
}

template <typename T>
T required(const json& j, const char* key, std::size_t line) {
    if (!j.contains(key)) {
        fail(ErrorKind::schema,
             "line " + std::to_string(line) + ": missing field '" + std::string(key) + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::schema,
             "line " + std::to_string(line) + ": field '" + std::string(key) + "' has wrong type");
    }
}

} // namespace

bool operator==(const CaseRecord& a, const CaseRecord& b) {
    if (a.case_id != b.case_id || a.f_mid != b.f_mid || a.f_top != b.f_top ||
        a.regime != b.regime || a.node_ids != b.node_ids || a.targets.size() != b.targets.size()) {
        return false;
    }
    for (std::size_t k = 0; k < a.targets.size(); ++k) {
        const auto& p = a.targets[k];
        const auto& q = b.targets[k];
        if (p.ux_mm != q.ux_mm || p.uy_mm != q.uy_mm || p.rz_deg != q.rz_deg) {
            return false;
        }
    }
    return true;
}

void validate_config(const DatasetConfig& c) {
    auto range_ok = [](const ForceRange& r) { return r.min > 0.0 && r.max > r.min; };
    if (c.n_cases < 1) {
        fail(ErrorKind::invalid_argument, "dataset config: n_cases must be positive");
    }
    if (!range_ok(c.linear_range) || !range_ok(c.nonlinear_range)) {
        fail(ErrorKind::invalid_argument, "dataset config: force ranges must be positive and ordered");
    }
    if (!(c.mix >= 0.0 && c.mix <= 1.0)) {
        fail(ErrorKind::invalid_argument, "dataset config: mix must lie in [0, 1]");
    }
    if (!(c.split > 0.0 && c.split < 1.0)) {
        fail(ErrorKind::invalid_argument, "dataset config: split must lie in (0, 1)");
    }
}

std::vector<SampledCase> sample_loads(const DatasetConfig& config) {
    validate_config(config);
    std::vector<SampledCase> out;
    out.reserve(static_cast<std::size_t>(config.n_cases));
    for (int id = 0; id < config.n_cases; ++id) {
        auto rng = case_stream(config.seed, static_cast<std::uint64_t>(id));
        SampledCase c;
        c.case_id = id;
        c.intended = unit_uniform(rng) < config.mix ? Regime::linear : Regime::nonlinear;
        const auto& range =
            c.intended == Regime::linear ? config.linear_range : config.nonlinear_range;
        c.loads.f_mid = draw(rng, range);
        c.loads.f_top = draw(rng, range);
        out.push_back(c);
    }
    return out;
}

CaseRecord solve_case(const Frame& frame, int case_id, const LoadCase& loads,
                      const NonlinearOptions& solver) {
    CaseRecord r;
    r.case_id = case_id;
    r.f_mid = loads.f_mid;
    r.f_top = loads.f_top;
    for (const auto& n : frame.nodes) {
        r.node_ids.push_back(n.id);
    }
    try {
        if (first_yield_factor(frame, loads) > 1.0) {
            r.regime = Regime::linear;
            r.targets = solve_linear(frame, loads);
        } else {
            const auto nl = solve_nonlinear(frame, loads, solver);
            r.regime = nl.yielded_count() > 0 ? Regime::nonlinear : Regime::linear;
            r.targets = nl.response;
        }
    } catch (const Error& e) {
        fail(e.kind(), "case " + std::to_string(case_id) + ": " + e.what());
    }
    return r;
}

std::vector<CaseRecord> generate_dataset(const Frame& frame, const DatasetConfig& config) {
    const auto cases = sample_loads(config);
    std::vector<CaseRecord> out;
    out.reserve(cases.size());
    for (const auto& c : cases) {
        out.push_back(solve_case(frame, c.case_id, c.loads, config.solver));
    }
    return out;
}

std::pair<std::vector<CaseRecord>, std::vector<CaseRecord>>
split_dataset(const std::vector<CaseRecord>& records, double fraction, std::uint64_t seed) {
    if (records.size() < 2) {
        fail(ErrorKind::invalid_argument, "split_dataset: need at least two records");
    }
    if (!(fraction > 0.0 && fraction < 1.0)) {
        fail(ErrorKind::invalid_argument, "split_dataset: fraction must lie in (0, 1)");
    }
    const std::size_t n = records.size();
    const auto n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, n - 1);

    std::vector<std::vector<std::size_t>> groups(2);
    for (std::size_t k = 0; k < n; ++k) {
        groups[records[k].regime == Regime::linear ? 0 : 1].push_back(k);
    }

    // Proportional quota per regime; the linear share is rounded and the
    // nonlinear share takes the rest so the total is exact.
    const double share = static_cast<double>(n_train) * static_cast<double>(groups[0].size()) /
                         static_cast<double>(n);
    std::size_t q0 = std::min<std::size_t>(static_cast<std::size_t>(std::llround(share)),
                                           groups[0].size());
    if (n_train - q0 > groups[1].size()) {
        q0 = n_train - groups[1].size();
    }
    const std::size_t quota[2] = {q0, n_train - q0};

    std::mt19937_64 rng(seed);
    std::vector<CaseRecord> train;
    std::vector<CaseRecord> test;
    for (std::size_t g = 0; g < 2; ++g) {
        auto idx = groups[g];
        // Fisher-Yates with the portable uniform so membership is stable.
        for (std::size_t k = idx.size(); k > 1; --k) {
            const auto j = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(k));
            std::swap(idx[k - 1], idx[j]);
        }
        for (std::size_t k = 0; k < idx.size(); ++k) {
            (k < quota[g] ? train : test).push_back(records[idx[k]]);
        }
    }
    auto by_id = [](const CaseRecord& a, const CaseRecord& b) { return a.case_id < b.case_id; };
    std::sort(train.begin(), train.end(), by_id);
    std::sort(test.begin(), test.end(), by_id);
    return {std::move(train), std::move(test)};
}

std::string record_to_json_line(const CaseRecord& r) {
    json j;
    j["schema_version"] = kDatasetSchemaVersion;
    j["case_id"] = r.case_id;
    j["f_mid_n"] = r.f_mid;
    j["f_top_n"] = r.f_top;
    j["regime"] = to_string(r.regime);
    j["nodes"] = json::array();
    for (std::size_t k = 0; k < r.targets.size(); ++k) {
        j["nodes"].push_back({{"id", r.node_ids.at(k)},
                              {"ux_mm", r.targets[k].ux_mm},
                              {"uy_mm", r.targets[k].uy_mm},
                              {"rz_deg", r.targets[k].rz_deg}});
    }
    return j.dump();
}

void save_dataset(const std::vector<CaseRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    }
    for (const auto& r : records) {
        out << record_to_json_line(r) << '\n';
    }
    if (!out) {
        fail(ErrorKind::io, "write to '" + path + "' failed");
    }
}

std::vector<CaseRecord> parse_dataset(const std::string& text) {
    std::vector<CaseRecord> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": malformed JSON (" +
                                       e.what() + ")");
        }
        if (!j.is_object()) {
            fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": expected a JSON object");
        }
        const int version = required<int>(j, "schema_version", lineno);
        if (version > kDatasetSchemaVersion) {
            fail(ErrorKind::version, "line " + std::to_string(lineno) + ": schema_version " +
                                         std::to_string(version) + " is newer than supported " +
                                         std::to_string(kDatasetSchemaVersion));
        }
        if (version < 1) {
            fail(ErrorKind::schema, "line " + std::to_string(lineno) + ": invalid schema_version");
        }
        CaseRecord r;
        r.case_id = required<int>(j, "case_id", lineno);
        r.f_mid = required<double>(j, "f_mid_n", lineno);
        r.f_top = required<double>(j, "f_top_n", lineno);
        r.regime = parse_regime(required<std::string>(j, "regime", lineno), lineno);
        const auto nodes = required<json>(j, "nodes", lineno);
        if (!nodes.is_array()) {
            fail(ErrorKind::schema, "line " + std::to_string(lineno) + ": 'nodes' must be an array");
        }
        for (const auto& jn : nodes) {
            r.node_ids.push_back(required<int>(jn, "id", lineno));
            NodeResponse nr;
            nr.ux_mm = required<double>(jn, "ux_mm", lineno);
            nr.uy_mm = required<double>(jn, "uy_mm", lineno);
            nr.rz_deg = required<double>(jn, "rz_deg", lineno);
            r.targets.push_back(nr);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<CaseRecord> load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, "cannot open '" + path + "' for reading");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        fail(ErrorKind::io, "read from '" + path + "' failed");
    }
    return parse_dataset(buf.str());
}

} // namespace framelab
