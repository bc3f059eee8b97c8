// Command-line front end. Talks to the library only through framelab.h.
#include "framelab/framelab.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum class Level { error, warn, info, debug };

struct Globals {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string log_level = "info";
    std::string frame_path;
    bool force = false;
    Level level = Level::info;
};

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(fl_status s) {
    if (s != FL_OK) {
        throw Failure(std::string(fl_status_string(s)) + ": " + fl_last_error());
    }
}

struct Deleter {
    void operator()(fl_frame* p) const { fl_frame_destroy(p); }
    void operator()(fl_dataset* p) const { fl_dataset_destroy(p); }
    void operator()(fl_model* p) const { fl_model_destroy(p); }
    void operator()(fl_curve* p) const { fl_curve_destroy(p); }
    void operator()(char* p) const { fl_string_free(p); }
};

template <typename T>
using Owned = std::unique_ptr<T, Deleter>;

std::string take(char* s) {
    Owned<char> guard(s);
    return s ? std::string(s) : std::string();
}

Owned<fl_frame> open_frame(const Globals& g) {
    fl_frame* f = nullptr;
    if (g.frame_path.empty()) {
        check(fl_frame_create_reference(nullptr, &f));
    } else {
        check(fl_frame_load(g.frame_path.c_str(), &f));
    }
    return Owned<fl_frame>(f);
}

// Relative output paths land under --out-dir; existing files need --force.
std::string output_path(const Globals& g, const std::string& path) {
    fs::path p(path);
    if (p.is_relative()) {
        p = fs::path(g.out_dir) / p;
    }
    if (fs::exists(p) && !g.force) {
        throw Failure("refusing to overwrite '" + p.string() + "' (pass --force)");
    }
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    return p.string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) {
        throw Failure("cannot write '" + path + "'");
    }
}

void log(const Globals& g, Level level, const std::string& msg) {
    if (level <= g.level) {
        std::cerr << msg << '\n';
    }
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string option_value(const CLI::Option* opt) {
    if (opt->get_items_expected_max() == 0) {
        return opt->count() ? "true" : "false";
    }
    if (opt->count() == 0) {
        return opt->get_default_str();
    }
    std::string out;
    for (const auto& r : opt->results()) {
        out += (out.empty() ? "" : " ") + r;
    }
    return out;
}

// Resolved values of the global options and the chosen subcommand.
void print_config(const CLI::App& app, const Globals& g) {
    std::cerr << "# resolved configuration\n";
    auto dump = [](const CLI::App& a, const std::string& prefix) {
        for (const auto* opt : a.get_options()) {
            if (opt->get_name() == "--help" || opt->get_name() == "-h,--help") {
                continue;
            }
            std::cerr << "#   " << prefix << opt->get_lnames().front() << " = "
                      << option_value(opt) << '\n';
        }
    };
    dump(app, "");
    for (const auto* sub : app.get_subcommands()) {
        std::cerr << "#   subcommand = " << sub->get_name() << '\n';
        dump(*sub, sub->get_name() + ".");
    }
    std::cerr << "#   effective seed = " << g.seed << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"framelab: plane-frame FEM oracle and graph surrogate"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();

    Globals g;
    app.add_option("--seed", g.seed, "Master seed (FRAMELAB_SEED overrides)");
    app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");
    app.add_option("--log-level", g.log_level, "error | warn | info | debug")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
    app.add_option("--frame", g.frame_path, "Frame JSON (default: built-in reference frame)");
    app.add_flag("--force", g.force, "Overwrite existing output files");

    // generate
    auto* gen = app.add_subcommand("generate", "Solve sampled load cases into a JSONL dataset");
    fl_dataset_config dcfg;
    fl_dataset_config_default(&dcfg);
    std::string gen_out;
    gen->add_option("--cases", dcfg.n_cases, "Number of load cases")->check(CLI::PositiveNumber);
    gen->add_option("--mix", dcfg.mix, "Fraction of cases drawn from the linear range")
        ->check(CLI::Range(0.0, 1.0));
    gen->add_option("--steps", dcfg.n_steps, "Nonlinear load steps");
    gen->add_option("--alpha", dcfg.hardening_ratio, "Post-yield stiffness ratio");
    gen->add_option("--out", gen_out, "Output JSONL path")->required();

    // yield-estimate
    auto* ye = app.add_subcommand("yield-estimate", "Portal-method yield estimate and increment scan");
    double fy = 3.45e8;
    double f_max = 8.0e5;
    int scan_steps = 12;
    ye->add_option("--fy", fy, "Yield strength (Pa)");
    ye->add_option("--fmax", f_max, "Largest force per loaded node in the scan (N)");
    ye->add_option("--steps", scan_steps, "Scan increments");

    // train
    auto* tr = app.add_subcommand("train", "Train the graph surrogate or the dense baseline");
    fl_train_config tcfg;
    fl_train_config_default(&tcfg);
    std::string model_kind = "gnn";
    std::string train_data;
    std::string train_out;
    bool no_self_term = false;
    std::uint64_t split_seed = 0;
    tr->add_option("--model", model_kind, "gnn | nn")->check(CLI::IsMember({"gnn", "nn"}));
    tr->add_option("--data", train_data, "Dataset JSONL")->required()->check(CLI::ExistingFile);
    tr->add_option("--epochs", tcfg.max_epochs)->check(CLI::PositiveNumber);
    tr->add_option("--lr", tcfg.learning_rate)->check(CLI::PositiveNumber);
    tr->add_option("--batch", tcfg.batch_size)->check(CLI::PositiveNumber);
    tr->add_option("--lambda", tcfg.lambda)->check(CLI::NonNegativeNumber);
    tr->add_option("--hidden", tcfg.hidden_dim)->check(CLI::PositiveNumber);
    tr->add_option("--split", tcfg.split_fraction, "Training fraction")->check(CLI::Range(0.0, 1.0));
    auto* split_seed_opt = tr->add_option("--split-seed", split_seed, "Split seed (default: --seed)");
    tr->add_flag("--no-self-term", no_self_term, "Aggregation-only layers");
    tr->add_option("--out", train_out, "Checkpoint path")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Accuracy report on the checkpoint's split");
    std::string ev_ckpt;
    std::string ev_data;
    std::string ev_profile = "zone";
    std::string ev_csv;
    ev->add_option("--ckpt", ev_ckpt)->required()->check(CLI::ExistingFile);
    ev->add_option("--data", ev_data)->required()->check(CLI::ExistingFile);
    ev->add_option("--profile", ev_profile)->check(CLI::IsMember({"strict", "zone"}));
    ev->add_option("--csv", ev_csv, "Write the report as CSV");

    // predict
    auto* pr = app.add_subcommand("predict", "Predicted vs FEM table for one load case");
    std::string pr_ckpt;
    double pr_fmid = 0.0;
    double pr_ftop = 0.0;
    pr->add_option("--ckpt", pr_ckpt)->required()->check(CLI::ExistingFile);
    pr->add_option("--fmid", pr_fmid, "Force at the mid-height joint (N)")->required();
    pr->add_option("--ftop", pr_ftop, "Force at the roof joint (N)")->required();

    // curves
    auto* cu = app.add_subcommand("curves", "Pushover curve as CSV and optional SVG");
    double cu_fmid = 0.0;
    double cu_ftop = 0.0;
    int cu_steps = 20;
    double cu_alpha = 0.02;
    std::string cu_csv;
    std::string cu_svg;
    cu->add_option("--fmid", cu_fmid)->required();
    cu->add_option("--ftop", cu_ftop)->required();
    cu->add_option("--steps", cu_steps);
    cu->add_option("--alpha", cu_alpha);
    cu->add_option("--csv", cu_csv, "CSV output path")->required();
    cu->add_option("--svg", cu_svg, "SVG output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    if (const char* env = std::getenv("FRAMELAB_SEED"); env && *env) {
        try {
            g.seed = std::stoull(env);
        } catch (const std::exception&) {
            std::cerr << "error: FRAMELAB_SEED is not an unsigned integer\n";
            return 2;
        }
    }
    g.level = g.log_level == "error"  ? Level::error
              : g.log_level == "warn" ? Level::warn
              : g.log_level == "info" ? Level::info
                                      : Level::debug;

    print_config(app, g);

    try {
        auto frame = open_frame(g);
        const size_t nodes = fl_frame_node_count(frame.get());

        if (*gen) {
            dcfg.seed = g.seed;
            const auto path = output_path(g, gen_out);
            fl_dataset* d = nullptr;
            check(fl_dataset_generate(frame.get(), &dcfg, &d));
            Owned<fl_dataset> data(d);
            check(fl_dataset_save(data.get(), path.c_str()));
            std::cout << "wrote " << fl_dataset_size(d) << " cases ("
                      << fl_dataset_linear_count(d) << " linear) to " << path << '\n';
        } else if (*ye) {
            fl_yield_estimate est;
            check(fl_portal_yield(frame.get(), fy, &est));
            std::cout << "M_y = " << fmt("%.5g", est.yield_moment) << " N*m\n"
                      << "V_y = " << fmt("%.5g", est.yield_shear) << " N\n"
                      << "elastic bound = " << fmt("%.5g", est.elastic_bound) << " N\n";
            std::vector<fl_scan_row> rows(static_cast<size_t>(std::max(scan_steps, 0)));
            check(fl_increment_scan(f_max, scan_steps, &est, rows.data(), rows.size()));
            std::cout << "step  factor     force_N      V1/V_y   V2/V_y\n";
            for (const auto& r : rows) {
                char buf[128];
                std::snprintf(buf, sizeof buf, "%4d  %6.3f  %10.4g  %8.3f  %7.3f%s\n", r.step,
                              r.load_factor, r.force, r.ratio_story1, r.ratio_story2,
                              r.first_yield ? "  <- first yield" : "");
                std::cout << buf;
            }
        } else if (*tr) {
            tcfg.kind = model_kind == "gnn" ? FL_MODEL_GNN : FL_MODEL_NN;
            tcfg.seed = g.seed;
            tcfg.split_seed = *split_seed_opt ? split_seed : g.seed;
            tcfg.self_term = no_self_term ? 0 : 1;
            const auto path = output_path(g, train_out);
            fl_dataset* d = nullptr;
            check(fl_dataset_load(train_data.c_str(), &d));
            Owned<fl_dataset> data(d);
            auto progress = [](int epoch, double train_loss, double test_loss, double acc,
                               void* user) {
                const auto* gl = static_cast<const Globals*>(user);
                char buf[160];
                std::snprintf(buf, sizeof buf,
                              "epoch %3d  train %.6g  test %.6g  zone accuracy %.2f%%", epoch,
                              train_loss, test_loss, 100.0 * acc);
                log(*gl, Level::info, buf);
            };
            fl_model* m = nullptr;
            check(fl_train(frame.get(), data.get(), &tcfg, progress, &g, &m));
            Owned<fl_model> model(m);
            check(fl_model_save(m, path.c_str()));
            std::cout << "wrote " << model_kind << " checkpoint (" << fl_model_parameter_count(m)
                      << " parameters, best epoch " << fl_model_best_epoch(m) << ") to " << path
                      << '\n';
        } else if (*ev) {
            std::string csv_path;
            if (!ev_csv.empty()) {
                csv_path = output_path(g, ev_csv);
            }
            fl_model* m = nullptr;
            check(fl_model_load(ev_ckpt.c_str(), &m));
            Owned<fl_model> model(m);
            fl_dataset* d = nullptr;
            check(fl_dataset_load(ev_data.c_str(), &d));
            Owned<fl_dataset> data(d);
            char* csv = nullptr;
            char* text = nullptr;
            check(fl_evaluate(m, frame.get(), d, ev_profile.c_str(), &csv, &text));
            const std::string csv_text = take(csv);
            std::cout << take(text);
            if (!csv_path.empty()) {
                write_text(csv_path, csv_text);
                log(g, Level::info, "wrote " + csv_path);
            }
        } else if (*pr) {
            fl_model* m = nullptr;
            check(fl_model_load(pr_ckpt.c_str(), &m));
            Owned<fl_model> model(m);
            char* table = nullptr;
            check(fl_case_table(m, frame.get(), pr_fmid, pr_ftop, &table));
            std::cout << take(table);
        } else if (*cu) {
            const auto csv_path = output_path(g, cu_csv);
            const auto svg_path = cu_svg.empty() ? std::string() : output_path(g, cu_svg);
            fl_curve* c = nullptr;
            check(fl_pushover(frame.get(), cu_fmid, cu_ftop, cu_steps, cu_alpha, &c));
            Owned<fl_curve> curve(c);
            char* csv = nullptr;
            check(fl_curve_csv(c, &csv));
            write_text(csv_path, take(csv));
            if (!svg_path.empty()) {
                char* svg = nullptr;
                check(fl_curve_svg(c, &svg));
                write_text(svg_path, take(svg));
            }
            std::vector<fl_node_response> final_state(nodes);
            check(fl_curve_final_response(c, final_state.data(), final_state.size()));
            std::cout << fl_curve_point_count(c) << " curve points, " << fl_curve_hinge_count(c)
                      << " hinges; wrote " << csv_path << (svg_path.empty() ? "" : " and ")
                      << svg_path << '\n';
            for (size_t k = 0; k < nodes; ++k) {
                std::cout << "node " << k + 1 << "  u_x " << fmt("%.3f", final_state[k].ux_mm)
                          << " mm\n";
            }
        }
    } catch (const Failure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
