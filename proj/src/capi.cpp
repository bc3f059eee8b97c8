#include "framelab/framelab.h"

#include "framelab/dataset.hpp"
#include "framelab/error.hpp"
#include "framelab/evaluator.hpp"
#include "framelab/fem.hpp"
#include "framelab/frame.hpp"
#include "framelab/learner.hpp"
#include "framelab/yield.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct fl_frame {
    framelab::Frame frame;
};

struct fl_dataset {
    std::vector<framelab::CaseRecord> records;
};

struct fl_model {
    framelab::TrainedModel model;
};

struct fl_curve {
    framelab::Frame frame;
    framelab::NonlinearResult result;
};

namespace {

thread_local std::string g_last_error;

fl_status status_of(framelab::ErrorKind kind) {
    using framelab::ErrorKind;
    switch (kind) {
    case ErrorKind::invalid_argument:
        return FL_ERR_INVALID_ARGUMENT;
    case ErrorKind::domain:
        return FL_ERR_DOMAIN;
    case ErrorKind::mechanism:
        return FL_ERR_MECHANISM;
    case ErrorKind::io:
        return FL_ERR_IO;
    case ErrorKind::parse:
        return FL_ERR_PARSE;
    case ErrorKind::schema:
        return FL_ERR_SCHEMA;
    case ErrorKind::version:
        return FL_ERR_VERSION;
    case ErrorKind::diverged:
        return FL_ERR_DIVERGED;
    }
    return FL_ERR_INTERNAL;
}

template <typename F>
fl_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return FL_OK;
    } catch (const framelab::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return FL_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FL_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) {
        framelab::fail(framelab::ErrorKind::invalid_argument, what);
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void copy_response(const framelab::ResponseField& field, fl_node_response* out, size_t capacity) {
    require(out != nullptr, "output buffer is null");
    require(capacity >= field.size(), "output buffer too small for every node");
    for (size_t k = 0; k < field.size(); ++k) {
        out[k] = {field[k].ux_mm, field[k].uy_mm, field[k].rz_deg};
    }
}

} // namespace

extern "C" {

const char* fl_status_string(fl_status status) {
    switch (status) {
    case FL_OK:
        return "ok";
    case FL_ERR_INVALID_ARGUMENT:
        return "invalid argument";
    case FL_ERR_DOMAIN:
        return "domain error";
    case FL_ERR_MECHANISM:
        return "mechanism (singular stiffness)";
    case FL_ERR_IO:
        return "i/o error";
    case FL_ERR_PARSE:
        return "parse error";
    case FL_ERR_SCHEMA:
        return "schema error";
    case FL_ERR_VERSION:
        return "unsupported version";
    case FL_ERR_DIVERGED:
        return "training diverged";
    case FL_ERR_INTERNAL:
        return "internal error";
    }
    return "unknown status";
}

const char* fl_last_error(void) {
    return g_last_error.c_str();
}

const char* fl_version(void) {
    return "0.1.0";
}

void fl_string_free(char* s) {
    std::free(s);
}

// ---- frame ----

void fl_frame_config_default(fl_frame_config* config) {
    if (!config) {
        return;
    }
    const framelab::FrameConfig d;
    *config = {d.story_height, d.bay_width,   d.phi_scwb,
               d.column_area,  d.column_inertia, d.beam_area,
               d.beam_inertia, d.material.youngs_modulus, d.material.yield_strength};
}

fl_status fl_frame_create_reference(const fl_frame_config* config, fl_frame** out) {
    return guarded([&] {
        require(out != nullptr, "output handle is null");
        framelab::FrameConfig c;
        if (config) {
            c.story_height = config->story_height;
            c.bay_width = config->bay_width;
            c.phi_scwb = config->phi_scwb;
            c.column_area = config->column_area;
            c.column_inertia = config->column_inertia;
            c.beam_area = config->beam_area;
            c.beam_inertia = config->beam_inertia;
            c.material.youngs_modulus = config->youngs_modulus;
            c.material.yield_strength = config->yield_strength;
        }
        *out = new fl_frame{framelab::build_reference_frame(c)};
    });
}

fl_status fl_frame_load(const char* path, fl_frame** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new fl_frame{framelab::load_frame(path)};
    });
}

fl_status fl_frame_save(const fl_frame* frame, const char* path) {
    return guarded([&] {
        require(frame && path, "null argument");
        framelab::save_frame(frame->frame, path);
    });
}

void fl_frame_destroy(fl_frame* frame) {
    delete frame;
}

size_t fl_frame_node_count(const fl_frame* frame) {
    return frame ? frame->frame.nodes.size() : 0;
}

fl_status fl_frame_validate(const fl_frame* frame, char** report) {
    return guarded([&] {
        require(frame && report, "null argument");
        std::string text;
        for (const auto& line : framelab::validate_frame(frame->frame)) {
            text += line + "\n";
        }
        *report = dup_string(text);
    });
}

// ---- fem ----

fl_status fl_solve_linear(const fl_frame* frame, double f_mid, double f_top,
                          fl_node_response* out, size_t capacity) {
    return guarded([&] {
        require(frame != nullptr, "frame handle is null");
        copy_response(framelab::solve_linear(frame->frame, {f_mid, f_top}), out, capacity);
    });
}

fl_status fl_pushover(const fl_frame* frame, double f_mid, double f_top, int n_steps,
                      double hardening_ratio, fl_curve** out) {
    return guarded([&] {
        require(frame && out, "null argument");
        framelab::NonlinearOptions opt;
        opt.n_steps = n_steps;
        opt.hardening_ratio = hardening_ratio;
        auto result = framelab::solve_nonlinear(frame->frame, {f_mid, f_top}, opt);
        *out = new fl_curve{frame->frame, std::move(result)};
    });
}

void fl_curve_destroy(fl_curve* curve) {
    delete curve;
}

size_t fl_curve_hinge_count(const fl_curve* curve) {
    return curve ? curve->result.yielded_count() : 0;
}

size_t fl_curve_point_count(const fl_curve* curve) {
    return curve ? curve->result.curve.points.size() : 0;
}

fl_status fl_curve_final_response(const fl_curve* curve, fl_node_response* out, size_t capacity) {
    return guarded([&] {
        require(curve != nullptr, "curve handle is null");
        copy_response(curve->result.response, out, capacity);
    });
}

fl_status fl_curve_csv(const fl_curve* curve, char** csv) {
    return guarded([&] {
        require(curve && csv, "null argument");
        *csv = dup_string(framelab::curve_to_csv(curve->result.curve, curve->frame));
    });
}

fl_status fl_curve_svg(const fl_curve* curve, char** svg) {
    return guarded([&] {
        require(curve && svg, "null argument");
        *svg = dup_string(framelab::curve_to_svg(curve->result.curve, curve->frame));
    });
}

// ---- yield ----

fl_status fl_portal_yield(const fl_frame* frame, double yield_strength, fl_yield_estimate* out) {
    return guarded([&] {
        require(frame && out, "null argument");
        const auto e = framelab::portal_yield(frame->frame, yield_strength);
        *out = {e.yield_moment, e.yield_shear, e.elastic_bound};
    });
}

fl_status fl_increment_scan(double f_max, int n_steps, const fl_yield_estimate* estimate,
                            fl_scan_row* rows, size_t capacity) {
    return guarded([&] {
        require(estimate && rows, "null argument");
        const framelab::YieldEstimate e{estimate->yield_moment, estimate->yield_shear,
                                        estimate->elastic_bound};
        const auto scan = framelab::increment_scan(f_max, n_steps, e);
        require(capacity >= scan.size(), "row buffer too small");
        for (size_t k = 0; k < scan.size(); ++k) {
            const auto& r = scan[k];
            rows[k] = {r.step, r.load_factor, r.force, r.ratio_story1, r.ratio_story2,
                       r.first_yield ? 1 : 0};
        }
    });
}

// ---- dataset ----

void fl_dataset_config_default(fl_dataset_config* config) {
    if (!config) {
        return;
    }
    const framelab::DatasetConfig d;
    *config = {d.n_cases,
               d.linear_range.min,
               d.linear_range.max,
               d.nonlinear_range.min,
               d.nonlinear_range.max,
               d.mix,
               d.split,
               d.seed,
               d.solver.n_steps,
               d.solver.hardening_ratio};
}

fl_status fl_dataset_generate(const fl_frame* frame, const fl_dataset_config* config,
                              fl_dataset** out) {
    return guarded([&] {
        require(frame && config && out, "null argument");
        framelab::DatasetConfig c;
        c.n_cases = config->n_cases;
        c.linear_range = {config->linear_min, config->linear_max};
        c.nonlinear_range = {config->nonlinear_min, config->nonlinear_max};
        c.mix = config->mix;
        c.split = config->split;
        c.seed = config->seed;
        c.solver.n_steps = config->n_steps;
        c.solver.hardening_ratio = config->hardening_ratio;
        *out = new fl_dataset{framelab::generate_dataset(frame->frame, c)};
    });
}

fl_status fl_dataset_load(const char* path, fl_dataset** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new fl_dataset{framelab::load_dataset(path)};
    });
}

fl_status fl_dataset_save(const fl_dataset* dataset, const char* path) {
    return guarded([&] {
        require(dataset && path, "null argument");
        framelab::save_dataset(dataset->records, path);
    });
}

void fl_dataset_destroy(fl_dataset* dataset) {
    delete dataset;
}

size_t fl_dataset_size(const fl_dataset* dataset) {
    return dataset ? dataset->records.size() : 0;
}

size_t fl_dataset_linear_count(const fl_dataset* dataset) {
    if (!dataset) {
        return 0;
    }
    size_t n = 0;
    for (const auto& r : dataset->records) {
        n += r.regime == framelab::Regime::linear ? 1 : 0;
    }
    return n;
}

// ---- learner ----

void fl_train_config_default(fl_train_config* config) {
    if (!config) {
        return;
    }
    const framelab::TrainConfig d;
    *config = {FL_MODEL_GNN, d.learning_rate, d.batch_size,   d.max_epochs, d.lambda,
               d.seed,       d.hidden_dim,    d.self_term ? 1 : 0, d.split_fraction, d.split_seed};
}

fl_status fl_train(const fl_frame* frame, const fl_dataset* dataset, const fl_train_config* config,
                   fl_epoch_callback on_epoch, void* user, fl_model** out) {
    return guarded([&] {
        require(frame && dataset && config && out, "null argument");
        require(config->kind == FL_MODEL_GNN || config->kind == FL_MODEL_NN, "unknown model kind");
        framelab::TrainConfig c;
        c.kind = config->kind == FL_MODEL_GNN ? framelab::ModelKind::gnn : framelab::ModelKind::nn;
        c.learning_rate = config->learning_rate;
        c.batch_size = config->batch_size;
        c.max_epochs = config->max_epochs;
        c.lambda = config->lambda;
        c.seed = config->seed;
        c.hidden_dim = config->hidden_dim;
        c.self_term = config->self_term != 0;
        c.split_fraction = config->split_fraction;
        c.split_seed = config->split_seed;
        const auto [training, testing] =
            framelab::split_dataset(dataset->records, c.split_fraction, c.split_seed);
        framelab::EpochCallback cb;
        if (on_epoch) {
            cb = [on_epoch, user](const framelab::EpochStats& e) {
                on_epoch(e.epoch, e.train_loss, e.test_loss, e.test_accuracy, user);
            };
        }
        *out = new fl_model{framelab::train(frame->frame, training, testing, c, cb)};
    });
}

fl_status fl_model_save(const fl_model* model, const char* path) {
    return guarded([&] {
        require(model && path, "null argument");
        framelab::save_checkpoint(model->model, path);
    });
}

fl_status fl_model_load(const char* path, fl_model** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new fl_model{framelab::load_checkpoint(path)};
    });
}

void fl_model_destroy(fl_model* model) {
    delete model;
}

size_t fl_model_parameter_count(const fl_model* model) {
    return model ? framelab::parameter_count(model->model.parameters()) : 0;
}

int fl_model_best_epoch(const fl_model* model) {
    return model ? model->model.history.best_epoch : 0;
}

fl_status fl_model_predict(const fl_model* model, const fl_frame* frame, double f_mid,
                           double f_top, fl_node_response* out, size_t capacity) {
    return guarded([&] {
        require(model && frame, "null argument");
        copy_response(model->model.predict(frame->frame, {f_mid, f_top}), out, capacity);
    });
}

// ---- evaluator ----

fl_status fl_evaluate(const fl_model* model, const fl_frame* frame, const fl_dataset* dataset,
                      const char* profile, char** csv, char** text) {
    return guarded([&] {
        require(model && frame && dataset && profile, "null argument");
        const auto tol = framelab::profile_by_name(profile);
        const auto& cfg = model->model.config;
        const auto [training, testing] =
            framelab::split_dataset(dataset->records, cfg.split_fraction, cfg.split_seed);
        std::vector<framelab::AccuracyReport> reports;
        reports.push_back(framelab::evaluate(model->model, frame->frame, testing, tol, "testing"));
        reports.push_back(framelab::evaluate(model->model, frame->frame, training, tol, "training"));
        std::string c = framelab::report_to_csv(reports);
        std::string t = framelab::report_to_text(reports);
        char* c_out = csv ? dup_string(c) : nullptr;
        if (text) {
            try {
                *text = dup_string(t);
            } catch (...) {
                std::free(c_out);
                throw;
            }
        }
        if (csv) {
            *csv = c_out;
        }
    });
}

fl_status fl_case_table(const fl_model* model, const fl_frame* frame, double f_mid, double f_top,
                        char** table) {
    return guarded([&] {
        require(model && frame && table, "null argument");
        const auto rows = framelab::case_table(model->model, frame->frame, {f_mid, f_top});
        *table = dup_string(framelab::format_case_table(rows));
    });
}

} // extern "C"
