#include "framelab/fem.hpp"

#include "framelab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace framelab {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::array<int, 6> element_dofs(const MemberSpec& m) {
    const int i = static_cast<int>(m.node_i) * 3;
    const int j = static_cast<int>(m.node_j) * 3;
    return {i, i + 1, i + 2, j, j + 1, j + 2};
}

Vector6 gather(const Eigen::VectorXd& d, const std::array<int, 6>& dofs) {
    Vector6 v;
    for (int k = 0; k < 6; ++k) {
        v[k] = d[dofs[k]];
    }
    return v;
}

std::vector<int> free_dofs_of(const Frame& frame) {
    std::vector<int> free;
    for (std::size_t n = 0; n < frame.nodes.size(); ++n) {
        const auto& node = frame.nodes[n];
        const bool fixed[3] = {node.bc_ux, node.bc_uy, node.bc_rz};
        for (int c = 0; c < 3; ++c) {
            if (!fixed[c]) {
                free.push_back(static_cast<int>(n) * 3 + c);
            }
        }
    }
    return free;
}

Eigen::MatrixXd reduce(const Eigen::MatrixXd& full, const std::vector<int>& free) {
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd r(nf, nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
        for (Eigen::Index b = 0; b < nf; ++b) {
            r(a, b) = full(free[a], free[b]);
        }
    }
    return r;
}

Eigen::VectorXd load_vector(const Frame& frame, const std::vector<NodalLoad>& loads) {
    if (loads.size() != frame.nodes.size()) {
        fail(ErrorKind::invalid_argument, "load vector size does not match node count");
    }
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * loads.size()));
    for (std::size_t n = 0; n < loads.size(); ++n) {
        const auto& l = loads[n];
        if (!std::isfinite(l.fx) || !std::isfinite(l.fy) || !std::isfinite(l.mz)) {
            fail(ErrorKind::invalid_argument,
                 "non-finite load at node " + std::to_string(frame.nodes[n].id));
        }
        f[3 * n] = l.fx;
        f[3 * n + 1] = l.fy;
        f[3 * n + 2] = l.mz;
    }
    return f;
}

// Solves the reduced system and scatters back, fixed DOFs exactly zero.
Eigen::VectorXd solve_reduced(const Eigen::MatrixXd& full, const std::vector<int>& free,
                              const Eigen::VectorXd& f, const char* context) {
    const Eigen::MatrixXd k = reduce(full, free);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(free.size()));
    for (std::size_t a = 0; a < free.size(); ++a) {
        rhs[static_cast<Eigen::Index>(a)] = f[free[a]];
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
    const double scale = k.diagonal().cwiseAbs().maxCoeff();
    const auto diag = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        diag.cwiseAbs().minCoeff() <= 1e-12 * scale) {
        fail(ErrorKind::mechanism, std::string(context) + ": stiffness matrix is singular (mechanism)");
    }
    const Eigen::VectorXd x = ldlt.solve(rhs);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(full.rows());
    for (std::size_t a = 0; a < free.size(); ++a) {
        d[free[a]] = x[static_cast<Eigen::Index>(a)];
    }
    return d;
}

} // namespace

ElementStiffness element_stiffness(const NodeSpec& a, const NodeSpec& b,
                                   const SectionProperties& section, double youngs_modulus) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len = std::hypot(dx, dy);
    if (!(len > 1e-12)) {
        fail(ErrorKind::domain, "element_stiffness: coincident endpoints (nodes " +
                                    std::to_string(a.id) + ", " + std::to_string(b.id) + ")");
    }
    ElementStiffness e;
    e.length = len;
    e.cos_theta = dx / len;
    e.sin_theta = dy / len;

    const double ea = youngs_modulus * section.area / len;
    const double ei = youngs_modulus * section.moment_of_inertia;
    const double k1 = 12.0 * ei / (len * len * len);
    const double k2 = 6.0 * ei / (len * len);
    const double k3 = 4.0 * ei / len;
    const double k4 = 2.0 * ei / len;

    Matrix6& k = e.local;
    k << ea, 0, 0, -ea, 0, 0,
         0, k1, k2, 0, -k1, k2,
         0, k2, k3, 0, -k2, k4,
         -ea, 0, 0, ea, 0, 0,
         0, -k1, -k2, 0, k1, -k2,
         0, k2, k4, 0, -k2, k3;

    const double c = e.cos_theta;
    const double s = e.sin_theta;
    e.transform.setZero();
    for (int blk = 0; blk < 2; ++blk) {
        const int o = 3 * blk;
        e.transform(o, o) = c;
        e.transform(o, o + 1) = s;
        e.transform(o + 1, o) = -s;
        e.transform(o + 1, o + 1) = c;
        e.transform(o + 2, o + 2) = 1.0;
    }
    e.global = e.transform.transpose() * e.local * e.transform;
    return e;
}

ElementStiffness element_stiffness(const Frame& frame, std::size_t member_index) {
    const auto& m = frame.members.at(member_index);
    return element_stiffness(frame.nodes.at(m.node_i), frame.nodes.at(m.node_j), m.section,
                             frame.material.youngs_modulus);
}

Matrix6 release_end_moments(const Matrix6& local, bool release_i, bool release_j) {
    std::vector<int> released;
    if (release_i) {
        released.push_back(2);
    }
    if (release_j) {
        released.push_back(5);
    }
    if (released.empty()) {
        return local;
    }
    const auto nr = static_cast<Eigen::Index>(released.size());
    Eigen::MatrixXd krr(nr, nr);
    Eigen::MatrixXd kar(6, nr);
    for (Eigen::Index p = 0; p < nr; ++p) {
        for (Eigen::Index q = 0; q < nr; ++q) {
            krr(p, q) = local(released[p], released[q]);
        }
        for (int a = 0; a < 6; ++a) {
            kar(a, p) = local(a, released[p]);
        }
    }
    Matrix6 out = local - kar * krr.inverse() * kar.transpose();
    for (int r : released) {
        out.row(r).setZero();
        out.col(r).setZero();
    }
    return out;
}

GlobalSystem assemble_global(const Frame& frame) {
    GlobalSystem sys;
    const auto ndof = static_cast<Eigen::Index>(3 * frame.nodes.size());
    sys.full = Eigen::MatrixXd::Zero(ndof, ndof);
    for (std::size_t m = 0; m < frame.members.size(); ++m) {
        const auto ke = element_stiffness(frame, m).global;
        const auto dofs = element_dofs(frame.members[m]);
        for (int a = 0; a < 6; ++a) {
            for (int b = 0; b < 6; ++b) {
                sys.full(dofs[a], dofs[b]) += ke(a, b);
            }
        }
    }
    sys.free_dofs = free_dofs_of(frame);
    sys.reduced = reduce(sys.full, sys.free_dofs);
    if (sys.reduced.rows() > 0) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(sys.reduced);
        const double scale = sys.reduced.diagonal().cwiseAbs().maxCoeff();
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
            ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-12 * scale) {
            fail(ErrorKind::mechanism, "assemble_global: constrained stiffness is singular (mechanism)");
        }
    }
    return sys;
}

Eigen::Index constrained_rank(const Frame& frame) {
    const auto ndof = static_cast<Eigen::Index>(3 * frame.nodes.size());
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(ndof, ndof);
    for (std::size_t m = 0; m < frame.members.size(); ++m) {
        const auto ke = element_stiffness(frame, m).global;
        const auto dofs = element_dofs(frame.members[m]);
        for (int a = 0; a < 6; ++a) {
            for (int b = 0; b < 6; ++b) {
                full(dofs[a], dofs[b]) += ke(a, b);
            }
        }
    }
    const auto k = reduce(full, free_dofs_of(frame));
    if (k.rows() == 0) {
        return 0;
    }
    // Rotational and translational entries differ by many orders of magnitude;
    // symmetric diagonal scaling keeps the rank threshold meaningful.
    Eigen::VectorXd s = k.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd scaled = s.asDiagonal() * k * s.asDiagonal();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(scaled);
    lu.setThreshold(1e-10);
    return lu.rank();
}

ResponseField to_response_field(const Eigen::VectorXd& d) {
    ResponseField out(static_cast<std::size_t>(d.size() / 3));
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n].ux_mm = d[3 * n] * 1e3;
        out[n].uy_mm = d[3 * n + 1] * 1e3;
        out[n].rz_deg = d[3 * n + 2] * kRadToDeg;
    }
    return out;
}

Eigen::VectorXd solve_linear_dofs(const Frame& frame, const std::vector<NodalLoad>& loads) {
    const Eigen::VectorXd f = load_vector(frame, loads);
    const auto sys = assemble_global(frame);
    return solve_reduced(sys.full, sys.free_dofs, f, "solve_linear");
}

ResponseField solve_linear(const Frame& frame, const LoadCase& loads) {
    return to_response_field(solve_linear_dofs(frame, expand_loads(frame, loads)));
}

std::vector<std::array<double, 2>> member_end_moments(const Frame& frame,
                                                      const Eigen::VectorXd& d) {
    std::vector<std::array<double, 2>> out;
    out.reserve(frame.members.size());
    for (std::size_t m = 0; m < frame.members.size(); ++m) {
        const auto e = element_stiffness(frame, m);
        const Vector6 f = e.local * (e.transform * gather(d, element_dofs(frame.members[m])));
        out.push_back({f[2], f[5]});
    }
    return out;
}

double first_yield_factor(const Frame& frame, const LoadCase& loads) {
    const auto d = solve_linear_dofs(frame, expand_loads(frame, loads));
    const auto moments = member_end_moments(frame, d);
    double factor = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < frame.members.size(); ++m) {
        const double mp = frame.members[m].section.plastic_moment;
        for (double mo : moments[m]) {
            if (std::abs(mo) > 0.0) {
                factor = std::min(factor, mp / std::abs(mo));
            }
        }
    }
    return factor;
}

StoryShears story_shears(const LoadCase& loads) {
    return {loads.f_top + loads.f_mid, loads.f_top};
}

std::size_t NonlinearResult::yielded_count() const {
    return static_cast<std::size_t>(std::count_if(hinges.begin(), hinges.end(), [](const auto& h) {
        return h.status == HingeStatus::yielded;
    }));
}

NonlinearResult solve_nonlinear(const Frame& frame, const LoadCase& loads,
                                const NonlinearOptions& options) {
    if (options.n_steps < 10) {
        fail(ErrorKind::invalid_argument, "solve_nonlinear: n_steps must be at least 10");
    }
    const double alpha = options.hardening_ratio;
    if (!(alpha > 0.0 && alpha < 1.0)) {
        fail(ErrorKind::invalid_argument, "solve_nonlinear: hardening ratio must lie in (0, 1)");
    }

    const std::size_t nm = frame.members.size();
    const Eigen::VectorXd f_ref = load_vector(frame, expand_loads(frame, loads));
    const auto free = free_dofs_of(frame);
    const auto ndof = f_ref.size();

    std::vector<ElementStiffness> elems;
    elems.reserve(nm);
    for (std::size_t m = 0; m < nm; ++m) {
        elems.push_back(element_stiffness(frame, m));
    }

    NonlinearResult result;
    result.hinges.resize(2 * nm);
    for (std::size_t m = 0; m < nm; ++m) {
        for (int end = 0; end < 2; ++end) {
            auto& h = result.hinges[2 * m + static_cast<std::size_t>(end)];
            h.member = m;
            h.end = end;
            h.plastic_moment = frame.members[m].section.plastic_moment;
            h.hardening_ratio = alpha;
        }
    }
    auto yielded = [&](std::size_t m, int end) {
        return result.hinges[2 * m + static_cast<std::size_t>(end)].status == HingeStatus::yielded;
    };

    Eigen::VectorXd d = Eigen::VectorXd::Zero(ndof);
    std::vector<std::array<double, 2>> moments(nm, {0.0, 0.0});
    double lambda = 0.0;

    auto record = [&](double factor) {
        CurvePoint p;
        p.load_factor = factor;
        const auto base = story_shears(loads);
        p.shears = {factor * base.v1, factor * base.v2};
        p.response = to_response_field(d);
        result.curve.points.push_back(std::move(p));
    };
    record(0.0);

    const double dlambda = 1.0 / options.n_steps;
    for (int step = 1; step <= options.n_steps; ++step) {
        const double target = (step == options.n_steps) ? 1.0 : step * dlambda;
        double remaining = target - lambda;

        while (remaining > 0.0) {
            // Tangent for the current hinge pattern; response is linear in the
            // load factor until the next hinge forms.
            Eigen::MatrixXd kt = Eigen::MatrixXd::Zero(ndof, ndof);
            std::vector<Matrix6> tangents(nm);
            for (std::size_t m = 0; m < nm; ++m) {
                const Matrix6 plastic =
                    release_end_moments(elems[m].local, yielded(m, 0), yielded(m, 1));
                tangents[m] = alpha * elems[m].local + (1.0 - alpha) * plastic;
                const Matrix6 kg = elems[m].transform.transpose() * tangents[m] * elems[m].transform;
                const auto dofs = element_dofs(frame.members[m]);
                for (int a = 0; a < 6; ++a) {
                    for (int b = 0; b < 6; ++b) {
                        kt(dofs[a], dofs[b]) += kg(a, b);
                    }
                }
            }
            Eigen::VectorXd du;
            try {
                du = solve_reduced(kt, free, f_ref, "solve_nonlinear");
            } catch (const Error& e) {
                fail(e.kind(), std::string(e.what()) + " at load step " + std::to_string(step));
            }
            std::vector<std::array<double, 2>> dm(nm);
            for (std::size_t m = 0; m < nm; ++m) {
                const Vector6 local = tangents[m] * (elems[m].transform *
                                                     gather(du, element_dofs(frame.members[m])));
                dm[m] = {local[2], local[5]};
            }

            auto crossings = [&](double s) {
                std::vector<std::size_t> hit;
                for (std::size_t m = 0; m < nm; ++m) {
                    for (int end = 0; end < 2; ++end) {
                        if (yielded(m, end)) {
                            continue;
                        }
                        const double mo = moments[m][static_cast<std::size_t>(end)] +
                                          s * dm[m][static_cast<std::size_t>(end)];
                        if (std::abs(mo) >= frame.members[m].section.plastic_moment) {
                            hit.push_back(2 * m + static_cast<std::size_t>(end));
                        }
                    }
                }
                return hit;
            };

            double advance = remaining;
            auto hit = crossings(remaining);
            if (!hit.empty()) {
                double lo = 0.0;
                double hi = remaining;
                for (int b = 0; b < options.max_bisections; ++b) {
                    const double mid = 0.5 * (lo + hi);
                    if (crossings(mid).empty()) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                advance = hi;
                hit = crossings(hi);
            }

            d += advance * du;
            for (std::size_t m = 0; m < nm; ++m) {
                moments[m][0] += advance * dm[m][0];
                moments[m][1] += advance * dm[m][1];
            }
            lambda += advance;
            remaining = target - lambda;
            if (remaining < 1e-14) {
                remaining = 0.0;
                lambda = target;
            }
            for (std::size_t idx : hit) {
                result.hinges[idx].status = HingeStatus::yielded;
                result.hinges[idx].yield_load_factor = lambda;
            }
        }
        record(lambda);
    }

    for (std::size_t m = 0; m < nm; ++m) {
        result.hinges[2 * m].moment = moments[m][0];
        result.hinges[2 * m + 1].moment = moments[m][1];
    }
    result.response = to_response_field(d);
    return result;
}

} // namespace framelab
