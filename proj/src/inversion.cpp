#include "egomd/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "egomd/errors.hpp"
#include "egomd/rng.hpp"
#include "egomd/textdoc.hpp"
#include "egomd/units.hpp"

namespace egomd {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = 180.0 / kPi;
}  // namespace

void CgMapping::validate(int atom_count) const {
    if (groups.empty()) throw UserError("mapping: no bead groups");
    std::map<int, double> weight_sum;
    for (const auto& g : groups) {
        if (g.atom_indices.empty()) throw UserError("mapping: bead '" + g.bead_name + "' has no atoms");
        if (g.atom_indices.size() != g.weights.size())
            throw UserError("mapping: bead '" + g.bead_name + "': weight/index count mismatch");
        for (std::size_t a = 0; a < g.atom_indices.size(); ++a) {
            const int idx = g.atom_indices[a];
            if (idx < 0 || idx >= atom_count)
                throw UserError("mapping: bead '" + g.bead_name + "': atom index " + std::to_string(idx) +
                                " out of range (frame has " + std::to_string(atom_count) + " atoms)");
            if (!(g.weights[a] > 0.0))
                throw UserError("mapping: bead '" + g.bead_name + "': weights must be > 0");
            weight_sum[idx] += g.weights[a];
        }
    }
    for (const auto& [idx, w] : weight_sum) {
        if (std::abs(w - 1.0) > 1e-9)
            throw UserError("mapping: weights of atom " + std::to_string(idx) + " sum to " +
                            std::to_string(w) + ", expected 1");
    }
}

CgMapping CgMapping::from_text(const std::string& content, const std::string& path) {
    const TextDoc doc = parse_textdoc(content, path);
    expect_format(doc, "egomd-mapping", 1);
    CgMapping mapping;
    for (const auto& s : doc.sections) {
        if (s.name == "bead") {
            if (s.args.size() != 1)
                throw UserError(path + ":" + std::to_string(s.line) + ": [bead] needs one name");
            Group g;
            g.bead_name = s.args[0];
            for (const auto& kv : s.entries) {
                if (kv.key != "atom")
                    throw UserError(path + ":" + std::to_string(kv.line) + ": expected 'atom = index weight'");
                if (kv.tokens.empty())
                    throw UserError(path + ":" + std::to_string(kv.line) + ": atom row needs an index");
                g.atom_indices.push_back(static_cast<int>(parse_number(kv.tokens[0], "atom index")));
                g.weights.push_back(kv.tokens.size() > 1 ? parse_number(kv.tokens[1], "atom weight") : 1.0);
            }
            mapping.groups.push_back(std::move(g));
        } else if (s.name == "masses") {
            for (const auto& kv : s.entries) {
                if (kv.tokens.empty())
                    throw UserError(path + ":" + std::to_string(kv.line) + ": mass row needs a value");
                mapping.mass_overrides[kv.key] = parse_number(kv.tokens[0], "mass");
            }
        } else {
            throw UserError(path + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");
        }
    }
    if (mapping.groups.empty()) throw UserError(path + ": mapping defines no beads");
    return mapping;
}

CgMapping CgMapping::load(const std::string& path) { return from_text(read_file(path), path); }

double element_mass(const std::string& name, const std::map<std::string, double>& overrides) {
    const auto it = overrides.find(name);
    if (it != overrides.end()) return it->second;
    static const std::map<std::string, double> table = {
        {"H", 1.008},  {"C", 12.011}, {"N", 14.007}, {"O", 15.999},
        {"S", 32.06},  {"P", 30.974}, {"F", 18.998}, {"Cl", 35.45},
    };
    const auto jt = table.find(name);
    if (jt == table.end())
        throw UserError("unknown element '" + name + "'; add it to the mapping [masses] section");
    return jt->second;
}

std::vector<Vec3> map_frame(const std::vector<Vec3>& atom_positions,
                            const std::vector<double>& atom_masses, const CgMapping& mapping) {
    if (atom_positions.size() != atom_masses.size())
        throw UserError("map_frame: positions/masses size mismatch");
    mapping.validate(static_cast<int>(atom_positions.size()));
    std::vector<Vec3> beads;
    beads.reserve(mapping.groups.size());
    for (const auto& g : mapping.groups) {
        Vec3 acc{};
        double wm_sum = 0.0;
        for (std::size_t a = 0; a < g.atom_indices.size(); ++a) {
            const double wm = g.weights[a] * atom_masses[g.atom_indices[a]];
            acc += wm * atom_positions[g.atom_indices[a]];
            wm_sum += wm;
        }
        beads.push_back(acc / wm_sum);
    }
    return beads;
}

double HistogramSet::total_count() const {
    return std::accumulate(counts.begin(), counts.end(), 0.0);
}

HistogramSet histogram(const std::vector<double>& samples, BondedKind kind, double lo, double hi,
                       int bins) {
    if (samples.empty()) throw UserError("histogram: no samples");
    if (!(hi > lo) || bins < 1) throw UserError("histogram: bad bin specification");
    HistogramSet h;
    h.kind = kind;
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(bins, 0.0);
    const double width = (hi - lo) / bins;
    for (double v : samples) {
        if (v < lo) {
            h.overflow_lo += 1.0;
        } else if (v >= hi) {
            h.overflow_hi += 1.0;
        } else {
            h.counts[static_cast<int>((v - lo) / width)] += 1.0;
        }
    }
    return h;
}

std::vector<double> collect_bond_lengths(const std::vector<std::vector<Vec3>>& frames,
                                         const std::vector<std::array<int, 2>>& bonds, const Vec3* box) {
    std::vector<double> out;
    out.reserve(frames.size() * bonds.size());
    for (const auto& f : frames) {
        for (const auto& b : bonds) {
            const Vec3 d = box ? minimum_image_displacement(f[b[0]], f[b[1]], *box) : f[b[0]] - f[b[1]];
            out.push_back(norm(d));
        }
    }
    return out;
}

std::vector<double> collect_angles(const std::vector<std::vector<Vec3>>& frames,
                                   const std::vector<std::array<int, 3>>& angles, const Vec3* box) {
    std::vector<double> out;
    out.reserve(frames.size() * angles.size());
    for (const auto& f : frames) {
        for (const auto& t : angles) {
            const Vec3 a = box ? minimum_image_displacement(f[t[0]], f[t[1]], *box) : f[t[0]] - f[t[1]];
            const Vec3 b = box ? minimum_image_displacement(f[t[2]], f[t[1]], *box) : f[t[2]] - f[t[1]];
            const double c = std::clamp(dot(a, b) / (norm(a) * norm(b)), -1.0, 1.0);
            out.push_back(std::acos(c) * kDeg);
        }
    }
    return out;
}

HistogramSet renormalize(const HistogramSet& h) {
    if (h.counts.empty()) throw UserError("renormalize: empty histogram");
    HistogramSet out = h;
    out.p.assign(h.bins(), 0.0);
    for (int i = 0; i < h.bins(); ++i) {
        if (h.counts[i] <= 0.0) continue;
        const double q = h.center(i);
        const double jac = h.kind == BondedKind::Bond ? q * q : std::sin(q / kDeg);
        if (jac <= 1e-12)
            throw NumericError("renormalize: occupied bin at vanishing Jacobian (Q = " +
                               std::to_string(q) + ")");
        out.p[i] = h.counts[i] / jac;
    }
    double integral = 0.0;
    for (double v : out.p) integral += v * h.bin_width();
    if (!(integral > 0.0)) throw NumericError("renormalize: histogram has no occupied bins");
    for (double& v : out.p) v /= integral;
    out.normalized = true;
    return out;
}

TabulatedPotential boltzmann_invert(const HistogramSet& h, double temperature) {
    if (!h.normalized) throw UserError("boltzmann_invert: renormalize the histogram first");
    if (!(temperature > 0.0)) throw UserError("boltzmann_invert: temperature must be > 0");
    TabulatedPotential out;
    const double kt = units::kBoltzmann * temperature;
    for (int i = 0; i < h.bins(); ++i) {
        if (h.p[i] <= 0.0) continue;  // masked; the mixture fit bridges gaps
        out.q.push_back(h.center(i));
        out.u.push_back(-kt * std::log(h.p[i]));
    }
    if (out.q.size() < 5)
        throw NumericError("boltzmann_invert: fewer than 5 occupied bins, distribution unfittable");
    const double u_min = *std::min_element(out.u.begin(), out.u.end());
    for (double& u : out.u) u -= u_min;
    return out;
}

namespace {

// Gaussian-mixture density model and its Jacobian in the parameterization
// (log A_l, mu_l, log xi_l), which keeps areas and widths positive.
struct MixtureModel {
    int m;
    std::vector<double> theta;  // 3m

    double area(int l) const { return std::exp(theta[3 * l]); }
    double mu(int l) const { return theta[3 * l + 1]; }
    double xi(int l) const { return std::exp(theta[3 * l + 2]); }

    double eval(double q) const {
        double s = 0.0;
        for (int l = 0; l < m; ++l) {
            const double d = (q - mu(l)) / xi(l);
            s += area(l) / (xi(l) * std::sqrt(kPi / 2.0)) * std::exp(-0.5 * d * d);
        }
        return s;
    }

    void jacobian_row(double q, double* row) const {
        for (int l = 0; l < m; ++l) {
            const double d = (q - mu(l)) / xi(l);
            const double g = area(l) / (xi(l) * std::sqrt(kPi / 2.0)) * std::exp(-0.5 * d * d);
            row[3 * l] = g;                      // d/d(log A)
            row[3 * l + 1] = g * d / xi(l);      // d/d(mu)
            row[3 * l + 2] = g * (d * d - 1.0);  // d/d(log xi)
        }
    }
};

// Solves (A + lambda diag(A)) x = b in place; A is n x n symmetric.
bool solve_damped(std::vector<double> a, std::vector<double> b, int n, double lambda,
                  std::vector<double>& x) {
    for (int i = 0; i < n; ++i) a[i * n + i] *= 1.0 + lambda;
    // Gaussian elimination with partial pivoting
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        if (std::abs(a[pivot * n + col]) < 1e-300) return false;
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
        x[r] = s / a[r * n + r];
    }
    return true;
}

double sum_sq_residual(const MixtureModel& model, const std::vector<double>& q,
                       const std::vector<double>& p) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double r = model.eval(q[i]) - p[i];
        ssr += r * r;
    }
    return ssr;
}

struct LmOutcome {
    MixtureModel model;
    double ssr = 0.0;
    bool converged = false;
};

LmOutcome levenberg_marquardt(MixtureModel model, const std::vector<double>& q,
                              const std::vector<double>& p) {
    const int n = 3 * model.m;
    double lambda = 1e-3;
    double ssr = sum_sq_residual(model, q, p);
    bool converged = false;
    std::vector<double> jtj(n * n), jtr(n), row(n), delta;
    for (int iter = 0; iter < 300; ++iter) {
        std::fill(jtj.begin(), jtj.end(), 0.0);
        std::fill(jtr.begin(), jtr.end(), 0.0);
        for (std::size_t i = 0; i < q.size(); ++i) {
            model.jacobian_row(q[i], row.data());
            const double r = model.eval(q[i]) - p[i];
            for (int a = 0; a < n; ++a) {
                jtr[a] += row[a] * r;
                for (int b = a; b < n; ++b) jtj[a * n + b] += row[a] * row[b];
            }
        }
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < a; ++b) jtj[a * n + b] = jtj[b * n + a];

        bool improved = false;
        for (int tries = 0; tries < 12; ++tries) {
            std::vector<double> neg_jtr(n);
            for (int a = 0; a < n; ++a) neg_jtr[a] = -jtr[a];
            if (!solve_damped(jtj, neg_jtr, n, lambda, delta)) {
                lambda *= 10.0;
                continue;
            }
            MixtureModel trial = model;
            for (int a = 0; a < n; ++a) trial.theta[a] += delta[a];
            // keep widths within sane bounds to avoid exp overflow
            bool sane = true;
            for (int l = 0; l < trial.m; ++l)
                if (trial.theta[3 * l + 2] < -30.0 || trial.theta[3 * l + 2] > 30.0 ||
                    trial.theta[3 * l] < -60.0 || trial.theta[3 * l] > 60.0)
                    sane = false;
            const double trial_ssr = sane ? sum_sq_residual(trial, q, p) : 2.0 * ssr + 1.0;
            if (trial_ssr < ssr) {
                const double rel = (ssr - trial_ssr) / std::max(ssr, 1e-300);
                model = trial;
                ssr = trial_ssr;
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
                if (rel < 1e-12) converged = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!improved) {
            converged = true;  // stuck in a local minimum; accept it
            break;
        }
        if (converged) break;
    }
    return {std::move(model), ssr, converged};
}

MixtureFitResult fit_density_points(const std::vector<double>& q, const std::vector<double>& p,
                                    BondedKind kind, int m, double temperature_ref, std::uint64_t seed,
                                    int restarts) {
    if (m < 1) throw UserError("fit_mixture: m must be >= 1");
    if (q.size() < static_cast<std::size_t>(3 * m))
        throw NumericError("fit_mixture: fewer data points than parameters");

    // cumulative distribution for quantile-based component placement
    double total = 0.0;
    for (double v : p) total += v;
    if (!(total > 0.0)) throw NumericError("fit_mixture: distribution is identically zero");
    std::vector<double> cdf(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        cdf[i] = acc / total;
    }
    auto quantile = [&](double f) {
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), f);
        return q[std::min<std::size_t>(it - cdf.begin(), q.size() - 1)];
    };
    const double span = q.back() - q.front();
    const double bin_w = q.size() > 1 ? (q.back() - q.front()) / (static_cast<double>(q.size()) - 1.0) : 1.0;
    // P integrates to ~1 over the sampled range, so component areas start at
    // (integral / 2) / m; the model integral is 2*sum(A).
    const double p_integral = total * bin_w;

    Rng rng(seed);
    LmOutcome best;
    best.ssr = std::numeric_limits<double>::max();
    int best_start = -1;
    for (int start = 0; start < restarts; ++start) {
        MixtureModel model;
        model.m = m;
        model.theta.resize(3 * m);
        for (int l = 0; l < m; ++l) {
            const double f = (l + 1.0) / (m + 1.0);
            double mu = quantile(f);
            double xi = std::max(span / (4.0 * m), 2.0 * bin_w);
            double area = 0.5 * p_integral / m;
            if (start > 0) {  // jittered restarts
                mu += 0.15 * span / m * (rng.uniform() - 0.5);
                xi *= std::exp(0.5 * (rng.uniform() - 0.5));
                area *= std::exp(0.3 * (rng.uniform() - 0.5));
            }
            model.theta[3 * l] = std::log(area);
            model.theta[3 * l + 1] = mu;
            model.theta[3 * l + 2] = std::log(xi);
        }
        LmOutcome outcome = levenberg_marquardt(std::move(model), q, p);
        if (outcome.ssr < best.ssr) {
            best = std::move(outcome);
            best_start = start;
        }
    }

    MixtureFitResult result;
    result.params.kind = kind;
    result.params.temperature_ref = temperature_ref;
    for (int l = 0; l < m; ++l)
        result.params.components.push_back({best.model.area(l), best.model.mu(l), best.model.xi(l)});
    std::sort(result.params.components.begin(), result.params.components.end(),
              [](const GaussComponent& a, const GaussComponent& b) { return a.area > b.area; });
    result.rms_residual = std::sqrt(best.ssr / static_cast<double>(q.size()));
    result.converged = best.converged;
    result.best_start = best_start;
    return result;
}

}  // namespace

MixtureFitResult fit_mixture(const HistogramSet& renormalized, int m, double temperature_ref,
                             std::uint64_t seed, int restarts) {
    if (!renormalized.normalized) throw UserError("fit_mixture: histogram is not renormalized");
    std::vector<double> q, p;
    for (int i = 0; i < renormalized.bins(); ++i) {
        q.push_back(renormalized.center(i));
        p.push_back(renormalized.p[i]);
    }
    return fit_density_points(q, p, renormalized.kind, m, temperature_ref, seed, restarts);
}

MixtureFitResult fit_mixture_from_potential(const TabulatedPotential& u, BondedKind kind, int m,
                                            double temperature_ref, std::uint64_t seed) {
    if (u.q.size() != u.u.size() || u.q.empty()) throw UserError("fit_mixture: empty potential table");
    const double kt = units::kBoltzmann * temperature_ref;
    std::vector<double> p(u.q.size());
    for (std::size_t i = 0; i < u.q.size(); ++i) p[i] = std::exp(-u.u[i] / kt);
    // normalize on the (possibly non-uniform) grid with trapezoids
    double integral = 0.0;
    for (std::size_t i = 1; i < u.q.size(); ++i)
        integral += 0.5 * (p[i] + p[i - 1]) * (u.q[i] - u.q[i - 1]);
    if (!(integral > 0.0)) throw NumericError("fit_mixture: Boltzmann weights vanish");
    for (double& v : p) v /= integral;
    return fit_density_points(u.q, p, kind, m, temperature_ref, seed, 8);
}

}  // namespace egomd
