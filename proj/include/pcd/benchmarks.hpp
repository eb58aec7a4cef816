#pragma once

// Synthetic multi-objective tasks (ZDT, DTLZ, OmniTest, VLMOP), their
// analytic Pareto fronts, and seeded offline dataset generation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pcd/core.hpp"
#include "pcd/rng.hpp"

namespace pcd {

struct TaskSpec {
    std::string name;
    std::size_t d = 0;
    std::size_t m = 0;
    Vector lower;
    Vector upper;
    std::function<Vector(const Vector&)> evaluator;
    std::function<Matrix(std::size_t)> front_sampler;  // empty when no closed form is known
};

enum class SamplingStrategy { uniform, lhs, ea_collected };

inline SamplingStrategy parse_strategy(const std::string& s) {
    if (s == "uniform") return SamplingStrategy::uniform;
    if (s == "lhs") return SamplingStrategy::lhs;
    if (s == "ea-collected" || s == "ea") return SamplingStrategy::ea_collected;
    throw ContractError("unknown sampling strategy '" + s + "'");
}

inline std::string to_string(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::uniform: return "uniform";
        case SamplingStrategy::lhs: return "lhs";
        case SamplingStrategy::ea_collected: return "ea-collected";
    }
    return "?";
}

namespace tasks {

constexpr double pi = std::numbers::pi;

// Two-objective front sampled along f1. With sqrt_spacing, f1 = t^2 for
// evenly spaced t, which spaces points evenly along f2 = 1 - sqrt(f1).
inline Matrix zdt_front(std::size_t n, const std::function<double(double)>& f2_of_f1, double f1_lo,
                        double f1_hi, bool sqrt_spacing) {
    Matrix out(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        const double f1 = f1_lo + (f1_hi - f1_lo) * (sqrt_spacing ? t * t : t);
        out(static_cast<Eigen::Index>(i), 0) = f1;
        out(static_cast<Eigen::Index>(i), 1) = f2_of_f1(f1);
    }
    return out;
}

inline double zdt_g_linear(const Vector& x) {
    const auto n = x.size();
    return 1.0 + 9.0 * x.tail(n - 1).sum() / static_cast<double>(n - 1);
}

inline TaskSpec zdt1(std::size_t d) {
    TaskSpec t{"zdt1", d, 2, Vector::Zero(d), Vector::Ones(d), {}, {}};
    t.evaluator = [](const Vector& x) {
        const double f1 = x(0);
        const double g = zdt_g_linear(x);
        return Vector{{f1, g * (1.0 - std::sqrt(f1 / g))}};
    };
    t.front_sampler = [](std::size_t n) {
        return zdt_front(n, [](double f1) { return 1.0 - std::sqrt(f1); }, 0.0, 1.0, true);
    };
    return t;
}

inline TaskSpec zdt2(std::size_t d) {
    TaskSpec t{"zdt2", d, 2, Vector::Zero(d), Vector::Ones(d), {}, {}};
    t.evaluator = [](const Vector& x) {
        const double f1 = x(0);
        const double g = zdt_g_linear(x);
        const double r = f1 / g;
        return Vector{{f1, g * (1.0 - r * r)}};
    };
    t.front_sampler = [](std::size_t n) {
        return zdt_front(n, [](double f1) { return 1.0 - f1 * f1; }, 0.0, 1.0, false);
    };
    return t;
}

// Pareto-optimal f1 intervals of ZDT3 (disconnected front).
inline constexpr double kZdt3Intervals[5][2] = {{0.0, 0.0830015349},
                                                {0.1822287280, 0.2577623634},
                                                {0.4093136748, 0.4538821041},
                                                {0.6183967944, 0.6525117038},
                                                {0.8233317983, 0.8518328654}};

inline TaskSpec zdt3(std::size_t d) {
    TaskSpec t{"zdt3", d, 2, Vector::Zero(d), Vector::Ones(d), {}, {}};
    t.evaluator = [](const Vector& x) {
        const double f1 = x(0);
        const double g = zdt_g_linear(x);
        const double r = f1 / g;
        return Vector{{f1, g * (1.0 - std::sqrt(r) - r * std::sin(10.0 * pi * f1))}};
    };
    t.front_sampler = [](std::size_t n) {
        double total = 0.0;
        for (const auto& iv : kZdt3Intervals) total += iv[1] - iv[0];
        Matrix out(static_cast<Eigen::Index>(n), 2);
        for (std::size_t i = 0; i < n; ++i) {
            // Spread along the concatenated intervals.
            double s = n == 1 ? 0.0 : total * static_cast<double>(i) / static_cast<double>(n - 1);
            double f1 = kZdt3Intervals[4][1];
            for (const auto& iv : kZdt3Intervals) {
                const double len = iv[1] - iv[0];
                if (s <= len) {
                    f1 = iv[0] + s;
                    break;
                }
                s -= len;
            }
            out(static_cast<Eigen::Index>(i), 0) = f1;
            out(static_cast<Eigen::Index>(i), 1) = 1.0 - std::sqrt(f1) - f1 * std::sin(10.0 * pi * f1);
        }
        return out;
    };
    return t;
}

inline TaskSpec zdt4(std::size_t d) {
    Vector lo = Vector::Constant(d, -5.0);
    Vector hi = Vector::Constant(d, 5.0);
    lo(0) = 0.0;
    hi(0) = 1.0;
    TaskSpec t{"zdt4", d, 2, lo, hi, {}, {}};
    t.evaluator = [](const Vector& x) {
        const auto n = x.size();
        double g = 1.0 + 10.0 * static_cast<double>(n - 1);
        for (Eigen::Index i = 1; i < n; ++i) g += x(i) * x(i) - 10.0 * std::cos(4.0 * pi * x(i));
        const double f1 = x(0);
        return Vector{{f1, g * (1.0 - std::sqrt(f1 / g))}};
    };
    t.front_sampler = [](std::size_t n) {
        return zdt_front(n, [](double f1) { return 1.0 - std::sqrt(f1); }, 0.0, 1.0, true);
    };
    return t;
}

inline constexpr double kZdt6MinF1 = 0.2807753191;

inline TaskSpec zdt6(std::size_t d) {
    TaskSpec t{"zdt6", d, 2, Vector::Zero(d), Vector::Ones(d), {}, {}};
    t.evaluator = [](const Vector& x) {
        const auto n = x.size();
        const double s6 = std::pow(std::sin(6.0 * pi * x(0)), 6);
        const double f1 = 1.0 - std::exp(-4.0 * x(0)) * s6;
        const double g = 1.0 + 9.0 * std::pow(x.tail(n - 1).sum() / static_cast<double>(n - 1), 0.25);
        const double r = f1 / g;
        return Vector{{f1, g * (1.0 - r * r)}};
    };
    t.front_sampler = [](std::size_t n) {
        return zdt_front(n, [](double f1) { return 1.0 - f1 * f1; }, kZdt6MinF1, 1.0, false);
    };
    return t;
}

inline TaskSpec dtlz1(std::size_t d, std::size_t m) {
    TaskSpec t{"dtlz1", d, m, Vector::Zero(d), Vector::Ones(d), {}, {}};
    t.evaluator = [m](const Vector& x) {
        const auto n = static_cast<std::size_t>(x.size());
        const std::size_t k = n - m + 1;
        double g = 0.0;
        for (std::size_t i = m - 1; i < n; ++i) {
            const double z = x(static_cast<Eigen::Index>(i)) - 0.5;
            g += z * z - std::cos(20.0 * pi * z);
        }
        g = 100.0 * (static_cast<double>(k) + g);
        Vector f(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            double v = 0.5 * (1.0 + g);
            for (std::size_t j = 0; j + 1 < m - i; ++j) v *= x(static_cast<Eigen::Index>(j));
            if (i > 0) v *= 1.0 - x(static_cast<Eigen::Index>(m - 1 - i));
            f(static_cast<Eigen::Index>(i)) = v;
        }
        return f;
    };
    t.front_sampler = [m, d, eval = t.evaluator](std::size_t n) {
        // Distance variables at 0.5 put g = 0; position variables seeded.
        Rng rng(0xd71a1ULL + m);
        Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
        Vector x = Vector::Constant(static_cast<Eigen::Index>(d), 0.5);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j + 1 < m; ++j) x(static_cast<Eigen::Index>(j)) = rng.uniform();
            out.row(static_cast<Eigen::Index>(i)) = eval(x).transpose();
        }
        return out;
    };
    return t;
}

inline TaskSpec dtlz7(std::size_t d, std::size_t m) {
    TaskSpec t{"dtlz7", d, m, Vector::Zero(d), Vector::Ones(d), {}, {}};
    t.evaluator = [m](const Vector& x) {
        const auto n = static_cast<std::size_t>(x.size());
        const std::size_t k = n - m + 1;
        double g = 0.0;
        for (std::size_t i = m - 1; i < n; ++i) g += x(static_cast<Eigen::Index>(i));
        g = 1.0 + 9.0 * g / static_cast<double>(k);
        Vector f(static_cast<Eigen::Index>(m));
        double h = static_cast<double>(m);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            const double fi = x(static_cast<Eigen::Index>(i));
            f(static_cast<Eigen::Index>(i)) = fi;
            h -= fi / (1.0 + g) * (1.0 + std::sin(3.0 * pi * fi));
        }
        f(static_cast<Eigen::Index>(m - 1)) = (1.0 + g) * h;
        return f;
    };
    t.front_sampler = [m, d, eval = t.evaluator](std::size_t n) {
        // The g = 1 surface is disconnected; keep only its non-dominated part.
        Rng rng(0xd71a7ULL + m);
        Vector x = Vector::Zero(static_cast<Eigen::Index>(d));
        Matrix front;
        for (std::size_t pool = std::max<std::size_t>(4 * n, 400);; pool *= 2) {
            Matrix cand(static_cast<Eigen::Index>(pool), static_cast<Eigen::Index>(m));
            for (std::size_t i = 0; i < pool; ++i) {
                for (std::size_t j = 0; j + 1 < m; ++j) x(static_cast<Eigen::Index>(j)) = rng.uniform();
                cand.row(static_cast<Eigen::Index>(i)) = eval(x).transpose();
            }
            front = select_rows(cand, non_dominated_sort(cand).fronts.front());
            if (static_cast<std::size_t>(front.rows()) >= n || pool >= 64 * n + 20000) break;
        }
        const auto have = static_cast<std::size_t>(front.rows());
        const std::size_t take = std::min(n, have);
        IndexList idx(take);
        for (std::size_t i = 0; i < take; ++i) idx[i] = i * have / take;
        return select_rows(front, idx);
    };
    return t;
}

inline TaskSpec omnitest(std::size_t d) {
    TaskSpec t{"omnitest", d, 2, Vector::Zero(d), Vector::Constant(d, 6.0), {}, {}};
    t.evaluator = [](const Vector& x) {
        return Vector{{(pi * x.array()).sin().sum(), (pi * x.array()).cos().sum()}};
    };
    return t;
}

inline TaskSpec vlmop1(std::size_t d) {
    TaskSpec t{"vlmop1", d, 2, Vector::Constant(d, -2.0), Vector::Constant(d, 4.0), {}, {}};
    t.evaluator = [](const Vector& x) {
        return Vector{{x.squaredNorm(), (x.array() - 2.0).square().sum()}};
    };
    return t;
}

inline TaskSpec vlmop2(std::size_t d) {
    TaskSpec t{"vlmop2", d, 2, Vector::Constant(d, -2.0), Vector::Constant(d, 2.0), {}, {}};
    t.evaluator = [](const Vector& x) {
        const double c = 1.0 / std::sqrt(static_cast<double>(x.size()));
        return Vector{{1.0 - std::exp(-(x.array() - c).square().sum()),
                       1.0 - std::exp(-(x.array() + c).square().sum())}};
    };
    return t;
}

inline TaskSpec vlmop3() {
    TaskSpec t{"vlmop3", 2, 3, Vector::Constant(2, -3.0), Vector::Constant(2, 3.0), {}, {}};
    t.evaluator = [](const Vector& x) {
        const double a = x(0);
        const double b = x(1);
        const double r2 = a * a + b * b;
        const double f1 = 0.5 * r2 + std::sin(r2);
        const double f2 = (3.0 * a - 2.0 * b + 4.0) * (3.0 * a - 2.0 * b + 4.0) / 8.0 +
                          (a - b + 1.0) * (a - b + 1.0) / 27.0 + 15.0;
        const double f3 = 1.0 / (r2 + 1.0) - 1.1 * std::exp(-r2);
        return Vector{{f1, f2, f3}};
    };
    return t;
}

}  // namespace tasks

inline const std::vector<std::string>& task_names() {
    static const std::vector<std::string> names = {"zdt1",   "zdt2",     "zdt3",   "zdt4",   "zdt6",  "dtlz1",
                                                   "dtlz7",  "omnitest", "vlmop1", "vlmop2", "vlmop3"};
    return names;
}

// Builds a task. d = 0 and m = 0 select conventional defaults; DTLZ tasks
// accept any m >= 2 (3..6 in the many-objective study).
inline TaskSpec make_task(const std::string& name, std::size_t d = 0, std::size_t m = 0) {
    auto fixed_m = [&](std::size_t want) {
        require(m == 0 || m == want, name + " has exactly " + std::to_string(want) + " objectives");
    };
    TaskSpec t;
    if (name == "zdt1" || name == "zdt2" || name == "zdt3") {
        fixed_m(2);
        const std::size_t dd = d ? d : 30;
        require(dd >= 2, name + ": d must be >= 2");
        t = name == "zdt1" ? tasks::zdt1(dd) : name == "zdt2" ? tasks::zdt2(dd) : tasks::zdt3(dd);
    } else if (name == "zdt4" || name == "zdt6") {
        fixed_m(2);
        const std::size_t dd = d ? d : 10;
        require(dd >= 2, name + ": d must be >= 2");
        t = name == "zdt4" ? tasks::zdt4(dd) : tasks::zdt6(dd);
    } else if (name == "dtlz1" || name == "dtlz7") {
        const std::size_t mm = m ? m : 3;
        require(mm >= 2, name + ": m must be >= 2");
        const std::size_t dd = d ? d : mm + (name == "dtlz1" ? 4 : 19);
        require(dd >= mm, name + ": d must be >= m");
        t = name == "dtlz1" ? tasks::dtlz1(dd, mm) : tasks::dtlz7(dd, mm);
    } else if (name == "omnitest") {
        fixed_m(2);
        t = tasks::omnitest(d ? d : 2);
    } else if (name == "vlmop1") {
        fixed_m(2);
        t = tasks::vlmop1(d ? d : 1);
    } else if (name == "vlmop2") {
        fixed_m(2);
        t = tasks::vlmop2(d ? d : 2);
    } else if (name == "vlmop3") {
        fixed_m(3);
        require(d == 0 || d == 2, "vlmop3 has exactly 2 decision variables");
        t = tasks::vlmop3();
    } else {
        throw ContractError("unknown task '" + name + "'");
    }
    return t;
}

inline Vector evaluate_task(const TaskSpec& task, const Vector& x) {
    require(static_cast<std::size_t>(x.size()) == task.d,
            task.name + ": expected d=" + std::to_string(task.d) + ", got " + std::to_string(x.size()));
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        require(std::isfinite(x(j)), task.name + ": non-finite decision variable");
        require(x(j) >= task.lower(j) && x(j) <= task.upper(j),
                task.name + ": decision variable " + std::to_string(j) + " out of bounds");
    }
    return task.evaluator(x);
}

inline Matrix evaluate_rows(const TaskSpec& task, const Matrix& X) {
    Matrix Y(X.rows(), static_cast<Eigen::Index>(task.m));
    for (Eigen::Index i = 0; i < X.rows(); ++i) Y.row(i) = evaluate_task(task, X.row(i).transpose()).transpose();
    return Y;
}

inline Matrix sample_true_front(const TaskSpec& task, std::size_t n) {
    require(static_cast<bool>(task.front_sampler), task.name + ": no closed-form Pareto front");
    require(n >= 1, "sample_true_front: n must be >= 1");
    return task.front_sampler(n);
}

// Wraps a task evaluator and counts every call; used to audit the offline
// query budget.
class CountingOracle {
public:
    explicit CountingOracle(const TaskSpec& task) : task_(&task) {}

    Vector operator()(const Vector& x) {
        ++calls_;
        return evaluate_task(*task_, x);
    }

    Matrix evaluate(const Matrix& X) {
        Matrix Y(X.rows(), static_cast<Eigen::Index>(task_->m));
        for (Eigen::Index i = 0; i < X.rows(); ++i) Y.row(i) = (*this)(X.row(i).transpose()).transpose();
        return Y;
    }

    std::size_t calls() const { return calls_; }
    void reset() { calls_ = 0; }

private:
    const TaskSpec* task_;
    std::size_t calls_ = 0;
};

namespace detail {

struct EaSettings {
    std::size_t population = 100;
    double crossover_prob = 0.9;
    double eta_crossover = 15.0;
    double eta_mutation = 20.0;
};

// Simulated binary crossover on one variable pair.
inline void sbx(double& a, double& b, double lo, double hi, double eta, Rng& rng) {
    if (std::abs(a - b) < 1e-14 || hi <= lo) return;
    const double y1 = std::min(a, b);
    const double y2 = std::max(a, b);
    const double u = rng.uniform();
    auto child = [&](double beta_bound) {
        const double alpha = 2.0 - std::pow(beta_bound, -(eta + 1.0));
        const double betaq = u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                                              : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
        return betaq;
    };
    const double b1 = 1.0 + 2.0 * (y1 - lo) / (y2 - y1);
    const double c1 = 0.5 * ((y1 + y2) - child(b1) * (y2 - y1));
    const double b2 = 1.0 + 2.0 * (hi - y2) / (y2 - y1);
    const double c2 = 0.5 * ((y1 + y2) + child(b2) * (y2 - y1));
    double n1 = std::clamp(c1, lo, hi);
    double n2 = std::clamp(c2, lo, hi);
    if (rng.bernoulli(0.5)) std::swap(n1, n2);
    a = n1;
    b = n2;
}

inline void polynomial_mutation(double& v, double lo, double hi, double eta, Rng& rng) {
    if (hi <= lo) return;
    const double d1 = (v - lo) / (hi - lo);
    const double d2 = (hi - v) / (hi - lo);
    const double u = rng.uniform();
    const double p = 1.0 / (eta + 1.0);
    double dq = 0.0;
    if (u < 0.5) {
        const double xy = 1.0 - d1;
        dq = std::pow(2.0 * u + (1.0 - 2.0 * u) * std::pow(xy, eta + 1.0), p) - 1.0;
    } else {
        const double xy = 1.0 - d2;
        dq = 1.0 - std::pow(2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(xy, eta + 1.0), p);
    }
    v = std::clamp(v + dq * (hi - lo), lo, hi);
}

// Rank and crowding of every row, NSGA-II style.
inline void rank_and_crowd(const Matrix& Y, IndexList& rank, std::vector<double>& crowd) {
    const FrontPartition fp = non_dominated_sort(Y);
    rank = fp.rank_of;
    crowd.assign(static_cast<std::size_t>(Y.rows()), 0.0);
    for (const IndexList& f : fp.fronts) {
        const std::vector<double> cd = crowding_distance(Y, f);
        for (std::size_t k = 0; k < f.size(); ++k) crowd[f[k]] = cd[k];
    }
}

// NSGA-II run that pools every evaluated individual until n are collected.
inline void ea_collect(const TaskSpec& task, std::size_t n, Rng& rng, Matrix& X, Matrix& Y,
                       const EaSettings& ea = {}) {
    const auto d = static_cast<Eigen::Index>(task.d);
    const std::size_t pop_size = std::max<std::size_t>(2, std::min(ea.population, n));
    X.resize(static_cast<Eigen::Index>(n), d);
    Y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(task.m));
    std::size_t filled = 0;
    auto record = [&](const Vector& x) {
        X.row(static_cast<Eigen::Index>(filled)) = x.transpose();
        Y.row(static_cast<Eigen::Index>(filled)) = evaluate_task(task, x).transpose();
        return filled++;
    };

    IndexList pop;
    for (std::size_t i = 0; i < pop_size && filled < n; ++i) {
        Vector x(d);
        for (Eigen::Index j = 0; j < d; ++j) x(j) = rng.uniform(task.lower(j), task.upper(j));
        pop.push_back(record(x));
    }
    const double pm = 1.0 / static_cast<double>(d);
    while (filled < n) {
        const Matrix Yp = select_rows(Y, pop);
        IndexList rank;
        std::vector<double> crowd;
        rank_and_crowd(Yp, rank, crowd);
        auto tournament = [&]() {
            const std::size_t a = rng.index(pop.size());
            const std::size_t b = rng.index(pop.size());
            if (rank[a] != rank[b]) return rank[a] < rank[b] ? a : b;
            if (crowd[a] != crowd[b]) return crowd[a] > crowd[b] ? a : b;
            return std::min(a, b);
        };
        IndexList offspring;
        while (offspring.size() < pop_size && filled < n) {
            Vector c1 = X.row(static_cast<Eigen::Index>(pop[tournament()])).transpose();
            Vector c2 = X.row(static_cast<Eigen::Index>(pop[tournament()])).transpose();
            if (rng.bernoulli(ea.crossover_prob)) {
                for (Eigen::Index j = 0; j < d; ++j) {
                    if (rng.bernoulli(0.5)) sbx(c1(j), c2(j), task.lower(j), task.upper(j), ea.eta_crossover, rng);
                }
            }
            for (Vector* c : {&c1, &c2}) {
                for (Eigen::Index j = 0; j < d; ++j) {
                    if (rng.bernoulli(pm)) polynomial_mutation((*c)(j), task.lower(j), task.upper(j), ea.eta_mutation, rng);
                }
            }
            offspring.push_back(record(c1));
            if (offspring.size() < pop_size && filled < n) offspring.push_back(record(c2));
        }
        // (mu + lambda) survival by rank then crowding.
        IndexList merged = pop;
        merged.insert(merged.end(), offspring.begin(), offspring.end());
        const Matrix Ym = select_rows(Y, merged);
        IndexList mrank;
        std::vector<double> mcrowd;
        rank_and_crowd(Ym, mrank, mcrowd);
        std::vector<std::size_t> order(merged.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (mrank[a] != mrank[b]) return mrank[a] < mrank[b];
            return mcrowd[a] > mcrowd[b];
        });
        pop.clear();
        for (std::size_t i = 0; i < pop_size && i < order.size(); ++i) pop.push_back(merged[order[i]]);
    }
}

}  // namespace detail

inline constexpr std::size_t kDefaultDatasetSize = 10000;

inline OfflineDataset generate_offline_dataset(const TaskSpec& task, std::size_t n, std::uint64_t seed,
                                               SamplingStrategy strategy) {
    require(n >= 2, "generate_offline_dataset: n must be >= 2");
    const auto d = static_cast<Eigen::Index>(task.d);
    const auto rows = static_cast<Eigen::Index>(n);
    OfflineDataset ds;
    ds.lower_bounds = task.lower;
    ds.upper_bounds = task.upper;
    ds.seed = seed;
    ds.task_name = task.name;
    Rng rng(seed);
    switch (strategy) {
        case SamplingStrategy::uniform:
            ds.X.resize(rows, d);
            for (Eigen::Index i = 0; i < rows; ++i) {
                for (Eigen::Index j = 0; j < d; ++j) ds.X(i, j) = rng.uniform(task.lower(j), task.upper(j));
            }
            ds.Y = evaluate_rows(task, ds.X);
            break;
        case SamplingStrategy::lhs: {
            ds.X.resize(rows, d);
            std::vector<std::size_t> perm(n);
            for (Eigen::Index j = 0; j < d; ++j) {
                for (std::size_t i = 0; i < n; ++i) perm[i] = i;
                for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
                const double span = task.upper(j) - task.lower(j);
                for (Eigen::Index i = 0; i < rows; ++i) {
                    const double u = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform()) /
                                     static_cast<double>(n);
                    ds.X(i, j) = std::min(task.lower(j) + u * span, task.upper(j));
                }
            }
            ds.Y = evaluate_rows(task, ds.X);
            break;
        }
        case SamplingStrategy::ea_collected:
            detail::ea_collect(task, n, rng, ds.X, ds.Y);
            break;
    }
    return ds;
}

}  // namespace pcd
