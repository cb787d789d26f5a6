#pragma once

// Monte Carlo oracle for extinction probabilities: simulates the embedded
// offspring process of the MBT (probabilities a, B only -- extinction does
// not depend on the exponential clocks) and reports per-phase extinction
// frequencies with binomial standard errors.
//
// Episodes are independent and each carries its own generator seeded from
// (seed, phase, trial), so results are identical for any processing or
// partitioning order. Surviving episodes are detected by censoring: the
// live count exceeding max_pop, or -- when a verified supersolution of the
// QVE is available -- the certified survival test described below, which
// detects the same outcome several orders of magnitude sooner on
// near-critical instances.

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "mbtq/linalg.hpp"
#include "mbtq/qve.hpp"
#include "mbtq/solve.hpp"

namespace mbtq {

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ -- the episode generator. Seeded through splitmix64 so a
/// single 64-bit value expands to a full state.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        for (auto& word : s_) word = splitmix64(seed);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

inline std::uint64_t episode_seed(std::uint64_t seed, std::size_t phase, std::uint64_t trial) {
    std::uint64_t state = seed;
    state = splitmix64(state) ^ (0x9E3779B97F4A7C15ULL * (phase + 1));
    state = splitmix64(state) ^ (0xBF58476D1CE4E5B9ULL * (trial + 1));
    return splitmix64(state);
}

}  // namespace rng

/// Outcome distribution of one individual: death, or a (child j,
/// parent k) birth. Masses are renormalized; the raw deviation from 1 is
/// recorded and deviations beyond 1e-9 are rejected.
struct OffspringDistribution {
    std::size_t n = 0;
    double death = 0.0;
    std::vector<double> birth;  // n^2 entries, index n*j + k
    double mass_deviation = 0.0;
};

inline OffspringDistribution offspring_distribution(const Qve& q, std::size_t phase) {
    if (phase >= q.n) throw InvalidDimension("offspring_distribution: phase out of range");
    OffspringDistribution d;
    d.n = q.n;
    d.death = q.a[phase];
    d.birth.resize(q.n * q.n);
    double total = d.death;
    for (std::size_t c = 0; c < q.n * q.n; ++c) {
        d.birth[c] = q.B(phase, c);
        total += d.birth[c];
    }
    d.mass_deviation = std::abs(total - 1.0);
    if (d.mass_deviation > 1e-9)
        throw InvalidDistribution("offspring_distribution: outcome mass deviates from 1");
    d.death /= total;
    for (double& v : d.birth) v /= total;
    return d;
}

namespace detail {

/// Walker/Vose alias table for O(1) categorical sampling.
class AliasTable {
public:
    explicit AliasTable(const std::vector<double>& weights) {
        const std::size_t n = weights.size();
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        double total = 0.0;
        for (double w : weights) total += w;
        std::vector<double> scaled(n);
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = weights[i] * static_cast<double>(n) / total;
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        }
        while (!small.empty() && !large.empty()) {
            const std::uint32_t s = small.back();
            small.pop_back();
            const std::uint32_t l = large.back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (std::uint32_t i : large) prob_[i] = 1.0;
        for (std::uint32_t i : small) prob_[i] = 1.0;
    }

    std::uint32_t sample(rng::Xoshiro256pp& gen) const {
        // One uniform: the integer part picks the slot, the fractional
        // part runs the acceptance test (the two are independent).
        const double scaled = gen.uniform() * static_cast<double>(prob_.size());
        std::size_t slot = static_cast<std::size_t>(scaled);
        if (slot >= prob_.size()) slot = prob_.size() - 1;
        const double frac = scaled - static_cast<double>(slot);
        return frac < prob_[slot] ? static_cast<std::uint32_t>(slot) : alias_[slot];
    }

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

/// Per-phase sampling data for the episode engines. Outcome code 0 is
/// death; code 1 + n*j + k is the (j, k) birth.
struct PhaseSampler {
    double death = 0.0;
    AliasTable outcomes;       // over 1 + n^2 codes
    AliasTable births;         // over n^2 codes, conditional on a birth
    bool death_heavy = false;  // worth run-length compression of deaths
    double log_death = 0.0;

    PhaseSampler(const OffspringDistribution& d)
        : death(d.death),
          outcomes(make_outcome_weights(d)),
          births(d.birth),
          death_heavy(d.death >= 0.5 && d.death < 1.0),
          log_death(d.death > 0.0 ? std::log(d.death) : 0.0) {}

    static std::vector<double> make_outcome_weights(const OffspringDistribution& d) {
        std::vector<double> w;
        w.reserve(1 + d.birth.size());
        w.push_back(d.death);
        w.insert(w.end(), d.birth.begin(), d.birth.end());
        return w;
    }
};

}  // namespace detail

enum class Schedule {
    Counts,  // order-independent counting reduction (fast path)
    Fifo,    // explicit queue, breadth-first
    Lifo,    // explicit stack, depth-first
};

struct SimulationOptions {
    Schedule schedule = Schedule::Counts;
    /// Enables early survival detection through a verified supersolution
    /// u of the QVE (a + B(u (x) u) <= u, u < e, hence x* <= u
    /// entrywise). Once the live profile c satisfies
    /// prod_i u_i^{c_i} <= certificate_floor the episode survives with
    /// probability at least 1 - certificate_floor and is censored as
    /// Survived; the floor therefore bounds the extra estimator bias.
    bool survival_certificate = true;
    double certificate_floor = 1e-8;
    std::uint64_t max_steps = 0;  // optional per-episode guard; 0 = off
};

struct SimulationReport {
    Vector estimates;  // extinction frequency per starting phase
    Vector stderrs;    // sqrt(p(1-p)/trials)
    std::uint64_t trials = 0;
    std::uint64_t censored = 0;  // episodes ended by a cap or certificate (counted as survival)
    std::uint64_t seed = 0;
    std::string generator = "xoshiro256++";
};

namespace detail {

/// Builds a verified supersolution of the QVE for certified survival
/// detection. The candidate x + s L^{-1} e comes from a Newton solve, but
/// nothing is trusted: the result is accepted only if the entrywise
/// checks a + B(u (x) u) <= u (with margin) and u < e pass, which alone
/// imply x* <= u. Returns the weights -ln(u_i), or nothing when no
/// certificate exists (critical or subcritical input).
inline std::optional<Vector> survival_weights(const Qve& q) {
    try {
        const SolveReport sol = newton_iteration(q, 1e-12, 80);
        if (!sol.converged) return std::nullopt;
        Matrix l = scale(mixed_operator(q.B, sol.x, sol.x), -1.0);
        for (std::size_t i = 0; i < q.n; ++i) l(i, i) += 1.0;
        const Vector w = solve_linear(l, ones(q.n));
        const double gamma = inf_norm(residual(q, sol.x));
        const double s = 4.0 * gamma + 1e-12;
        Vector u = sol.x;
        for (std::size_t i = 0; i < q.n; ++i) u[i] += s * w[i];
        for (double v : u)
            if (!(v > 0.0 && v < 1.0)) return std::nullopt;
        const Vector res = residual(q, u);  // = u - a - B(u (x) u), want >= margin
        for (double v : res)
            if (!(v >= 1e-13)) return std::nullopt;
        Vector weights(q.n);
        for (std::size_t i = 0; i < q.n; ++i) weights[i] = -std::log(u[i]);
        return weights;
    } catch (const SingularMatrix&) {
        return std::nullopt;
    } catch (const NoConvergence&) {
        return std::nullopt;
    }
}

struct EpisodeResult {
    bool extinct = false;
    bool censored = false;
};

/// Counting-reduction engine. Processes the phase with the lowest index
/// first and, for death-heavy phases, draws the geometric run of
/// consecutive deaths in one sample, which is distributionally identical
/// to sampling them one at a time.
inline EpisodeResult run_episode_counts(const std::vector<PhaseSampler>& samplers,
                                        std::size_t n, std::size_t start,
                                        std::uint64_t max_pop, const Vector* weights,
                                        double mass_threshold, std::uint64_t max_steps,
                                        rng::Xoshiro256pp& gen) {
    std::vector<std::uint64_t> counts(n, 0);
    counts[start] = 1;
    std::uint64_t total = 1;
    double mass = weights ? (*weights)[start] : 0.0;
    std::uint64_t steps = 0;
    std::size_t cur = start;

    for (;;) {
        if (total == 0) return {true, false};
        if (total > max_pop) return {false, true};
        if (weights && mass >= mass_threshold) return {false, true};
        if (max_steps && steps >= max_steps) return {false, true};

        if (counts[cur] == 0) {
            cur = 0;
            while (counts[cur] == 0) ++cur;
        }
        const PhaseSampler& ps = samplers[cur];

        if (ps.death_heavy && counts[cur] > 1) {
            // Run of consecutive deaths ~ Geometric(1 - death), capped by
            // the pile; the cap case has probability death^pile exactly.
            double u;
            do {
                u = gen.uniform();
            } while (u == 0.0);
            const double g = std::floor(std::log(u) / ps.log_death);
            const std::uint64_t pile = counts[cur];
            const std::uint64_t deaths =
                (g >= static_cast<double>(pile)) ? pile : static_cast<std::uint64_t>(g);
            counts[cur] -= deaths;
            total -= deaths;
            steps += deaths;
            if (weights) mass -= static_cast<double>(deaths) * (*weights)[cur];
            if (deaths == pile) continue;  // whole pile died; no birth consumed
            // One birth follows the run.
            const std::uint32_t code = ps.births.sample(gen);
            const std::size_t j = code / n, k = code % n;
            --counts[cur];
            ++counts[j];
            ++counts[k];
            ++total;
            ++steps;
            if (weights) mass += (*weights)[j] + (*weights)[k] - (*weights)[cur];
            continue;
        }

        const std::uint32_t code = ps.outcomes.sample(gen);
        ++steps;
        --counts[cur];
        --total;
        if (weights) mass -= (*weights)[cur];
        if (code != 0) {
            const std::size_t j = (code - 1) / n, k = (code - 1) % n;
            ++counts[j];
            ++counts[k];
            total += 2;
            if (weights) mass += (*weights)[j] + (*weights)[k];
        }
    }
}

/// Reference engine with an explicit multiset, for schedule-invariance
/// checks. FIFO processes the front of a queue, LIFO the back.
inline EpisodeResult run_episode_ordered(const std::vector<PhaseSampler>& samplers,
                                         std::size_t n, std::size_t start,
                                         std::uint64_t max_pop, bool fifo,
                                         std::uint64_t max_steps,
                                         rng::Xoshiro256pp& gen) {
    std::deque<std::uint32_t> live{static_cast<std::uint32_t>(start)};
    std::uint64_t steps = 0;
    for (;;) {
        if (live.empty()) return {true, false};
        if (live.size() > max_pop) return {false, true};
        if (max_steps && steps >= max_steps) return {false, true};
        std::uint32_t phase;
        if (fifo) {
            phase = live.front();
            live.pop_front();
        } else {
            phase = live.back();
            live.pop_back();
        }
        ++steps;
        const std::uint32_t code = samplers[phase].outcomes.sample(gen);
        if (code != 0) {
            live.push_back(static_cast<std::uint32_t>((code - 1) / n));
            live.push_back(static_cast<std::uint32_t>((code - 1) % n));
        }
    }
}

}  // namespace detail

/// Runs `trials` independent episodes per starting phase and returns the
/// extinction frequencies. Censored episodes (population cap, step guard,
/// or certified survival) count as survival, which biases the estimate of
/// the minimal solution from below; the censored total is reported so
/// callers can budget for it.
inline SimulationReport estimate_extinction(const Qve& q, std::uint64_t trials,
                                            std::uint64_t max_pop, std::uint64_t seed,
                                            const SimulationOptions& opts = {}) {
    if (trials < 1 || max_pop < 1)
        throw std::invalid_argument("estimate_extinction: trials and max_pop must be >= 1");

    std::vector<detail::PhaseSampler> samplers;
    samplers.reserve(q.n);
    for (std::size_t i = 0; i < q.n; ++i)
        samplers.emplace_back(offspring_distribution(q, i));

    std::optional<Vector> weights;
    if (opts.survival_certificate && opts.schedule == Schedule::Counts)
        weights = detail::survival_weights(q);
    const double mass_threshold =
        weights ? -std::log(opts.certificate_floor) : 0.0;

    SimulationReport rep;
    rep.trials = trials;
    rep.seed = seed;
    rep.estimates.resize(q.n);
    rep.stderrs.resize(q.n);

    for (std::size_t phase = 0; phase < q.n; ++phase) {
        std::uint64_t extinct = 0;
        for (std::uint64_t trial = 0; trial < trials; ++trial) {
            rng::Xoshiro256pp gen(rng::episode_seed(seed, phase, trial));
            detail::EpisodeResult res;
            if (opts.schedule == Schedule::Counts)
                res = detail::run_episode_counts(samplers, q.n, phase, max_pop,
                                                 weights ? &*weights : nullptr,
                                                 mass_threshold, opts.max_steps, gen);
            else
                res = detail::run_episode_ordered(samplers, q.n, phase, max_pop,
                                                  opts.schedule == Schedule::Fifo,
                                                  opts.max_steps, gen);
            if (res.extinct)
                ++extinct;
            else
                ++rep.censored;
        }
        const double p = static_cast<double>(extinct) / static_cast<double>(trials);
        rep.estimates[phase] = p;
        rep.stderrs[phase] = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    }
    return rep;
}

}  // namespace mbtq
