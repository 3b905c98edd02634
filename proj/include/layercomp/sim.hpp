#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "layercomp/linear.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

// Master/worker stream of matrix-vector jobs. Jobs arrive as a Poisson
// process and are served FIFO, one at a time, as a chain of mini-jobs (one
// per resolution upgrade, most significant first). Each mini-job splits
// into tasks pulled greedily by idle workers; a task with complexity c on
// worker p takes Exp(mean c / mu_p).
struct SimConfig {
    std::vector<double> worker_rates;            // mu_p, operation units/time
    double arrival_rate = 0.01;                  // lambda, jobs/time
    int tasks_per_job = 1000;                    // tasks per mini-job
    double task_complexity = 50.0;               // c, units per one-shot task
    PartitioningVector pv_w{std::vector<int>{8, 4, 0}};
    PartitioningVector pv_x{std::vector<int>{8, 4, 0}};
    std::optional<double> deadline;              // computation-time budget
    int num_jobs = 1000;
    std::uint64_t seed = 1;
    int redundant_tasks = 0;      // extra tasks issued per mini-job
    bool layered = true;          // false: single full-cost mini-job
    bool deterministic_service = false;  // variance-0 mode for testing

    void validate() const {
        if (worker_rates.empty()) throw std::invalid_argument("sim: no workers");
        for (double mu : worker_rates) {
            if (!(mu > 0)) throw std::invalid_argument("sim: worker rate <= 0");
        }
        if (!(arrival_rate > 0)) throw std::invalid_argument("sim: lambda <= 0");
        if (tasks_per_job < 1) throw std::invalid_argument("sim: tasks < 1");
        if (!(task_complexity > 0)) throw std::invalid_argument("sim: c <= 0");
        if (num_jobs < 1) throw std::invalid_argument("sim: num_jobs < 1");
        if (redundant_tasks < 0) throw std::invalid_argument("sim: redundancy < 0");
        if (deadline && !(*deadline >= 0)) {
            throw std::invalid_argument("sim: negative deadline");
        }
    }

    // Complexity of one task of mini-job r (1-based), as a fraction of the
    // one-shot task complexity.
    std::vector<double> minijob_task_costs() const {
        std::vector<double> costs;
        if (!layered) {
            costs.push_back(task_complexity);
            return costs;
        }
        const auto total = static_cast<double>(one_shot_cost(pv_w, pv_x, 1, 1));
        const auto sched = make_schedule(pv_w, pv_x);
        for (int r = 1; r <= sched.size(); ++r) {
            costs.push_back(task_complexity *
                            static_cast<double>(layered_cost(pv_w, pv_x, r, 1, 1)) /
                            total);
        }
        return costs;
    }
};

struct JobRecord {
    double arrival = 0.0;
    double dispatch = 0.0;
    std::vector<std::optional<double>> completion;  // absolute, per resolution
    bool terminated = false;

    std::optional<double> delay(int r) const {
        const auto& c = completion.at(static_cast<std::size_t>(r - 1));
        if (!c) return std::nullopt;
        return *c - arrival;
    }
};

namespace detail {

struct SimEvent {
    double time;
    std::uint64_t seq;   // tie-break, assignment order
    enum Kind { arrival, task_done, deadline_check } kind;
    int a;               // job index (arrival/deadline) or worker index
    std::uint64_t b;     // assignment id for task_done

    bool operator>(const SimEvent& o) const {
        if (time != o.time) return time > o.time;
        return seq > o.seq;
    }
};

}  // namespace detail

inline std::vector<JobRecord> simulate(const SimConfig& cfg) {
    cfg.validate();
    const auto costs = cfg.minijob_task_costs();
    const int resolutions = static_cast<int>(costs.size());
    const int workers = static_cast<int>(cfg.worker_rates.size());

    // Arrival stream drawn from its own generator so a seed pins the
    // workload independently of deadline or layering settings.
    Rng arrival_rng(cfg.seed);
    Rng service_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);

    std::vector<JobRecord> records(static_cast<std::size_t>(cfg.num_jobs));
    {
        double t = 0.0;
        for (auto& rec : records) {
            t += arrival_rng.exponential(1.0 / cfg.arrival_rate);
            rec.arrival = t;
            rec.completion.assign(static_cast<std::size_t>(resolutions),
                                  std::nullopt);
        }
    }

    std::priority_queue<detail::SimEvent, std::vector<detail::SimEvent>,
                        std::greater<detail::SimEvent>>
        events;
    std::uint64_t seq = 0;
    for (int j = 0; j < cfg.num_jobs; ++j) {
        events.push({records[static_cast<std::size_t>(j)].arrival, seq++,
                     detail::SimEvent::arrival, j, 0});
    }

    std::deque<int> waiting;
    int active = -1;
    int minijob = 0;       // current resolution index, 0-based
    int pending = 0;       // tasks not yet assigned
    int outstanding = 0;   // tasks in flight
    int completed = 0;     // task results received for this mini-job

    struct Worker {
        bool busy = false;
        std::uint64_t assignment = 0;  // bumping invalidates in-flight work
    };
    std::vector<Worker> pool(static_cast<std::size_t>(workers));

    auto assign_one = [&](int w, double now) {
        auto& wk = pool[static_cast<std::size_t>(w)];
        wk.busy = true;
        ++wk.assignment;
        const double mean =
            costs[static_cast<std::size_t>(minijob)] /
            cfg.worker_rates[static_cast<std::size_t>(w)];
        const double service =
            cfg.deterministic_service ? mean : service_rng.exponential(mean);
        events.push({now + service, seq++, detail::SimEvent::task_done, w,
                     wk.assignment});
        --pending;
        ++outstanding;
    };

    auto assign_idle = [&](double now) {
        for (int w = 0; w < workers && pending > 0; ++w) {
            if (!pool[static_cast<std::size_t>(w)].busy) assign_one(w, now);
        }
    };

    auto purge_outstanding = [&]() {
        for (auto& wk : pool) {
            if (wk.busy) {
                ++wk.assignment;
                wk.busy = false;
            }
        }
        outstanding = 0;
    };

    auto start_minijob = [&](double now) {
        pending = cfg.tasks_per_job + cfg.redundant_tasks;
        outstanding = 0;
        completed = 0;
        assign_idle(now);
    };

    auto dispatch = [&](int job, double now) {
        active = job;
        auto& rec = records[static_cast<std::size_t>(job)];
        rec.dispatch = now;
        minijob = 0;
        if (cfg.deadline) {
            events.push({now + *cfg.deadline, seq++,
                         detail::SimEvent::deadline_check, job, 0});
        }
        start_minijob(now);
    };

    auto next_from_queue = [&](double now) {
        active = -1;
        if (!waiting.empty()) {
            const int job = waiting.front();
            waiting.pop_front();
            dispatch(job, now);
        }
    };

    while (!events.empty()) {
        const auto ev = events.top();
        events.pop();
        switch (ev.kind) {
            case detail::SimEvent::arrival: {
                if (active == -1) {
                    dispatch(ev.a, ev.time);
                } else {
                    waiting.push_back(ev.a);
                }
                break;
            }
            case detail::SimEvent::task_done: {
                auto& wk = pool[static_cast<std::size_t>(ev.a)];
                if (ev.b != wk.assignment || !wk.busy) break;  // purged
                wk.busy = false;
                --outstanding;
                ++completed;
                if (pending > 0) assign_one(ev.a, ev.time);
                if (completed == cfg.tasks_per_job) {
                    purge_outstanding();
                    pending = 0;
                    records[static_cast<std::size_t>(active)]
                        .completion[static_cast<std::size_t>(minijob)] = ev.time;
                    ++minijob;
                    if (minijob == resolutions) {
                        next_from_queue(ev.time);
                    } else {
                        start_minijob(ev.time);
                    }
                }
                break;
            }
            case detail::SimEvent::deadline_check: {
                // One-time check when the computation budget runs out: the
                // job is cut only if others are waiting.
                if (ev.a != active) break;  // finished before the deadline
                if (!waiting.empty()) {
                    records[static_cast<std::size_t>(ev.a)].terminated = true;
                    purge_outstanding();
                    pending = 0;
                    next_from_queue(ev.time);
                }
                break;
            }
        }
        // Work conservation: with an active mini-job no worker may idle
        // while tasks are pending.
        if (active != -1 && pending > 0) {
            for (const auto& wk : pool) {
                if (!wk.busy) {
                    throw std::logic_error("sim: idle worker with pending tasks");
                }
            }
        }
    }
    return records;
}

// Mean sojourn time of a G/G/1 queue: service mean plus the queue-delay
// term E[Ts] * rho/(1-rho) * (ca^2+cs^2)/2.
inline double kingman_delay(double e_ts, double e_ta, double ca2, double cs2) {
    const double rho = e_ts / e_ta;
    if (!(rho < 1.0)) {
        throw std::invalid_argument("kingman: unstable queue (rho >= 1)");
    }
    return e_ts + e_ts * (rho / (1.0 - rho)) * 0.5 * (ca2 + cs2);
}

// Aggregated service rate of the pool, in jobs/time.
inline double pooled_service_rate(const SimConfig& cfg) {
    double rate_sum = 0.0;
    for (double mu : cfg.worker_rates) rate_sum += mu;
    const double total_work =
        static_cast<double>(cfg.tasks_per_job) * cfg.task_complexity;
    return rate_sum / total_work;
}

// Lower bound on the mean delay of resolution r: the cumulative work share
// of the first r mini-jobs served at the pooled rate, plus the queue-delay
// term for the full job. Poisson arrivals give ca^2 = 1; the service-time
// variation is negligible at this task granularity, so cs^2 defaults to 0.
inline double layered_lb(const SimConfig& cfg, int r, double ca2 = 1.0,
                         double cs2 = 0.0) {
    const auto sched = make_schedule(cfg.pv_w, cfg.pv_x);
    if (r < 1 || r > sched.size()) {
        throw std::out_of_range("layered_lb: resolution out of range");
    }
    std::int64_t share = 0;
    for (int i = 1; i <= r; ++i) {
        share += layered_cost(cfg.pv_w, cfg.pv_x, i, 1, 1);
    }
    const double ratio =
        static_cast<double>(share) /
        static_cast<double>(one_shot_cost(cfg.pv_w, cfg.pv_x, 1, 1));
    const double e_ts = 1.0 / pooled_service_rate(cfg);
    const double e_ta = 1.0 / cfg.arrival_rate;
    const double queue_term = kingman_delay(e_ts, e_ta, ca2, cs2) - e_ts;
    return ratio * e_ts + queue_term;
}

inline double one_shot_lb(const SimConfig& cfg, double ca2 = 1.0,
                          double cs2 = 0.0) {
    const double e_ts = 1.0 / pooled_service_rate(cfg);
    return kingman_delay(e_ts, 1.0 / cfg.arrival_rate, ca2, cs2);
}

// Fraction of jobs whose resolution-r result was released.
inline double success_rate(const std::vector<JobRecord>& records, int r) {
    if (records.empty()) throw std::invalid_argument("success_rate: no records");
    std::size_t hits = 0;
    for (const auto& rec : records) {
        if (rec.completion.at(static_cast<std::size_t>(r - 1))) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

// Success rate versus deadline, layered and one-shot. Termination frees
// capacity and changes the queue dynamics, so each deadline re-simulates;
// the seed pins one arrival stream across the whole sweep.
struct SuccessCurve {
    std::vector<double> deadlines;
    std::vector<std::vector<double>> layered_rates;  // [deadline][resolution]
    std::vector<double> one_shot_rates;
};

inline SuccessCurve success_curve(const SimConfig& cfg,
                                  std::span<const double> deadlines) {
    SuccessCurve curve;
    for (double deadline : deadlines) {
        SimConfig run = cfg;
        run.layered = true;
        run.deadline = deadline;
        const auto records = simulate(run);
        std::vector<double> rates;
        for (std::size_t r = 1; r <= records.front().completion.size(); ++r) {
            rates.push_back(success_rate(records, static_cast<int>(r)));
        }
        curve.deadlines.push_back(deadline);
        curve.layered_rates.push_back(std::move(rates));

        run.layered = false;
        curve.one_shot_rates.push_back(success_rate(simulate(run), 1));
    }
    return curve;
}

struct DelayStats {
    double mean = 0.0;
    double stddev = 0.0;
    double bin_lo = 0.0;
    double bin_width = 1.0;
    std::vector<std::size_t> histogram;
    std::size_t count = 0;
};

// Descriptive statistics of the resolution-r delays over completed jobs.
inline DelayStats delay_stats(const std::vector<JobRecord>& records, int r,
                              double bin_width = 1.0) {
    if (records.empty()) throw std::invalid_argument("delay_stats: no records");
    if (!(bin_width > 0)) throw std::invalid_argument("delay_stats: bad bin width");
    std::vector<double> delays;
    for (const auto& rec : records) {
        if (auto d = rec.delay(r)) delays.push_back(*d);
    }
    if (delays.empty()) {
        throw std::invalid_argument("delay_stats: no completed jobs at this resolution");
    }
    DelayStats st;
    st.count = delays.size();
    st.bin_width = bin_width;
    double sum = 0.0;
    double lo = delays.front();
    double hi = delays.front();
    for (double d : delays) {
        sum += d;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    st.mean = sum / static_cast<double>(delays.size());
    double sq = 0.0;
    for (double d : delays) sq += (d - st.mean) * (d - st.mean);
    st.stddev = std::sqrt(sq / static_cast<double>(delays.size()));
    st.bin_lo = std::floor(lo / bin_width) * bin_width;
    const auto bins = static_cast<std::size_t>(
                          std::floor((hi - st.bin_lo) / bin_width)) + 1;
    st.histogram.assign(bins, 0);
    for (double d : delays) {
        auto idx = static_cast<std::size_t>((d - st.bin_lo) / bin_width);
        if (idx >= bins) idx = bins - 1;
        ++st.histogram[idx];
    }
    return st;
}

}  // namespace layercomp
