#pragma once

// Micro-batch event detection over record streams.
//
// A record is every triple sharing one subject. Records are grouped into
// batches of `batch_size`; each active rule's body is evaluated per record
// against the batch graph and every satisfying (record, rule) pair becomes
// one Event. Rule changes requested while a run is in progress are applied
// at the next batch boundary.

#include <liverkg/ntriples.hpp>
#include <liverkg/reasoner.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <functional>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace liverkg::stream {

using Clock = std::chrono::steady_clock;

struct BatchConfig {
    std::size_t batch_size = 10;
    std::int64_t delay_ms = 0;
};

struct Record {
    rdf::Iri subject;
    std::vector<rdf::Triple> triples;
};

struct Event {
    std::string rule;
    rdf::Iri subject;
    rules::Binding bindings;
    std::size_t batch_no = 0;
    Clock::time_point detected_at;
};

struct BatchStats {
    std::size_t batch_no = 0;
    std::size_t size = 0;
    std::size_t rules_parsed = 0;
    double elapsed_ms = 0;
};

struct Summary {
    std::vector<BatchStats> batches;
    std::vector<Event> events;
    bool complete = true;
    std::string error;
};

// One entry per activation or removal, keyed by the first batch it affects.
struct RuleChange {
    std::string rule;
    bool deployed = true;
    std::size_t from_batch = 0;
};

using Sink = std::function<void(const Event&)>;

// Groups triples by subject, in order of first appearance.
inline std::vector<Record> group_records(const std::vector<rdf::Triple>& triples) {
    std::vector<Record> out;
    std::map<rdf::Iri, std::size_t> slot;
    for (const auto& t : triples) {
        auto [it, fresh] = slot.try_emplace(t.subject, out.size());
        if (fresh) out.push_back({t.subject, {}});
        out[it->second].triples.push_back(t);
    }
    return out;
}

inline std::vector<Record> group_records(const rdf::Graph& g) { return group_records(g.triples()); }

// The variable naming the record: subject of the first class or property atom.
inline std::optional<std::string> subject_variable(const rules::Rule& rule) {
    for (const auto& atom : rule.body) {
        const rules::Arg* s = nullptr;
        if (auto* c = std::get_if<rules::ClassAtom>(&atom)) s = &c->arg;
        else if (auto* p = std::get_if<rules::PropertyAtom>(&atom)) s = &p->subject;
        if (!s) continue;
        if (auto* v = std::get_if<rules::Variable>(s)) return v->name;
        return std::nullopt;
    }
    return std::nullopt;
}

inline nlohmann::json to_json(const Event& e) {
    nlohmann::json b = nlohmann::json::object();
    for (const auto& [k, v] : e.bindings) b[k] = rdf::to_ntriples(v);
    return {{"rule", e.rule}, {"subject", e.subject.str()}, {"batch", e.batch_no}, {"bindings", b}};
}

// Writes one JSON object per line; throws when the stream goes bad.
inline Sink json_lines_sink(std::ostream& out) {
    return [&out](const Event& e) {
        out << to_json(e).dump() << '\n';
        if (!out) throw Error("event sink write failed");
    };
}

class Engine {
public:
    explicit Engine(Vocabulary vocab = Vocabulary::clinical()) : vocab_(std::move(vocab)) {}

    // Blocks until the rule is active and returns the wait in milliseconds.
    // A running engine activates it at its next batch boundary.
    double deploy(rules::Rule rule) {
        rules::validate(rule);
        if (rule.name.empty()) throw DataError("deployed rules need a name");
        if (!subject_variable(rule)) throw DataError("rule " + rule.name + " has no record variable");
        return submit(Change{std::move(rule), {}});
    }

    bool undeploy(const std::string& name) {
        {
            std::lock_guard lock(mu_);
            bool known = std::any_of(active_.begin(), active_.end(), [&](const auto& r) { return r.name == name; }) ||
                         std::any_of(pending_.begin(), pending_.end(),
                                     [&](const Change& c) { return c.rule && c.rule->name == name; });
            if (!known) return false;
        }
        submit(Change{std::nullopt, name});
        return true;
    }

    std::vector<rules::Rule> active() const {
        std::lock_guard lock(mu_);
        return active_;
    }

    std::size_t pending() const {
        std::lock_guard lock(mu_);
        return pending_.size();
    }

    std::vector<RuleChange> changes() const {
        std::lock_guard lock(mu_);
        return changes_;
    }

    Summary run(const std::vector<Record>& records, const BatchConfig& config, const Sink& sink = {}) {
        if (config.batch_size == 0) throw PreconditionError("batch_size must be at least 1");
        if (config.delay_ms < 0) throw PreconditionError("delay_ms must be non-negative");
        {
            std::lock_guard lock(mu_);
            if (running_) throw ConflictError("engine is already running");
            running_ = true;
            batch_ = 0;
        }
        Summary summary;
        try {
            for (std::size_t start = 0; start < records.size(); start += config.batch_size) {
                if (start > 0 && config.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(config.delay_ms));
                std::vector<rules::Rule> rules;
                {
                    std::lock_guard lock(mu_);
                    ++batch_;
                    apply_pending_locked();
                    rules = active_;
                }
                cv_.notify_all();
                auto end = std::min(records.size(), start + config.batch_size);
                auto [stats, events] = process(records, start, end, rules, batch_);
                summary.batches.push_back(stats);
                for (auto& e : events) {
                    if (sink) sink(e);
                    summary.events.push_back(std::move(e));
                }
            }
        } catch (const std::exception& e) {
            summary.complete = false;
            summary.error = e.what();
        }
        {
            std::lock_guard lock(mu_);
            running_ = false;
            ++batch_;
            apply_pending_locked();
        }
        cv_.notify_all();
        return summary;
    }

    Summary run(const rdf::Graph& g, const BatchConfig& config, const Sink& sink = {}) {
        return run(group_records(g), config, sink);
    }

private:
    struct Change {
        std::optional<rules::Rule> rule;  // set: deploy (replacing same name); empty: remove `name`
        std::string name;
        std::uint64_t seq = 0;
    };

    double submit(Change change) {
        auto t0 = Clock::now();
        std::unique_lock lock(mu_);
        change.seq = ++requested_;
        auto seq = change.seq;
        pending_.push_back(std::move(change));
        if (!running_) apply_pending_locked();
        cv_.wait(lock, [&] { return applied_ >= seq; });
        return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    }

    void apply_pending_locked() {
        for (auto& c : pending_) {
            auto name = c.rule ? c.rule->name : c.name;
            auto it = std::find_if(active_.begin(), active_.end(), [&](const auto& r) { return r.name == name; });
            if (c.rule) {
                if (it != active_.end()) *it = std::move(*c.rule);
                else active_.push_back(std::move(*c.rule));
                changes_.push_back({name, true, batch_});
            } else if (it != active_.end()) {
                active_.erase(it);
                changes_.push_back({name, false, batch_});
            }
            applied_ = std::max(applied_, c.seq);
        }
        pending_.clear();
    }

    std::pair<BatchStats, std::vector<Event>> process(const std::vector<Record>& records, std::size_t begin,
                                                      std::size_t end, const std::vector<rules::Rule>& rules,
                                                      std::size_t batch_no) const {
        auto t0 = Clock::now();
        rdf::Graph g;
        for (std::size_t i = begin; i < end; ++i) g.insert_all(records[i].triples);
        std::vector<Event> events;
        std::size_t parsed = 0;
        for (const auto& rule : rules) {
            auto var = *subject_variable(rule);
            bool fired = false;
            for (std::size_t i = begin; i < end; ++i) {
                auto sols = rules::evaluate_body(g, rule.body, {{var, records[i].subject}}, vocab_);
                if (sols.empty()) continue;
                fired = true;
                events.push_back({rule.name, records[i].subject, std::move(sols.front()), batch_no, Clock::now()});
            }
            parsed += fired;
        }
        double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        return {BatchStats{batch_no, end - begin, parsed, ms}, std::move(events)};
    }

    Vocabulary vocab_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::vector<rules::Rule> active_;
    std::vector<Change> pending_;
    std::vector<RuleChange> changes_;
    std::uint64_t requested_ = 0, applied_ = 0;
    std::size_t batch_ = 0;
    bool running_ = false;
};

// Convenience for a fixed rule set.
inline Summary run_stream(const std::vector<Record>& records, const BatchConfig& config,
                          const std::vector<rules::Rule>& rules, const Sink& sink = {},
                          const Vocabulary& vocab = Vocabulary::clinical()) {
    Engine engine(vocab);
    for (const auto& r : rules) engine.deploy(r);
    return engine.run(records, config, sink);
}

// ---- timing ----

struct TimingRow {
    std::size_t batch_size = 0;
    std::size_t rule_count = 0;
    double mean_ms = 0;          // mean over runs of the per-batch mean
    std::vector<double> runs;    // per-run mean batch time
};

struct TimedRun {
    std::size_t batch_size = 0;
    std::size_t rule_count = 0;
    Summary summary;
};

inline double mean_batch_ms(const Summary& s) {
    if (s.batches.empty()) return 0;
    double total = 0;
    for (const auto& b : s.batches) total += b.elapsed_ms;
    return total / static_cast<double>(s.batches.size());
}

// One row per (batch_size, rule_count), in first-seen order.
inline std::vector<TimingRow> timing_report(const std::vector<TimedRun>& runs) {
    if (runs.empty()) throw PreconditionError("timing report needs at least one run");
    std::vector<TimingRow> rows;
    for (const auto& r : runs) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const TimingRow& row) {
            return row.batch_size == r.batch_size && row.rule_count == r.rule_count;
        });
        if (it == rows.end()) {
            rows.push_back({r.batch_size, r.rule_count, 0, {}});
            it = rows.end() - 1;
        }
        it->runs.push_back(mean_batch_ms(r.summary));
    }
    for (auto& row : rows) {
        double total = 0;
        for (double v : row.runs) total += v;
        row.mean_ms = total / static_cast<double>(row.runs.size());
    }
    return rows;
}

enum class SweepKind { BatchSize, RuleCount };

struct SweepPoint {
    std::size_t batch_size;
    std::size_t rule_count;
};

inline std::vector<SweepPoint> sweep_grid(SweepKind kind) {
    std::vector<SweepPoint> out;
    if (kind == SweepKind::BatchSize)
        for (std::size_t b : {20, 40, 60, 80, 100}) out.push_back({b, 5});
    else
        for (std::size_t n : {4, 6, 8, 10, 12}) out.push_back({50, n});
    return out;
}

// Runs every grid point `repeats` times with the first `rule_count` rules
// of `pool`, interleaving points so drift spreads evenly.
inline std::vector<TimingRow> run_sweep(const std::vector<Record>& records, const std::vector<rules::Rule>& pool,
                                        const std::vector<SweepPoint>& grid, std::size_t repeats = 3,
                                        const Vocabulary& vocab = Vocabulary::clinical()) {
    if (repeats == 0) throw PreconditionError("repeats must be at least 1");
    std::vector<TimedRun> runs;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        for (const auto& p : grid) {
            if (p.rule_count > pool.size())
                throw PreconditionError("sweep needs " + std::to_string(p.rule_count) + " rules, have " +
                                        std::to_string(pool.size()));
            std::vector<rules::Rule> rules(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(p.rule_count));
            runs.push_back({p.batch_size, p.rule_count, run_stream(records, {p.batch_size, 0}, rules, {}, vocab)});
        }
    }
    return timing_report(runs);
}

inline std::string timing_csv(const std::vector<TimingRow>& rows) {
    std::string out = "batch_size,rule_count,mean_ms,runs_ms\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.4f", r.mean_ms);
        out += std::to_string(r.batch_size) + "," + std::to_string(r.rule_count) + "," + buf + ",";
        for (std::size_t i = 0; i < r.runs.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.4f", r.runs[i]);
            out += (i ? ";" : "") + std::string(buf);
        }
        out += "\n";
    }
    return out;
}

inline std::string stats_csv(const Summary& s) {
    std::string out = "batch,size,rules_parsed,elapsed_ms\n";
    char buf[64];
    for (const auto& b : s.batches) {
        std::snprintf(buf, sizeof buf, "%.4f", b.elapsed_ms);
        out += std::to_string(b.batch_no) + "," + std::to_string(b.size) + "," + std::to_string(b.rules_parsed) + "," +
               buf + "\n";
    }
    return out;
}

// Spearman rank correlation, average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw PreconditionError("spearman needs two equal series of length >= 2");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1;
            i = j + 1;
        }
        return r;
    };
    auto rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i], my += ry[i];
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace liverkg::stream
