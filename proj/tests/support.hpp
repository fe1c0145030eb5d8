#pragma once
// Shared helpers for the unit and acceptance tests.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dispo/harness.hpp"
#include "dispo/metrics.hpp"
#include "dispo/pool.hpp"
#include "dispo/providers.hpp"
#include "dispo/rng.hpp"
#include "dispo/run_store.hpp"

namespace dispo::test {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("dispo-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

inline ProviderConfig synthetic_model(const std::string& id, double alpha, std::uint64_t seed, double shift = 0.0) {
    ProviderConfig c;
    c.kind = ProviderKind::synthetic;
    c.model_id = id;
    c.remote_model = id;
    c.synthetic.concentration = alpha;
    c.synthetic.seed = seed;
    c.synthetic.instruction_shift = shift;
    return c;
}

inline ExperimentPlan synthetic_plan(const ConstraintPool& pool, const std::vector<double>& alphas,
                                     const std::vector<std::string>& instructions, int replications, int budget,
                                     std::uint64_t seed) {
    ExperimentPlan plan;
    plan.pool = pool;
    plan.registry = builtin_instruction_registry();
    plan.instructions = instructions;
    plan.replications = replications;
    plan.budget = budget;
    plan.base_seed = seed;
    for (double a : alphas) {
        char name[32];
        std::snprintf(name, sizeof name, "alpha-%g", a);
        plan.models.push_back(synthetic_model(name, a, seed));
    }
    return plan;
}

/// A canonical-size pool is not required by most tests; this builds a flat one.
inline ConstraintPool flat_pool(int n) {
    ConstraintPool pool;
    pool.name = "flat";
    pool.version = "1";
    pool.canonical = false;
    for (int id = 1; id <= n; ++id) {
        pool.constraints.push_back({id, Element::event, "Flat", "Flat constraint number " + std::to_string(id)});
    }
    return pool;
}

inline RunRecord make_record(const CellKey& cell, int replication, std::vector<int> selected) {
    RunRecord r;
    r.run_id = run_uuid(derive_seed(0, cell, replication));
    r.cell = cell;
    r.replication = replication;
    r.permutation_seed = derive_seed(0, cell, replication);
    r.selected = std::move(selected);
    r.justifications.assign(r.selected.size(), "");
    r.status = RunStatus::valid;
    return r;
}

/// Writes runs into a fresh store and returns it.
inline RunStore store_with_runs(const std::filesystem::path& path, const ConstraintPool& pool,
                                const std::map<CellKey, std::vector<std::vector<int>>>& cells) {
    RunStore store = RunStore::open(path, pool);
    for (const auto& [cell, runs] : cells) {
        for (std::size_t r = 0; r < runs.size(); ++r) store.append(make_record(cell, static_cast<int>(r), runs[r]));
    }
    return store;
}

// ---- naive metric oracles ----

inline double naive_jaccard(const std::vector<int>& a, const std::vector<int>& b) {
    const std::set<int> sa(a.begin(), a.end());
    const std::set<int> sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (int x : sa) inter += sb.count(x);
    const std::size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

inline double naive_mean_jaccard(const std::vector<std::vector<int>>& runs) {
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (std::size_t j = i + 1; j < runs.size(); ++j) {
            total += naive_jaccard(runs[i], runs[j]);
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

struct NaiveDiversity {
    double gs = 0.0;
    double en = 0.0;
    std::size_t unique = 0;
};

inline NaiveDiversity naive_diversity(const std::vector<std::vector<int>>& runs) {
    std::map<int, double> counts;
    double total = 0.0;
    for (const auto& run : runs) {
        for (int id : run) {
            counts[id] += 1.0;
            total += 1.0;
        }
    }
    double s = 0.0;
    for (const auto& [id, c] : counts) s += (c / total) * (c / total);
    return {1.0 - s, 1.0 / s, counts.size()};
}

inline std::vector<int> random_subset(Rng& rng, int pool_size, int count) {
    std::vector<int> ids(static_cast<std::size_t>(pool_size));
    for (int i = 0; i < pool_size; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
    rng.shuffle(std::span<int>(ids));
    ids.resize(static_cast<std::size_t>(count));
    return ids;
}

/// Runs biased toward low ids so cells differ in concentration.
inline std::vector<std::vector<int>> random_cell(Rng& rng, int pool_size, int budget, int runs) {
    std::vector<double> w(static_cast<std::size_t>(pool_size));
    const double skew = 0.2 + 3.0 * rng.uniform01();
    for (int i = 0; i < pool_size; ++i) w[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i + 1), -skew);
    std::vector<std::vector<int>> out;
    for (int r = 0; r < runs; ++r) {
        std::vector<int> ids;
        for (auto k : weighted_sample_without_replacement(w, static_cast<std::size_t>(budget), rng)) {
            ids.push_back(static_cast<int>(k) + 1);
        }
        out.push_back(std::move(ids));
    }
    return out;
}

}  // namespace dispo::test
