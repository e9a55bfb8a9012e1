#include "mirsel/selector.hpp"

#include "mirsel/error.hpp"
#include "mirsel/parallel.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace mirsel {

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::Option1: return "OPTION1";
        case Provenance::Option2: return "OPTION2";
        case Provenance::Union: return "UNION";
        case Provenance::Exhaustive: return "EXHAUSTIVE";
        case Provenance::Manual: return "MANUAL";
    }
    return "MANUAL";
}

std::string to_string(StepKind k) {
    switch (k) {
        case StepKind::Forward: return "forward";
        case StepKind::Backward: return "backward";
        case StepKind::Stop: return "stop";
    }
    return "stop";
}

bool VariableSubset::contains(std::size_t column) const {
    return std::find(indices.begin(), indices.end(), column) != indices.end();
}

void VariableSubset::validate(std::size_t n_variables) const {
    std::set<std::size_t> seen;
    for (std::size_t j : indices) {
        if (j >= n_variables) throw ConfigError("variable index " + std::to_string(j) + " out of range");
        if (!seen.insert(j).second) throw ConfigError("variable index " + std::to_string(j) + " repeated");
    }
}

Selector::Selector(const MiEstimator& estimator, SelectorOptions options)
    : estimator_(&estimator), options_(options) {}

std::vector<double> Selector::evaluate_all(const std::vector<std::vector<std::size_t>>& subsets) const {
    std::vector<double> out(subsets.size());
    parallel_for(subsets.size(), options_.workers, [&](std::size_t i) { out[i] = estimator_->estimate(subsets[i]).value; });
    return out;
}

std::vector<RankedVariable> Selector::rank_all() const {
    const std::size_t m = estimator_->variables();
    std::vector<std::vector<std::size_t>> singles(m);
    for (std::size_t j = 0; j < m; ++j) singles[j] = {j};
    const auto values = evaluate_all(singles);
    std::vector<RankedVariable> ranked(m);
    for (std::size_t j = 0; j < m; ++j) ranked[j] = {j, values[j]};
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedVariable& a, const RankedVariable& b) { return a.mi > b.mi; });
    return ranked;
}

VariableSubset Selector::rank_option1(std::size_t count) const {
    if (count > estimator_->variables()) {
        throw ConfigError("cannot rank " + std::to_string(count) + " of " + std::to_string(estimator_->variables()) +
                          " variables");
    }
    const auto ranked = rank_all();
    VariableSubset out;
    out.provenance = Provenance::Option1;
    for (std::size_t r = 0; r < count; ++r) out.indices.push_back(ranked[r].column);
    return out;
}

ForwardResult Selector::forward_step(const VariableSubset& current) const {
    const std::size_t m = estimator_->variables();
    current.validate(m);
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < m; ++j)
        if (!current.contains(j)) candidates.push_back(j);
    if (candidates.empty()) throw ConfigError("forward step: no unselected variables remain");

    std::vector<std::vector<std::size_t>> subsets;
    subsets.reserve(candidates.size());
    for (std::size_t j : candidates) {
        auto s = current.indices;
        s.push_back(j);
        subsets.push_back(std::move(s));
    }
    const auto values = evaluate_all(subsets);

    ForwardResult res;
    std::size_t best = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        res.evaluated.push_back({candidates[c], values[c]});
        if (values[c] > values[best]) best = c;  // candidates ascend, so ties keep the lower index
    }
    res.added = candidates[best];
    res.subset.indices = subsets[best];
    res.subset.provenance = Provenance::Option2;
    res.mi = MiEstimate{values[best], estimator_->k(), estimator_->samples()};
    return res;
}

BackwardResult Selector::backward_step(const VariableSubset& current, std::size_t protected_column,
                                       std::optional<double> current_mi) const {
    current.validate(estimator_->variables());
    if (!current.contains(protected_column)) {
        throw ConfigError("backward step: protected variable " + std::to_string(protected_column) +
                          " is not in the current set");
    }
    BackwardResult res;
    res.subset = current;
    const double base = current_mi ? *current_mi : estimator_->estimate(current.indices).value;
    res.mi = MiEstimate{base, estimator_->k(), estimator_->samples()};
    if (current.size() < 2) return res;

    std::vector<std::size_t> removable;
    std::vector<std::vector<std::size_t>> subsets;
    for (std::size_t j : current.indices) {
        if (j == protected_column) continue;
        removable.push_back(j);
        std::vector<std::size_t> s;
        for (std::size_t v : current.indices)
            if (v != j) s.push_back(v);
        subsets.push_back(std::move(s));
    }
    const auto values = evaluate_all(subsets);

    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < removable.size(); ++r) {
        res.evaluated.push_back({removable[r], values[r]});
        if (!best || values[r] > values[*best] || (values[r] == values[*best] && removable[r] < removable[*best])) {
            best = r;
        }
    }
    if (best && values[*best] > base) {
        res.removed = removable[*best];
        res.subset.indices = subsets[*best];
        res.mi.value = values[*best];
    }
    return res;
}

Option2Result Selector::run_option2() const {
    const std::size_t m = estimator_->variables();
    Option2Result out;
    out.subset.provenance = Provenance::Option2;
    double accepted_mi = -std::numeric_limits<double>::infinity();
    // Every accepted round raises the MI strictly or grows the set, so this bound is never hit in practice.
    const std::size_t max_rounds = 4 * m + 4;

    for (std::size_t round = 0; round < max_rounds; ++round) {
        if (out.subset.size() == m) {
            out.trace.steps.push_back({StepKind::Stop, std::nullopt, out.subset.indices, accepted_mi,
                                       "stop: no unselected variables remain"});
            return out;
        }
        ForwardResult fwd = forward_step(out.subset);
        for (const auto& ev : fwd.evaluated) {
            auto s = out.subset.indices;
            s.push_back(ev.column);
            out.trace.steps.push_back({StepKind::Forward, ev.column, std::move(s), ev.mi,
                                       ev.column == fwd.added ? "best" : "evaluated"});
        }
        if (!out.subset.empty() && fwd.mi.value < accepted_mi) {
            out.trace.steps.push_back({StepKind::Stop, fwd.added, fwd.subset.indices, fwd.mi.value,
                                       "stop: adding the best candidate lowers the mutual information"});
            return out;
        }
        out.subset.indices = fwd.subset.indices;
        out.mi = fwd.mi;
        accepted_mi = fwd.mi.value;

        bool again = true;
        while (again && out.subset.size() >= 2) {
            BackwardResult bwd = backward_step(out.subset, fwd.added, accepted_mi);
            for (const auto& ev : bwd.evaluated) {
                std::vector<std::size_t> s;
                for (std::size_t v : out.subset.indices)
                    if (v != ev.column) s.push_back(v);
                out.trace.steps.push_back({StepKind::Backward, ev.column, std::move(s), ev.mi,
                                           bwd.removed && *bwd.removed == ev.column ? "removed" : "kept"});
            }
            again = options_.iterate_backward && bwd.removed.has_value();
            if (bwd.removed) {
                out.subset.indices = bwd.subset.indices;
                out.mi = bwd.mi;
                accepted_mi = bwd.mi.value;
            }
        }
    }
    throw NumericalError("option 2 selection did not terminate");
}

namespace {

struct Candidate {
    double mi = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> sorted;
    bool valid = false;
};

// Total order: larger MI, then fewer variables, then lexicographically smaller.
bool better(const Candidate& a, const Candidate& b) {
    if (!b.valid) return a.valid;
    if (!a.valid) return false;
    if (a.mi != b.mi) return a.mi > b.mi;
    if (a.sorted.size() != b.sorted.size()) return a.sorted.size() < b.sorted.size();
    return a.sorted < b.sorted;
}

}  // namespace

ExhaustiveResult Selector::exhaustive_search(const VariableSubset& candidates) const {
    candidates.validate(estimator_->variables());
    const std::size_t p = candidates.size();
    if (p == 0) throw ConfigError("exhaustive search needs at least one candidate variable");
    if (p > options_.max_exhaustive) {
        throw ConfigError("exhaustive search over " + std::to_string(p) + " variables (" +
                          "2^" + std::to_string(p) + " subsets) refused; lower P to at most " +
                          std::to_string(options_.max_exhaustive));
    }
    std::vector<std::size_t> pool = candidates.indices;
    std::sort(pool.begin(), pool.end());
    const std::uint64_t total = (std::uint64_t{1} << p) - 1;
    const std::size_t chunk_count = static_cast<std::size_t>(std::min<std::uint64_t>(total, 1024));
    std::vector<Candidate> chunk_best(chunk_count);

    parallel_for(chunk_count, options_.workers, [&](std::size_t c) {
        const std::uint64_t begin = 1 + total * c / chunk_count;
        const std::uint64_t end = 1 + total * (c + 1) / chunk_count;
        Candidate best;
        std::vector<std::size_t> subset;
        for (std::uint64_t mask = begin; mask < end; ++mask) {
            subset.clear();
            for (std::size_t b = 0; b < p; ++b)
                if (mask & (std::uint64_t{1} << b)) subset.push_back(pool[b]);
            Candidate cand{estimator_->estimate(subset).value, subset, true};
            if (better(cand, best)) best = std::move(cand);
        }
        chunk_best[c] = std::move(best);
    });

    Candidate winner;
    for (auto& c : chunk_best)
        if (better(c, winner)) winner = std::move(c);

    ExhaustiveResult res;
    res.subset.indices = winner.sorted;
    res.subset.provenance = Provenance::Exhaustive;
    res.mi = MiEstimate{winner.mi, estimator_->k(), estimator_->samples()};
    res.evaluated = static_cast<std::size_t>(total);
    return res;
}

VariableSubset build_candidate_set(const VariableSubset& a_rank, const VariableSubset& b, std::size_t p) {
    if (b.size() > p) {
        throw ConfigError("candidate set size P = " + std::to_string(p) + " is smaller than the Option 2 set (" +
                          std::to_string(b.size()) + " variables)");
    }
    VariableSubset c;
    c.provenance = Provenance::Union;
    c.indices = b.indices;
    for (std::size_t j : a_rank.indices) {
        if (c.size() == p) break;
        if (!c.contains(j)) c.indices.push_back(j);
    }
    if (c.size() < p) throw ConfigError("Option 1 ranking too short to fill the candidate set to P");
    return c;
}

SelectionResult select_variables(const MiEstimator& estimator, std::size_t p, SelectorOptions options) {
    Selector selector(estimator, options);
    SelectionResult res;
    auto opt2 = selector.run_option2();
    res.b = opt2.subset;
    res.b_mi = opt2.mi.value;
    res.trace = std::move(opt2.trace);

    res.ranking = selector.rank_all();
    VariableSubset full_rank;
    full_rank.provenance = Provenance::Option1;
    for (const auto& r : res.ranking) full_rank.indices.push_back(r.column);

    const std::size_t target = std::min(p, estimator.variables());
    res.c = build_candidate_set(full_rank, res.b, std::max(target, res.b.size()));

    res.a.provenance = Provenance::Option1;
    std::size_t consumed = 0;
    for (std::size_t r = 0; r < full_rank.size(); ++r) {
        if (res.c.contains(full_rank.indices[r]) && !res.b.contains(full_rank.indices[r])) consumed = r + 1;
    }
    // A is the ranked prefix scanned to fill C.
    res.a.indices.assign(full_rank.indices.begin(), full_rank.indices.begin() + static_cast<std::ptrdiff_t>(consumed));

    auto ex = selector.exhaustive_search(res.c);
    res.selected = ex.subset;
    res.selected_mi = ex.mi.value;
    res.subsets_evaluated = ex.evaluated;
    return res;
}

}  // namespace mirsel
