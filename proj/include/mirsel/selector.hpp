#pragma once

#include "mirsel/mi.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mirsel {

enum class Provenance { Option1, Option2, Union, Exhaustive, Manual };

std::string to_string(Provenance p);

/// Ordered list of distinct, 0-based column indices.
struct VariableSubset {
    std::vector<std::size_t> indices;
    Provenance provenance = Provenance::Manual;

    std::size_t size() const noexcept { return indices.size(); }
    bool empty() const noexcept { return indices.empty(); }
    bool contains(std::size_t column) const;
    /// Throws ConfigError on duplicates or indices >= n_variables.
    void validate(std::size_t n_variables) const;
};

enum class StepKind { Forward, Backward, Stop };

std::string to_string(StepKind k);

struct TraceStep {
    StepKind kind = StepKind::Forward;
    std::optional<std::size_t> candidate;  // variable added or removed
    std::vector<std::size_t> subset;       // subset whose MI is logged
    double mi = 0.0;
    std::string decision;
};

/// Audit log of a forward/backward run; each MI equals a fresh estimate on `subset`.
struct SelectionTrace {
    std::vector<TraceStep> steps;
};

struct SelectorOptions {
    unsigned workers = 0;  // 0: machine parallelism
    /// Repeat the backward step until no single removal raises the MI.
    bool iterate_backward = false;
    std::size_t max_exhaustive = 20;
};

struct RankedVariable {
    std::size_t column = 0;
    double mi = 0.0;
};

struct ForwardResult {
    VariableSubset subset;
    MiEstimate mi;
    std::size_t added = 0;
    std::vector<RankedVariable> evaluated;  // every candidate with the MI of current + candidate
};

struct BackwardResult {
    VariableSubset subset;
    MiEstimate mi;  // MI of the returned subset
    std::optional<std::size_t> removed;
    std::vector<RankedVariable> evaluated;  // every removable variable with the MI after its removal
};

struct Option2Result {
    VariableSubset subset;
    MiEstimate mi;
    SelectionTrace trace;
};

struct ExhaustiveResult {
    VariableSubset subset;
    MiEstimate mi;
    std::size_t evaluated = 0;
};

/// Greedy and exhaustive variable selection driven by one MI estimation session.
/// Ties are broken by ascending column index (greedy steps) and by smaller
/// cardinality then lexicographic order (exhaustive search), so results are
/// independent of the worker count.
class Selector {
public:
    explicit Selector(const MiEstimator& estimator, SelectorOptions options = {});

    /// Every variable with its individual MI, sorted by descending MI.
    std::vector<RankedVariable> rank_all() const;
    /// First `count` variables of rank_all().
    VariableSubset rank_option1(std::size_t count) const;

    /// Adds the variable maximizing the joint MI of the enlarged set.
    ForwardResult forward_step(const VariableSubset& current) const;
    /// Removes the one variable (other than `protected_column`) whose removal
    /// raises the MI the most, if any removal raises it strictly.
    BackwardResult backward_step(const VariableSubset& current, std::size_t protected_column,
                                 std::optional<double> current_mi = std::nullopt) const;
    /// Alternating forward/backward search, stopped when a forward step lowers the MI.
    Option2Result run_option2() const;
    /// Best non-empty subset of `candidates` by brute-force enumeration.
    ExhaustiveResult exhaustive_search(const VariableSubset& candidates) const;

    const MiEstimator& estimator() const noexcept { return *estimator_; }

private:
    std::vector<double> evaluate_all(const std::vector<std::vector<std::size_t>>& subsets) const;

    const MiEstimator* estimator_;
    SelectorOptions options_;
};

/// C = B extended with Option 1 ranked variables (in rank order) until |C| = p.
VariableSubset build_candidate_set(const VariableSubset& a_rank, const VariableSubset& b, std::size_t p);

/// Everything the end-to-end selection produces.
struct SelectionResult {
    std::vector<RankedVariable> ranking;  // all variables, descending individual MI
    VariableSubset a;                     // ranked prefix consumed to fill C
    VariableSubset b;
    double b_mi = 0.0;
    VariableSubset c;
    VariableSubset selected;
    double selected_mi = 0.0;
    SelectionTrace trace;
    std::size_t subsets_evaluated = 0;
};

/// Option 2, Option 1 ranking, candidate union of size p, then exhaustive search.
SelectionResult select_variables(const MiEstimator& estimator, std::size_t p, SelectorOptions options = {});

}  // namespace mirsel
