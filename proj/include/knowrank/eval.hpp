#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "knowrank/cf.hpp"
#include "knowrank/corpus.hpp"
#include "knowrank/gateway.hpp"

namespace knowrank::eval {

/// Position-discounted gain for the single held-out positive: 1/log2(r+1)
/// when the truth's 1-based rank r <= k, else 0 (ideal DCG is 1).
double ndcg_at_k(const gateway::RankedList& ranked, int truth_index, int k);

/// 1 when the truth lands in the top k, else 0.
double hit_at_k(const gateway::RankedList& ranked, int truth_index, int k);

enum class BaselineMethod { pop, item_cf, bm25, mf, recency_tiebreak };

BaselineMethod baseline_from_name(const std::string& name);  // throws ConfigError
std::string baseline_name(BaselineMethod method);

/// The side structures baseline rankers may need; a missing prerequisite
/// raises MissingIndex.
struct BaselineIndices {
    const cf::CooccurrenceStats* stats = nullptr;            // item_cf, recency_tiebreak
    const cf::EmbeddingTable* table = nullptr;               // mf
    const corpus::ItemCatalog* catalog = nullptr;            // bm25 titles
    const std::map<std::string, int64_t>* pop_counts = nullptr;  // pop
};

/// Scores the candidates with a non-LLM ranker and returns the descending
/// order; ties keep the original candidate order.
gateway::RankedList rank_baseline(const corpus::RankingTask& task, BaselineMethod method,
                                  const BaselineIndices& indices);

struct SampleRecord {
    std::string user_id;
    std::string strategy;
    std::string variant;
    std::string truth_item;
    int history_length = 0;
    int rank_of_truth = 0;  // 1-based
};

struct MetricReport {
    std::vector<int> ks;
    std::vector<SampleRecord> samples;
    std::map<std::string, double> means;  // "ndcg@5", "hr@10", ... -> mean

    size_t count() const { return samples.size(); }
};

/// Per-sample truth ranks plus metric means over every k. tasks[i] pairs
/// with rankings[i].
MetricReport evaluate_run(const std::vector<corpus::RankingTask>& tasks,
                          const std::vector<gateway::RankedList>& rankings,
                          const std::vector<int>& ks = {1, 5, 10},
                          const std::string& variant = "");

/// Serialization is timestamp-free so equal runs give equal bytes.
std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);
std::string report_to_table(const MetricReport& report);  // aligned columns
std::string samples_to_tsv(const MetricReport& report);

enum class GroupAxis { item_popularity, history_length };

GroupAxis axis_from_name(const std::string& name);  // throws ConfigError

struct GroupingSpec {
    GroupAxis axis = GroupAxis::history_length;
    double boundary = 0.0;  // axis value <= boundary goes to the low group
};

struct GroupReport {
    GroupingSpec spec;
    MetricReport low;
    MetricReport high;
    bool degenerate = false;  // one side empty
};

/// A sample's numeric position on a grouping axis: the truth item's train
/// frequency, or the user's history length.
double axis_value(const SampleRecord& record, GroupAxis axis,
                  const std::map<std::string, int64_t>& pop_counts);

/// Median axis value — the default split boundary.
double median_boundary(const MetricReport& report, GroupAxis axis,
                       const std::map<std::string, int64_t>& pop_counts);

GroupReport group_report(const MetricReport& report, const GroupingSpec& spec,
                         const std::map<std::string, int64_t>& pop_counts);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;  // two-sided
    int df = 0;
};

/// Paired two-sided t-test over equal-length samples. A zero-variance
/// difference vector yields p=1 (t=0) or p=0 (all same nonzero sign).
TTestResult t_test_paired(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace knowrank::eval
