#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "knowrank/cf.hpp"
#include "knowrank/corpus.hpp"

namespace knowrank::kg {

/// External KG input: (head, relation, tail) triples plus entity labels.
struct TripleStore {
    std::vector<std::array<std::string, 3>> triples;
    std::map<std::string, std::string> labels;  // entity id -> label

    static TripleStore from_tsv(const std::string& triples_tsv, const std::string& labels_tsv);
};

struct Link {
    std::string entity_id;
    double score = 0.0;  // TF-IDF cosine in [0,1]
};

/// item id -> best-matching external entity, kept only at or above the
/// link threshold.
using LinkMap = std::map<std::string, Link>;

/// Links catalog items to external entities by TF-IDF cosine between the
/// item title and entity labels. Tokenization: lowercase, split on
/// non-alphanumerics, fixed English stopword list, no stemming. Weights:
/// tf = raw count, idf = ln((1+N)/(1+df)) + 1 over the label collection,
/// vectors L2-normalized. The single best entity is linked iff its cosine
/// >= threshold; ties break by ascending entity id.
LinkMap link_entities(const corpus::ItemCatalog& catalog, const TripleStore& external,
                      double threshold);

std::string linkmap_to_tsv(const LinkMap& links);
LinkMap linkmap_from_tsv(const std::string& text);

enum class NodeType { item, attribute, external_entity };

/// Merged domain graph: item nodes, attribute-value nodes, linked external
/// entities with their 2-hop neighborhoods. Every stored edge has a typed
/// inverse so path enumeration can walk both directions.
class KnowledgeGraph {
public:
    /// Node ids are namespaced ("item:<id>", "attr:<name>=<value>",
    /// "ent:<id>") so the three universes cannot collide.
    static std::string item_node(const std::string& item_id);
    static std::string attr_node(const std::string& name, const std::string& value);
    static std::string entity_node(const std::string& entity_id);

    void add_node(const std::string& node_id, NodeType type, const std::string& label);
    /// Adds head -(relation)-> tail plus the inverse edge tail -(inverse)-> head.
    void add_edge(const std::string& head, const std::string& relation, const std::string& tail,
                  const std::string& inverse_relation);

    bool has_node(const std::string& node_id) const;
    bool has_edge(const std::string& head, const std::string& relation,
                  const std::string& tail) const;
    NodeType node_type(const std::string& node_id) const;
    std::string label(const std::string& node_id) const;

    size_t node_count() const { return nodes_.size(); }
    size_t edge_count() const;  // directed edges, inverses included

    /// Outgoing edges sorted by (relation, neighbor) for deterministic DFS.
    const std::vector<std::pair<std::string, std::string>>& neighbors(
        const std::string& node_id) const;

    std::vector<std::string> node_ids() const;  // sorted

private:
    struct Node {
        NodeType type;
        std::string label;
        std::vector<std::pair<std::string, std::string>> out;  // (relation, tail)
        bool sorted = true;
    };
    std::unordered_map<std::string, Node> nodes_;
    mutable std::vector<std::pair<std::string, std::string>> empty_;
};

/// Builds the merged graph: has_<attr>/<attr>_of edges for every catalog
/// attribute value, bidirectional co_click edges for every pair with at
/// least one co-click, and linked external entities with their 2-hop
/// neighborhoods (relation r gets inverse inv_r).
KnowledgeGraph build_domain_graph(const corpus::ItemCatalog& catalog,
                                  const corpus::InteractionLog& train, const LinkMap& links,
                                  const TripleStore& external, const cf::CooccurrenceStats& stats);

/// An entity-relation chain between two item nodes.
struct ReasoningPath {
    std::vector<std::string> nodes;      // length = edges + 1
    std::vector<std::string> relations;  // length = edges
    std::vector<std::string> labels;     // optional display labels, parallel to nodes
    double score = 0.0;                  // raw path score s_t (set by the scorer)

    size_t length() const { return relations.size(); }
    bool operator==(const ReasoningPath& other) const {
        return nodes == other.nodes && relations == other.relations;
    }
};

/// Fills path.labels from graph labels (falling back to the node id).
void label_path(const KnowledgeGraph& g, ReasoningPath& path);

/// All simple paths (no repeated node) of edge length <= max_len between
/// two items, in deterministic DFS order (sorted relation then neighbor),
/// truncated to max_paths. The direct co_click edge between the query pair
/// is excluded so a pair is never explained by its own label.
std::vector<ReasoningPath> enumerate_paths(const KnowledgeGraph& g, const std::string& item_a,
                                           const std::string& item_b, int max_len, int max_paths);

struct PathScorerConfig {
    int dim = 16;
    int buckets = 64;
    int epochs = 10;
    double lr = 0.05;
    uint64_t seed = 42;
    int neg_ratio = 1;    // negatives sampled per positive
    int max_path_len = 3;
    int max_paths = 64;
};

/// Scores a reasoning path: each edge contributes an entity embedding of
/// its target (type embedding + hashed-id bucket embedding) plus a relation
/// embedding; step vectors are mean-pooled and mapped through one affine
/// layer to the path score. Pure function of path and parameters.
class PathScorer {
public:
    PathScorer(const std::vector<std::string>& relation_vocab, const PathScorerConfig& config);

    double path_score(const KnowledgeGraph& g, const ReasoningPath& path) const;

    /// sigma(mean of per-path scores). Throws NoPaths on an empty set.
    double pair_relevance(const KnowledgeGraph& g, const std::vector<ReasoningPath>& paths) const;

    bool trained() const { return trained_; }
    void mark_trained() { trained_ = true; }
    const PathScorerConfig& config() const { return config_; }

    // Flattened parameter access, used by training and by the
    // finite-difference gradient check.
    std::vector<double> parameters() const;
    void set_parameters(const std::vector<double>& params);

    struct LabeledPair {
        std::vector<ReasoningPath> paths;
        bool positive = false;
    };

    /// Binary cross-entropy over labeled pairs:
    /// -sum_(+) log rel - sum_(-) log(1 - rel).
    double loss(const KnowledgeGraph& g, const std::vector<LabeledPair>& pairs) const;

    /// Loss plus its analytic gradient in flattened-parameter order.
    double loss_and_gradient(const KnowledgeGraph& g, const std::vector<LabeledPair>& pairs,
                             std::vector<double>* gradient) const;

    /// One SGD step on a single pair. Returns the pair's loss before the step.
    double sgd_step(const KnowledgeGraph& g, const LabeledPair& pair, double lr);

private:
    int relation_index(const std::string& relation) const;
    int bucket_of(const std::string& node_id) const;
    std::vector<double> entity_embedding(const KnowledgeGraph& g, const std::string& node_id) const;

    PathScorerConfig config_;
    std::vector<std::string> relations_;
    std::unordered_map<std::string, int> relation_index_;
    // Layout: type embeddings (3 x dim), bucket embeddings (buckets x dim),
    // relation embeddings (R x dim), output weight (dim), output bias (1).
    std::vector<double> params_;
    bool trained_ = false;

    friend struct ScorerInternals;
};

struct PathTrainSummary {
    size_t positives = 0;
    size_t negatives = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

/// Labels item pairs by co-occurrence relevance (> theta positive, a seeded
/// sample of the rest negative, neg_ratio per positive), enumerates their
/// connecting paths and fits the scorer by SGD on the binary loss. Pairs
/// with no connecting path cannot be scored and are skipped. Throws
/// NoPositivePairs when theta excludes every pair.
PathScorer train_path_scorer(const KnowledgeGraph& g, const cf::CooccurrenceStats& stats,
                             double theta, const PathScorerConfig& config,
                             PathTrainSummary* summary = nullptr);

/// Highest-scoring path; ties by shortest length, then lexicographic node
/// sequence. Throws NoPaths on an empty set. The returned path carries its
/// score.
ReasoningPath best_path(const PathScorer& scorer, const KnowledgeGraph& g,
                        const std::vector<ReasoningPath>& paths);

/// Best-path cache, keyed by unordered item pair.
struct PathCache {
    std::map<std::pair<std::string, std::string>, ReasoningPath> entries;

    static std::pair<std::string, std::string> key(const std::string& a, const std::string& b);
    const ReasoningPath* find(const std::string& a, const std::string& b) const;
    void put(const std::string& a, const std::string& b, ReasoningPath path);

    std::string to_jsonl() const;
    static PathCache from_jsonl(const std::string& text);
};

}  // namespace knowrank::kg
