#include "knowrank/kg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "knowrank/util/errors.hpp"
#include "knowrank/util/io.hpp"
#include "knowrank/util/rng.hpp"
#include "knowrank/util/text.hpp"

namespace knowrank::kg {


// ---------------------------------------------------------------------------
// TripleStore

TripleStore TripleStore::from_tsv(const std::string& triples_tsv, const std::string& labels_tsv) {
    TripleStore store;
    for (const auto& line : util::split_lines(triples_tsv)) {
        if (line.empty()) continue;
        auto fields = util::split(line, '\t');
        if (fields.size() != 3)
            throw Error(ErrorCode::MalformedInput, "triple line needs 3 fields: " + line);
        store.triples.push_back({fields[0], fields[1], fields[2]});
    }
    for (const auto& line : util::split_lines(labels_tsv)) {
        if (line.empty()) continue;
        auto fields = util::split(line, '\t');
        if (fields.size() != 2)
            throw Error(ErrorCode::MalformedInput, "label line needs 2 fields: " + line);
        store.labels[fields[0]] = fields[1];
    }
    return store;
}

// ---------------------------------------------------------------------------
// TF-IDF entity linking

namespace {

using TermCounts = std::map<std::string, int>;

TermCounts term_counts(const std::string& text) {
    TermCounts counts;
    for (const auto& token : util::tokenize_no_stopwords(text)) counts[token]++;
    return counts;
}

// Sparse TF-IDF vector, L2-normalized.
std::map<std::string, double> tfidf_vector(const TermCounts& counts,
                                           const std::map<std::string, double>& idf) {
    std::map<std::string, double> vec;
    double norm_sq = 0.0;
    for (const auto& [term, tf] : counts) {
        auto it = idf.find(term);
        double weight = tf * (it != idf.end() ? it->second : 0.0);
        if (weight != 0.0) {
            vec[term] = weight;
            norm_sq += weight * weight;
        }
    }
    if (norm_sq > 0.0) {
        double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& [term, weight] : vec) weight *= inv;
    }
    return vec;
}

double sparse_cosine(const std::map<std::string, double>& a,
                     const std::map<std::string, double>& b) {
    // Both inputs are unit vectors; the dot product is the cosine.
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    double dot = 0.0;
    for (const auto& [term, weight] : small) {
        auto it = large.find(term);
        if (it != large.end()) dot += weight * it->second;
    }
    return dot;
}

}  // namespace

LinkMap link_entities(const corpus::ItemCatalog& catalog, const TripleStore& external,
                      double threshold) {
    // Document frequencies over the entity label collection.
    std::map<std::string, int> df;
    std::vector<std::pair<std::string, TermCounts>> entity_terms;
    entity_terms.reserve(external.labels.size());
    for (const auto& [entity_id, label] : external.labels) {
        auto counts = term_counts(label);
        for (const auto& [term, tf] : counts) df[term]++;
        entity_terms.emplace_back(entity_id, std::move(counts));
    }

    const double n_docs = static_cast<double>(external.labels.size());
    std::map<std::string, double> idf;
    for (const auto& [term, freq] : df)
        idf[term] = std::log((1.0 + n_docs) / (1.0 + freq)) + 1.0;

    std::vector<std::pair<std::string, std::map<std::string, double>>> entity_vecs;
    entity_vecs.reserve(entity_terms.size());
    for (const auto& [entity_id, counts] : entity_terms)
        entity_vecs.emplace_back(entity_id, tfidf_vector(counts, idf));

    LinkMap links;
    for (const auto& [item_id, record] : catalog.records()) {
        auto item_vec = tfidf_vector(term_counts(record.title), idf);
        if (item_vec.empty()) continue;
        std::string best_entity;
        double best_score = -1.0;
        for (const auto& [entity_id, entity_vec] : entity_vecs) {
            double score = sparse_cosine(item_vec, entity_vec);
            // Strictly-greater keeps the lowest entity id on exact ties
            // (entity_vecs is sorted by id).
            if (score > best_score) {
                best_score = score;
                best_entity = entity_id;
            }
        }
        if (best_score >= threshold) links[item_id] = Link{best_entity, best_score};
    }
    return links;
}

std::string linkmap_to_tsv(const LinkMap& links) {
    std::string out;
    for (const auto& [item_id, link] : links) {
        out += item_id;
        out += '\t';
        out += link.entity_id;
        out += '\t';
        out += util::format_double(link.score);
        out += '\n';
    }
    return out;
}

LinkMap linkmap_from_tsv(const std::string& text) {
    LinkMap links;
    for (const auto& line : util::split_lines(text)) {
        if (line.empty()) continue;
        auto fields = util::split(line, '\t');
        if (fields.size() != 3)
            throw Error(ErrorCode::MalformedInput, "link line needs 3 fields: " + line);
        links[fields[0]] = Link{fields[1], std::stod(fields[2])};
    }
    return links;
}

// ---------------------------------------------------------------------------
// KnowledgeGraph

std::string KnowledgeGraph::item_node(const std::string& item_id) { return "item:" + item_id; }

std::string KnowledgeGraph::attr_node(const std::string& name, const std::string& value) {
    return "attr:" + name + "=" + value;
}

std::string KnowledgeGraph::entity_node(const std::string& entity_id) { return "ent:" + entity_id; }

void KnowledgeGraph::add_node(const std::string& node_id, NodeType type, const std::string& label) {
    auto [it, inserted] = nodes_.try_emplace(node_id);
    if (inserted) {
        it->second.type = type;
        it->second.label = label;
    }
}

void KnowledgeGraph::add_edge(const std::string& head, const std::string& relation,
                              const std::string& tail, const std::string& inverse_relation) {
    auto head_it = nodes_.find(head);
    auto tail_it = nodes_.find(tail);
    if (head_it == nodes_.end() || tail_it == nodes_.end())
        throw Error(ErrorCode::UnknownKey, "edge endpoint not in graph: " + head + " -> " + tail);
    head_it->second.out.emplace_back(relation, tail);
    head_it->second.sorted = false;
    tail_it->second.out.emplace_back(inverse_relation, head);
    tail_it->second.sorted = false;
}

bool KnowledgeGraph::has_node(const std::string& node_id) const {
    return nodes_.count(node_id) > 0;
}

bool KnowledgeGraph::has_edge(const std::string& head, const std::string& relation,
                              const std::string& tail) const {
    auto it = nodes_.find(head);
    if (it == nodes_.end()) return false;
    for (const auto& [rel, nbr] : it->second.out)
        if (rel == relation && nbr == tail) return true;
    return false;
}

NodeType KnowledgeGraph::node_type(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownKey, "no node " + node_id);
    return it->second.type;
}

std::string KnowledgeGraph::label(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownKey, "no node " + node_id);
    return it->second.label;
}

size_t KnowledgeGraph::edge_count() const {
    size_t total = 0;
    for (const auto& [id, node] : nodes_) total += node.out.size();
    return total;
}

const std::vector<std::pair<std::string, std::string>>& KnowledgeGraph::neighbors(
    const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) return empty_;
    auto& node = const_cast<Node&>(it->second);
    if (!node.sorted) {
        std::sort(node.out.begin(), node.out.end());
        node.sorted = true;
    }
    return it->second.out;
}

std::vector<std::string> KnowledgeGraph::node_ids() const {
    std::vector<std::string> ids;
    ids.reserve(nodes_.size());
    for (const auto& [id, node] : nodes_) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

KnowledgeGraph build_domain_graph(const corpus::ItemCatalog& catalog,
                                  const corpus::InteractionLog& train, const LinkMap& links,
                                  const TripleStore& external, const cf::CooccurrenceStats& stats) {
    KnowledgeGraph g;

    // Item nodes for everything the training log touches; attribute nodes
    // for every catalog attribute value of those items.
    for (const auto& item_id : train.item_ids()) {
        const auto* record = catalog.find(item_id);
        std::string label = record ? record->title : item_id;
        g.add_node(KnowledgeGraph::item_node(item_id), NodeType::item, label);
    }
    for (const auto& item_id : train.item_ids()) {
        const auto* record = catalog.find(item_id);
        if (!record) continue;
        for (const auto& [name, value] : record->attributes) {
            std::string attr = KnowledgeGraph::attr_node(name, value);
            g.add_node(attr, NodeType::attribute, value);
            g.add_edge(KnowledgeGraph::item_node(item_id), "has_" + name, attr, name + "_of");
        }
    }

    // One co_click edge per direction per co-clicked pair.
    for (const auto& [a, b, count] : stats.pairs()) {
        std::string node_a = KnowledgeGraph::item_node(a);
        std::string node_b = KnowledgeGraph::item_node(b);
        if (!g.has_node(node_a) || !g.has_node(node_b)) continue;
        g.add_edge(node_a, "co_click", node_b, "co_click");
    }

    // Linked external entities plus their 2-hop neighborhoods.
    std::unordered_map<std::string, std::vector<std::pair<std::string, std::array<std::string, 3>>>>
        by_head;  // head entity -> (relation, full triple)
    std::unordered_map<std::string, std::vector<std::array<std::string, 3>>> by_tail;
    for (const auto& triple : external.triples) {
        by_head[triple[0]].emplace_back(triple[1], triple);
        by_tail[triple[2]].push_back(triple);
    }
    auto entity_label = [&external](const std::string& entity_id) {
        auto it = external.labels.find(entity_id);
        return it != external.labels.end() ? it->second : entity_id;
    };
    auto add_triple = [&](const std::array<std::string, 3>& triple) {
        std::string head = KnowledgeGraph::entity_node(triple[0]);
        std::string tail = KnowledgeGraph::entity_node(triple[2]);
        g.add_node(head, NodeType::external_entity, entity_label(triple[0]));
        g.add_node(tail, NodeType::external_entity, entity_label(triple[2]));
        if (!g.has_edge(head, triple[1], tail))
            g.add_edge(head, triple[1], tail, "inv_" + triple[1]);
    };

    for (const auto& [item_id, link] : links) {
        std::string item = KnowledgeGraph::item_node(item_id);
        if (!g.has_node(item)) continue;
        std::string entity = KnowledgeGraph::entity_node(link.entity_id);
        g.add_node(entity, NodeType::external_entity, entity_label(link.entity_id));
        g.add_edge(item, "linked_to", entity, "link_of");

        // Frontier walk: triples incident to the linked entity, then
        // triples incident to the entities those introduced.
        std::unordered_set<std::string> frontier{link.entity_id};
        for (int hop = 0; hop < 2; ++hop) {
            std::unordered_set<std::string> next;
            for (const auto& entity_id : frontier) {
                if (auto it = by_head.find(entity_id); it != by_head.end())
                    for (const auto& [rel, triple] : it->second) {
                        add_triple(triple);
                        next.insert(triple[2]);
                    }
                if (auto it = by_tail.find(entity_id); it != by_tail.end())
                    for (const auto& triple : it->second) {
                        add_triple(triple);
                        next.insert(triple[0]);
                    }
            }
            frontier = std::move(next);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Path enumeration

std::vector<ReasoningPath> enumerate_paths(const KnowledgeGraph& g, const std::string& item_a,
                                           const std::string& item_b, int max_len, int max_paths) {
    std::string start = KnowledgeGraph::item_node(item_a);
    std::string goal = KnowledgeGraph::item_node(item_b);
    if (!g.has_node(start)) throw Error(ErrorCode::UnknownItem, "no node for item " + item_a);
    if (!g.has_node(goal)) throw Error(ErrorCode::UnknownItem, "no node for item " + item_b);

    std::vector<ReasoningPath> paths;
    std::vector<std::string> node_stack{start};
    std::vector<std::string> rel_stack;
    std::unordered_set<std::string> on_path{start};

    // Iterative DFS with explicit frames so truncation at max_paths is a
    // clean early exit.
    struct Frame {
        const std::vector<std::pair<std::string, std::string>>* edges;
        size_t next = 0;
    };
    std::vector<Frame> frames{{&g.neighbors(start), 0}};

    while (!frames.empty()) {
        if (static_cast<int>(paths.size()) >= max_paths) break;
        Frame& frame = frames.back();
        if (frame.next >= frame.edges->size()) {
            frames.pop_back();
            on_path.erase(node_stack.back());
            node_stack.pop_back();
            if (!rel_stack.empty()) rel_stack.pop_back();
            continue;
        }
        const auto& [relation, neighbor] = (*frame.edges)[frame.next++];
        // A pair's own co_click edge restates the training label; skip it.
        if (node_stack.size() == 1 && relation == "co_click" && neighbor == goal) continue;
        if (on_path.count(neighbor)) continue;
        if (neighbor == goal) {
            ReasoningPath path;
            path.nodes = node_stack;
            path.nodes.push_back(goal);
            path.relations = rel_stack;
            path.relations.push_back(relation);
            paths.push_back(std::move(path));
            continue;
        }
        if (static_cast<int>(rel_stack.size()) + 1 >= max_len) continue;
        node_stack.push_back(neighbor);
        rel_stack.push_back(relation);
        on_path.insert(neighbor);
        frames.push_back({&g.neighbors(neighbor), 0});
    }
    return paths;
}

// ---------------------------------------------------------------------------
// PathScorer

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr int kNodeTypes = 3;

int type_index(NodeType type) {
    switch (type) {
        case NodeType::item: return 0;
        case NodeType::attribute: return 1;
        case NodeType::external_entity: return 2;
    }
    return 0;
}

}  // namespace

PathScorer::PathScorer(const std::vector<std::string>& relation_vocab,
                       const PathScorerConfig& config)
    : config_(config), relations_(relation_vocab) {
    std::sort(relations_.begin(), relations_.end());
    relations_.erase(std::unique(relations_.begin(), relations_.end()), relations_.end());
    for (size_t i = 0; i < relations_.size(); ++i) relation_index_[relations_[i]] = static_cast<int>(i);

    const int dim = config_.dim;
    size_t total = static_cast<size_t>(kNodeTypes + config_.buckets + relations_.size()) * dim +
                   dim + 1;
    params_.resize(total);
    util::Rng rng(config_.seed);
    for (auto& p : params_) p = rng.uniform(-0.1, 0.1);
}

int PathScorer::relation_index(const std::string& relation) const {
    auto it = relation_index_.find(relation);
    if (it == relation_index_.end())
        throw Error(ErrorCode::UnknownKey, "relation not in scorer vocabulary: " + relation);
    return it->second;
}

int PathScorer::bucket_of(const std::string& node_id) const {
    return static_cast<int>(util::fnv1a(node_id) % static_cast<uint64_t>(config_.buckets));
}

// Parameter layout offsets.
namespace {
struct Layout {
    int dim;
    int buckets;
    int relations;
    size_t type_off() const { return 0; }
    size_t bucket_off() const { return static_cast<size_t>(kNodeTypes) * dim; }
    size_t rel_off() const { return bucket_off() + static_cast<size_t>(buckets) * dim; }
    size_t w_off() const { return rel_off() + static_cast<size_t>(relations) * dim; }
    size_t b_off() const { return w_off() + dim; }
};
}  // namespace

std::vector<double> PathScorer::entity_embedding(const KnowledgeGraph& g,
                                                 const std::string& node_id) const {
    Layout lay{config_.dim, config_.buckets, static_cast<int>(relations_.size())};
    int type = type_index(g.node_type(node_id));
    int bucket = bucket_of(node_id);
    std::vector<double> emb(config_.dim);
    for (int d = 0; d < config_.dim; ++d)
        emb[d] = params_[lay.type_off() + type * config_.dim + d] +
                 params_[lay.bucket_off() + bucket * config_.dim + d];
    return emb;
}

double PathScorer::path_score(const KnowledgeGraph& g, const ReasoningPath& path) const {
    if (path.relations.empty()) throw Error(ErrorCode::NoPaths, "empty path");
    Layout lay{config_.dim, config_.buckets, static_cast<int>(relations_.size())};
    std::vector<double> pooled(config_.dim, 0.0);
    for (size_t t = 0; t < path.relations.size(); ++t) {
        auto step = entity_embedding(g, path.nodes[t + 1]);
        int rel = relation_index(path.relations[t]);
        for (int d = 0; d < config_.dim; ++d)
            pooled[d] += step[d] + params_[lay.rel_off() + rel * config_.dim + d];
    }
    double inv_len = 1.0 / static_cast<double>(path.relations.size());
    double score = params_[lay.b_off()];
    for (int d = 0; d < config_.dim; ++d)
        score += params_[lay.w_off() + d] * pooled[d] * inv_len;
    return score;
}

double PathScorer::pair_relevance(const KnowledgeGraph& g,
                                  const std::vector<ReasoningPath>& paths) const {
    if (paths.empty()) throw Error(ErrorCode::NoPaths, "pair has no connecting paths");
    double mean = 0.0;
    for (const auto& path : paths) mean += path_score(g, path);
    mean /= static_cast<double>(paths.size());
    return sigmoid(mean);
}

std::vector<double> PathScorer::parameters() const { return params_; }

void PathScorer::set_parameters(const std::vector<double>& params) {
    if (params.size() != params_.size())
        throw Error(ErrorCode::MalformedInput, "parameter vector size mismatch");
    params_ = params;
}

double PathScorer::loss(const KnowledgeGraph& g, const std::vector<LabeledPair>& pairs) const {
    double total = 0.0;
    for (const auto& pair : pairs) {
        double rel = pair_relevance(g, pair.paths);
        total += pair.positive ? -std::log(rel) : -std::log(1.0 - rel);
    }
    return total;
}

double PathScorer::loss_and_gradient(const KnowledgeGraph& g, const std::vector<LabeledPair>& pairs,
                                     std::vector<double>* gradient) const {
    Layout lay{config_.dim, config_.buckets, static_cast<int>(relations_.size())};
    const int dim = config_.dim;
    gradient->assign(params_.size(), 0.0);
    double total = 0.0;

    for (const auto& pair : pairs) {
        if (pair.paths.empty()) throw Error(ErrorCode::NoPaths, "pair has no connecting paths");
        double mean = 0.0;
        for (const auto& path : pair.paths) mean += path_score(g, path);
        mean /= static_cast<double>(pair.paths.size());
        double rel = sigmoid(mean);
        total += pair.positive ? -std::log(rel) : -std::log(1.0 - rel);
        // d(loss)/d(mean): sigma cancels the log's denominator either way.
        double dmean = pair.positive ? (rel - 1.0) : rel;
        double dscore = dmean / static_cast<double>(pair.paths.size());

        for (const auto& path : pair.paths) {
            double inv_len = 1.0 / static_cast<double>(path.relations.size());
            // score = b + w . (pooled / len); pooled = sum over steps.
            (*gradient)[lay.b_off()] += dscore;
            std::vector<double> pooled(dim, 0.0);
            for (size_t t = 0; t < path.relations.size(); ++t) {
                auto step = entity_embedding(g, path.nodes[t + 1]);
                int rel_idx = relation_index(path.relations[t]);
                for (int d = 0; d < dim; ++d)
                    pooled[d] += step[d] + params_[lay.rel_off() + rel_idx * dim + d];
            }
            for (int d = 0; d < dim; ++d)
                (*gradient)[lay.w_off() + d] += dscore * pooled[d] * inv_len;
            for (size_t t = 0; t < path.relations.size(); ++t) {
                int type = type_index(g.node_type(path.nodes[t + 1]));
                int bucket = bucket_of(path.nodes[t + 1]);
                int rel_idx = relation_index(path.relations[t]);
                for (int d = 0; d < dim; ++d) {
                    double dstep = dscore * params_[lay.w_off() + d] * inv_len;
                    (*gradient)[lay.type_off() + type * dim + d] += dstep;
                    (*gradient)[lay.bucket_off() + bucket * dim + d] += dstep;
                    (*gradient)[lay.rel_off() + rel_idx * dim + d] += dstep;
                }
            }
        }
    }
    return total;
}

double PathScorer::sgd_step(const KnowledgeGraph& g, const LabeledPair& pair, double lr) {
    std::vector<double> gradient;
    double loss = loss_and_gradient(g, {pair}, &gradient);
    for (size_t i = 0; i < params_.size(); ++i) params_[i] -= lr * gradient[i];
    return loss;
}

// ---------------------------------------------------------------------------
// Training

PathScorer train_path_scorer(const KnowledgeGraph& g, const cf::CooccurrenceStats& stats,
                             double theta, const PathScorerConfig& config,
                             PathTrainSummary* summary) {
    // Positive pairs: co-occurrence relevance strictly above theta.
    std::vector<std::pair<std::string, std::string>> positives;
    std::vector<std::pair<std::string, std::string>> below;
    for (const auto& [a, b, count] : stats.pairs()) {
        double rel = cf::item_relevance(stats, a, b);
        (rel > theta ? positives : below).emplace_back(a, b);
    }
    if (positives.empty())
        throw Error(ErrorCode::NoPositivePairs, "no pair exceeds the relevance threshold");

    // Relation vocabulary from the whole graph so unseen-at-train-time
    // relations on the negative side still resolve.
    std::vector<std::string> vocab;
    for (const auto& node_id : g.node_ids())
        for (const auto& [rel, nbr] : g.neighbors(node_id)) vocab.push_back(rel);
    PathScorer scorer(vocab, config);

    auto paths_for = [&](const std::pair<std::string, std::string>& pair) {
        return enumerate_paths(g, pair.first, pair.second, config.max_path_len, config.max_paths);
    };

    std::vector<PathScorer::LabeledPair> training;
    size_t n_pos = 0;
    for (const auto& pair : positives) {
        auto paths = paths_for(pair);
        if (paths.empty()) continue;  // unscorable without a connecting path
        training.push_back({std::move(paths), true});
        ++n_pos;
    }
    if (n_pos == 0)
        throw Error(ErrorCode::NoPositivePairs, "no positive pair has a connecting path");

    // Negatives: seeded sample of sub-threshold co-clicked pairs, topped up
    // with never-co-clicked item pairs when those run out.
    util::Rng rng(config.seed);
    size_t want_neg = n_pos * static_cast<size_t>(config.neg_ratio);
    size_t n_neg = 0;
    rng.shuffle(below);
    for (const auto& pair : below) {
        if (n_neg >= want_neg) break;
        auto paths = paths_for(pair);
        if (paths.empty()) continue;
        training.push_back({std::move(paths), false});
        ++n_neg;
    }
    if (n_neg < want_neg) {
        auto items = stats.items();
        size_t attempts = 0;
        const size_t max_attempts = want_neg * 50 + 100;
        while (n_neg < want_neg && attempts++ < max_attempts && items.size() >= 2) {
            const auto& a = items[rng.below(items.size())];
            const auto& b = items[rng.below(items.size())];
            if (a == b) continue;
            if (stats.pair_count(a, b) > 0) continue;
            auto paths = paths_for({a, b});
            if (paths.empty()) continue;
            training.push_back({std::move(paths), false});
            ++n_neg;
        }
    }

    double initial_loss = scorer.loss(g, training);
    std::vector<size_t> order(training.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t idx : order) scorer.sgd_step(g, training[idx], config.lr);
    }
    double final_loss = scorer.loss(g, training);
    scorer.mark_trained();

    if (summary) {
        summary->positives = n_pos;
        summary->negatives = n_neg;
        summary->initial_loss = initial_loss;
        summary->final_loss = final_loss;
    }
    return scorer;
}

ReasoningPath best_path(const PathScorer& scorer, const KnowledgeGraph& g,
                        const std::vector<ReasoningPath>& paths) {
    if (paths.empty()) throw Error(ErrorCode::NoPaths, "no paths to choose from");
    const ReasoningPath* best = nullptr;
    double best_score = 0.0;
    for (const auto& path : paths) {
        double score = scorer.path_score(g, path);
        bool better = false;
        if (!best) {
            better = true;
        } else if (score != best_score) {
            better = score > best_score;
        } else if (path.length() != best->length()) {
            better = path.length() < best->length();
        } else {
            better = path.nodes < best->nodes;
        }
        if (better) {
            best = &path;
            best_score = score;
        }
    }
    ReasoningPath result = *best;
    result.score = best_score;
    return result;
}

void label_path(const KnowledgeGraph& g, ReasoningPath& path) {
    path.labels.clear();
    path.labels.reserve(path.nodes.size());
    for (const auto& node : path.nodes)
        path.labels.push_back(g.has_node(node) ? g.label(node) : node);
}

// ---------------------------------------------------------------------------
// PathCache

std::pair<std::string, std::string> PathCache::key(const std::string& a, const std::string& b) {
    return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

const ReasoningPath* PathCache::find(const std::string& a, const std::string& b) const {
    auto it = entries.find(key(a, b));
    return it != entries.end() ? &it->second : nullptr;
}

void PathCache::put(const std::string& a, const std::string& b, ReasoningPath path) {
    entries[key(a, b)] = std::move(path);
}

std::string PathCache::to_jsonl() const {
    std::string out;
    for (const auto& [pair, path] : entries) {
        nlohmann::json record;
        record["pair"] = {pair.first, pair.second};
        record["nodes"] = path.nodes;
        record["relations"] = path.relations;
        if (!path.labels.empty()) record["labels"] = path.labels;
        record["score"] = path.score;
        out += record.dump();
        out += '\n';
    }
    return out;
}

PathCache PathCache::from_jsonl(const std::string& text) {
    PathCache cache;
    for (const auto& line : util::split_lines(text)) {
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.contains("pair"))
            throw Error(ErrorCode::MalformedInput, "bad path cache line: " + line);
        ReasoningPath path;
        path.nodes = record["nodes"].get<std::vector<std::string>>();
        path.relations = record["relations"].get<std::vector<std::string>>();
        if (record.contains("labels"))
            path.labels = record["labels"].get<std::vector<std::string>>();
        path.score = record["score"].get<double>();
        cache.entries[{record["pair"][0].get<std::string>(),
                       record["pair"][1].get<std::string>()}] = std::move(path);
    }
    return cache;
}

}  // namespace knowrank::kg
