#pragma once

#include <map>
#include <string>
#include <vector>

#include "knowrank/cf.hpp"
#include "knowrank/corpus.hpp"
#include "knowrank/kg.hpp"

namespace knowrank::knowledge {

enum class Variant {
    none,
    item_attr,
    global_i2i,
    his_i2i,
    his_cand_i2i,
    his_u2i,
    his_cand_u2i,
    his_i2i_path,
};

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);  // throws ConfigError

/// One anchor item with its ordered related items (scores descending).
struct I2iBlock {
    std::string anchor;
    std::vector<cf::Scored> neighbors;
};

/// Everything a single task's prompt may draw on. Which fields are filled
/// depends on the variant; `none` leaves all of them empty.
struct KnowledgePack {
    std::string user_id;
    Variant variant = Variant::none;
    std::vector<I2iBlock> i2i_blocks;
    std::vector<cf::Scored> u2i_list;
    std::vector<kg::ReasoningPath> paths;
    // item id -> title with rendered attributes, e.g.
    // "Toy Story (1995)(genre: Animation, Comedy, Publish year: 1995)".
    std::map<std::string, std::string> attribute_lines;
};

/// The m item pairs with the highest co-occurrence relevance over the whole
/// training log; ties by lexicographic pair id. Task-independent.
KnowledgePack select_global_i2i(const cf::CooccurrenceStats& stats, int m = 20);

/// For each of the user's h most recent history items, the top-k related
/// items by co-occurrence relevance — from the whole item set, or from the
/// task's candidates when restrict_to_candidates is set. Zero-score
/// neighbors are dropped, and anchors left with no neighbors are omitted.
KnowledgePack select_history_i2i(const corpus::RankingTask& task,
                                 const cf::CooccurrenceStats& stats, int h = 10, int k = 3,
                                 bool restrict_to_candidates = false);

/// Same selection with embedding inner products as the relevance score.
KnowledgePack select_history_i2i(const corpus::RankingTask& task, const cf::EmbeddingTable& table,
                                 int h = 10, int k = 3, bool restrict_to_candidates = false);

/// The items most relevant to the user by embedding inner product. With
/// restrict_to_candidates the result is a total descending order over all
/// task candidates; otherwise the top-n items outside the user's history.
/// Users absent from the table fall back to the mean of their history item
/// vectors as the user vector.
KnowledgePack select_history_u2i(const corpus::RankingTask& task, const cf::EmbeddingTable& table,
                                 int n = 20, bool restrict_to_candidates = false);

/// Fills attribute_lines for every history and candidate item: title plus
/// "(name: v1, v2, other: v3)" when the catalog has attributes for it,
/// bare title otherwise.
void attach_attributes(KnowledgePack& pack, const corpus::RankingTask& task,
                       const corpus::ItemCatalog& catalog);

/// For each i2i anchor's top neighbor with a cached best path, appends that
/// path (in block order). Pairs without cached paths keep text-only
/// knowledge.
void attach_paths(KnowledgePack& pack, const kg::PathCache& cache);

std::string packs_to_jsonl(const std::vector<KnowledgePack>& packs);
std::vector<KnowledgePack> packs_from_jsonl(const std::string& text);

}  // namespace knowrank::knowledge
