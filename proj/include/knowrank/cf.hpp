#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "knowrank/corpus.hpp"

namespace knowrank::cf {

using ItemSet = std::unordered_set<std::string>;

/// Distinct-user co-click statistics. item_freq(i) counts users who clicked
/// item i at least once; pair counts count users who clicked both items of
/// an unordered pair. Repeat clicks by one user never inflate either count,
/// which keeps the normalized relevance inside [0,1].
class CooccurrenceStats {
public:
    bool has_item(const std::string& item_id) const;
    int64_t item_freq(const std::string& item_id) const;  // 0 for unknown items
    int64_t pair_count(const std::string& a, const std::string& b) const;

    /// Items in ascending id order.
    const std::vector<std::string>& items() const { return items_; }

    /// All nonzero unordered pairs as (item_a, item_b, count) with a < b,
    /// sorted lexicographically.
    std::vector<std::tuple<std::string, std::string, int64_t>> pairs() const;

    std::string pairs_tsv() const;  // "<i>\t<j>\t<count>"
    std::string freq_tsv() const;   // "<i>\t<freq>"
    static CooccurrenceStats from_tsv(const std::string& pairs_tsv, const std::string& freq_tsv);

    friend CooccurrenceStats count_cooccurrence(const corpus::InteractionLog& train);

private:
    int index_of(const std::string& item_id) const;  // -1 when absent
    static uint64_t pair_key(int a, int b);

    std::vector<std::string> items_;
    std::unordered_map<std::string, int> index_;
    std::vector<int64_t> freq_;
    std::unordered_map<uint64_t, int64_t> pair_counts_;
};

/// Builds co-click statistics over the whole train log (no time window).
CooccurrenceStats count_cooccurrence(const corpus::InteractionLog& train);

/// Co-occurrence relevance: co-occur(i,j) / sqrt(N_i * N_j), in [0,1].
/// Unseen pairs score 0. Throws SelfPair for i == j and UnknownItem when
/// either item is absent from the stats.
double item_relevance(const CooccurrenceStats& stats, const std::string& i, const std::string& j);

enum class Provenance { trained_mf, imported };

struct MfConfig {
    int dim = 32;
    int epochs = 10;
    double lr = 0.05;
    double reg = 0.01;
    int neg_per_pos = 1;
    uint64_t seed = 42;
};

/// User and item embedding vectors. Built by the in-repo trainer or loaded
/// from externally produced table files (same dot-product contract).
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(int dim, Provenance provenance) : dim_(dim), provenance_(provenance) {}

    int dim() const { return dim_; }
    Provenance provenance() const { return provenance_; }

    void set_user(const std::string& user_id, std::vector<double> vec);
    void set_item(const std::string& item_id, std::vector<double> vec);

    bool has_user(const std::string& user_id) const { return users_.count(user_id) > 0; }
    bool has_item(const std::string& item_id) const { return items_.count(item_id) > 0; }

    const std::vector<double>& user_vec(const std::string& user_id) const;  // throws UnknownKey
    const std::vector<double>& item_vec(const std::string& item_id) const;  // throws UnknownKey

    /// Model scores as inner products. Throw UnknownKey for absent ids.
    double user_item(const std::string& user_id, const std::string& item_id) const;
    double item_item(const std::string& a, const std::string& b) const;

    std::vector<std::string> user_ids() const;  // sorted
    std::vector<std::string> item_ids() const;  // sorted

    /// Serialized table: header "dim=<d> kind=<user|item>" then one
    /// "<id> <f1> ... <fd>" line per key. Floats round-trip exactly.
    std::string serialize(bool user_side) const;
    static EmbeddingTable deserialize(const std::string& user_table, const std::string& item_table,
                                      Provenance provenance = Provenance::imported);

    bool all_finite() const;

private:
    int dim_ = 0;
    Provenance provenance_ = Provenance::trained_mf;
    std::unordered_map<std::string, std::vector<double>> users_;
    std::unordered_map<std::string, std::vector<double>> items_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);

/// Trains user/item embeddings with a pairwise logistic (BPR-style) loss
/// -log sigmoid(v_u.v_i - v_u.v_j) over sampled (user, positive, negative)
/// triples, plus L2 regularization. Deterministic given config.seed.
/// Throws DivergedTraining if any parameter becomes non-finite.
/// When loss_out is given it receives the mean per-triple loss of each epoch.
EmbeddingTable train_mf(const corpus::InteractionLog& train, const MfConfig& config,
                        std::vector<double>* loss_out = nullptr);

struct Scored {
    std::string item_id;
    double score = 0.0;
};

/// Top-k co-click neighbors of an item. Pool restricts the candidates when
/// given; the query item itself is always excluded. Zero-score items are
/// kept only when a pool is explicitly supplied (a pool query must rank its
/// whole pool); without a pool only co-clicked items qualify. Ordering is
/// descending score, ties by ascending item id.
std::vector<Scored> topk_for_item(const CooccurrenceStats& stats, const std::string& item_id,
                                  int k, const ItemSet* pool = nullptr);

/// Same contract with embedding inner products as the score.
std::vector<Scored> topk_for_item(const EmbeddingTable& table, const std::string& item_id, int k,
                                  const ItemSet* pool = nullptr);

/// Top-k items for a user by embedding inner product, over pool (or every
/// item in the table) minus exclude. Throws UnknownKey for absent users.
std::vector<Scored> topk_for_user(const EmbeddingTable& table, const std::string& user_id, int k,
                                  const ItemSet* pool = nullptr, const ItemSet* exclude = nullptr);

/// topk_for_user generalized to an explicit query vector (used for the
/// cold-user fallback where the query is a mean of history item vectors).
std::vector<Scored> topk_for_vector(const EmbeddingTable& table, const std::vector<double>& query,
                                    int k, const ItemSet* pool = nullptr,
                                    const ItemSet* exclude = nullptr);

}  // namespace knowrank::cf
