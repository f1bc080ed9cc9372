#include "knowrank/cf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "knowrank/util/errors.hpp"
#include "knowrank/util/io.hpp"
#include "knowrank/util/rng.hpp"
#include "knowrank/util/text.hpp"

namespace knowrank::cf {

namespace util = knowrank::util;

int CooccurrenceStats::index_of(const std::string& item_id) const {
    auto it = index_.find(item_id);
    return it == index_.end() ? -1 : it->second;
}

uint64_t CooccurrenceStats::pair_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
}

bool CooccurrenceStats::has_item(const std::string& item_id) const {
    return index_of(item_id) >= 0;
}

int64_t CooccurrenceStats::item_freq(const std::string& item_id) const {
    int idx = index_of(item_id);
    return idx < 0 ? 0 : freq_[idx];
}

int64_t CooccurrenceStats::pair_count(const std::string& a, const std::string& b) const {
    int ia = index_of(a), ib = index_of(b);
    if (ia < 0 || ib < 0 || ia == ib) return 0;
    auto it = pair_counts_.find(pair_key(ia, ib));
    return it == pair_counts_.end() ? 0 : it->second;
}

std::vector<std::tuple<std::string, std::string, int64_t>> CooccurrenceStats::pairs() const {
    std::vector<std::tuple<std::string, std::string, int64_t>> out;
    out.reserve(pair_counts_.size());
    for (const auto& [key, count] : pair_counts_) {
        const std::string& a = items_[key >> 32];
        const std::string& b = items_[key & 0xffffffffu];
        if (a < b) {
            out.emplace_back(a, b, count);
        } else {
            out.emplace_back(b, a, count);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string CooccurrenceStats::pairs_tsv() const {
    std::ostringstream out;
    for (const auto& [a, b, count] : pairs()) {
        out << a << '\t' << b << '\t' << count << '\n';
    }
    return out.str();
}

std::string CooccurrenceStats::freq_tsv() const {
    std::ostringstream out;
    for (const auto& item : items_) {
        out << item << '\t' << item_freq(item) << '\n';
    }
    return out.str();
}

CooccurrenceStats CooccurrenceStats::from_tsv(const std::string& pairs_tsv,
                                              const std::string& freq_tsv) {
    CooccurrenceStats stats;
    std::istringstream freq_in(freq_tsv);
    std::string line;
    while (std::getline(freq_in, line)) {
        if (util::trim(line).empty()) continue;
        auto parts = util::split(line, '\t');
        if (parts.size() != 2) throw Error(ErrorCode::MalformedInput, "bad freq line: " + line);
        stats.index_.emplace(parts[0], static_cast<int>(stats.items_.size()));
        stats.items_.push_back(parts[0]);
        stats.freq_.push_back(std::stoll(parts[1]));
    }
    std::istringstream pair_in(pairs_tsv);
    while (std::getline(pair_in, line)) {
        if (util::trim(line).empty()) continue;
        auto parts = util::split(line, '\t');
        if (parts.size() != 3) throw Error(ErrorCode::MalformedInput, "bad pair line: " + line);
        int ia = stats.index_of(parts[0]);
        int ib = stats.index_of(parts[1]);
        if (ia < 0 || ib < 0) throw Error(ErrorCode::UnknownItem, "pair references unknown item");
        stats.pair_counts_[pair_key(ia, ib)] = std::stoll(parts[2]);
    }
    return stats;
}

CooccurrenceStats count_cooccurrence(const corpus::InteractionLog& train) {
    if (train.empty()) throw Error(ErrorCode::EmptyResult, "train log is empty");
    CooccurrenceStats stats;
    for (const auto& item : train.item_ids()) {
        stats.index_.emplace(item, static_cast<int>(stats.items_.size()));
        stats.items_.push_back(item);
    }
    stats.freq_.assign(stats.items_.size(), 0);

    for (const auto& user : train.users()) {
        // Distinct items per user: repeats count once.
        std::vector<int> clicked;
        {
            std::unordered_set<int> seen;
            for (const auto& item : train.user_items(user)) {
                int idx = stats.index_.at(item);
                if (seen.insert(idx).second) clicked.push_back(idx);
            }
        }
        std::sort(clicked.begin(), clicked.end());
        for (size_t a = 0; a < clicked.size(); ++a) {
            ++stats.freq_[clicked[a]];
            for (size_t b = a + 1; b < clicked.size(); ++b) {
                ++stats.pair_counts_[CooccurrenceStats::pair_key(clicked[a], clicked[b])];
            }
        }
    }
    return stats;
}

double item_relevance(const CooccurrenceStats& stats, const std::string& i, const std::string& j) {
    if (i == j) throw Error(ErrorCode::SelfPair, "relevance of an item with itself is undefined");
    if (!stats.has_item(i)) throw Error(ErrorCode::UnknownItem, i);
    if (!stats.has_item(j)) throw Error(ErrorCode::UnknownItem, j);
    int64_t co = stats.pair_count(i, j);
    if (co == 0) return 0.0;
    return static_cast<double>(co) /
           std::sqrt(static_cast<double>(stats.item_freq(i)) *
                     static_cast<double>(stats.item_freq(j)));
}

void EmbeddingTable::set_user(const std::string& user_id, std::vector<double> vec) {
    users_[user_id] = std::move(vec);
}

void EmbeddingTable::set_item(const std::string& item_id, std::vector<double> vec) {
    items_[item_id] = std::move(vec);
}

const std::vector<double>& EmbeddingTable::user_vec(const std::string& user_id) const {
    auto it = users_.find(user_id);
    if (it == users_.end()) throw Error(ErrorCode::UnknownKey, "user " + user_id);
    return it->second;
}

const std::vector<double>& EmbeddingTable::item_vec(const std::string& item_id) const {
    auto it = items_.find(item_id);
    if (it == items_.end()) throw Error(ErrorCode::UnknownKey, "item " + item_id);
    return it->second;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double EmbeddingTable::user_item(const std::string& user_id, const std::string& item_id) const {
    return dot(user_vec(user_id), item_vec(item_id));
}

double EmbeddingTable::item_item(const std::string& a, const std::string& b) const {
    return dot(item_vec(a), item_vec(b));
}

std::vector<std::string> EmbeddingTable::user_ids() const {
    std::vector<std::string> out;
    out.reserve(users_.size());
    for (const auto& [id, _] : users_) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> EmbeddingTable::item_ids() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& [id, _] : items_) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

std::string EmbeddingTable::serialize(bool user_side) const {
    std::ostringstream out;
    out << "dim=" << dim_ << " kind=" << (user_side ? "user" : "item") << '\n';
    for (const auto& id : user_side ? user_ids() : item_ids()) {
        const auto& vec = user_side ? users_.at(id) : items_.at(id);
        out << id;
        for (double v : vec) out << ' ' << util::format_double(v);
        out << '\n';
    }
    return out.str();
}

namespace {

void parse_table_side(const std::string& text, bool expect_user, EmbeddingTable& table, int& dim) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedInput, "empty table");
    int d = 0;
    char kind[16] = {0};
    if (std::sscanf(line.c_str(), "dim=%d kind=%15s", &d, kind) != 2 || d <= 0) {
        throw Error(ErrorCode::MalformedInput, "bad table header: " + line);
    }
    std::string kind_str(kind);
    if (kind_str != (expect_user ? "user" : "item")) {
        throw Error(ErrorCode::MalformedInput, "table kind mismatch: " + kind_str);
    }
    if (dim == 0) dim = d;
    if (d != dim) throw Error(ErrorCode::MalformedInput, "dim mismatch between tables");
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        std::istringstream row(line);
        std::string id;
        row >> id;
        std::vector<double> vec(d);
        for (int i = 0; i < d; ++i) {
            if (!(row >> vec[i])) throw Error(ErrorCode::MalformedInput, "short row for " + id);
        }
        if (expect_user) {
            table.set_user(id, std::move(vec));
        } else {
            table.set_item(id, std::move(vec));
        }
    }
}

}  // namespace

EmbeddingTable EmbeddingTable::deserialize(const std::string& user_table,
                                           const std::string& item_table, Provenance provenance) {
    EmbeddingTable table;
    table.provenance_ = provenance;
    int dim = 0;
    parse_table_side(user_table, true, table, dim);
    parse_table_side(item_table, false, table, dim);
    table.dim_ = dim;
    if (!table.all_finite()) throw Error(ErrorCode::MalformedInput, "non-finite embedding value");
    return table;
}

bool EmbeddingTable::all_finite() const {
    auto check = [](const std::unordered_map<std::string, std::vector<double>>& side) {
        for (const auto& [_, vec] : side) {
            for (double v : vec) {
                if (!std::isfinite(v)) return false;
            }
        }
        return true;
    };
    return check(users_) && check(items_);
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

EmbeddingTable train_mf(const corpus::InteractionLog& train, const MfConfig& config,
                        std::vector<double>* loss_out) {
    if (config.dim < 1) throw Error(ErrorCode::ConfigError, "dim must be >= 1");

    const auto users = train.users();
    const auto items = train.item_ids();
    std::unordered_map<std::string, int> user_index, item_index;
    for (size_t i = 0; i < users.size(); ++i) user_index[users[i]] = static_cast<int>(i);
    for (size_t i = 0; i < items.size(); ++i) item_index[items[i]] = static_cast<int>(i);

    // Distinct (user, item) positives, deterministic order.
    std::vector<std::pair<int, int>> positives;
    std::vector<std::vector<int>> user_item_sets(users.size());
    for (size_t u = 0; u < users.size(); ++u) {
        std::unordered_set<int> seen;
        for (const auto& item : train.user_items(users[u])) {
            int idx = item_index.at(item);
            if (seen.insert(idx).second) {
                positives.emplace_back(static_cast<int>(u), idx);
                user_item_sets[u].push_back(idx);
            }
        }
        std::sort(user_item_sets[u].begin(), user_item_sets[u].end());
    }

    util::Rng rng(config.seed);
    const int d = config.dim;
    const double init_scale = 0.1;
    std::vector<double> user_vecs(users.size() * d);
    std::vector<double> item_vecs(items.size() * d);
    for (auto& v : user_vecs) v = rng.uniform(-init_scale, init_scale);
    for (auto& v : item_vecs) v = rng.uniform(-init_scale, init_scale);

    auto user_owns = [&](int u, int i) {
        const auto& owned = user_item_sets[u];
        return std::binary_search(owned.begin(), owned.end(), i);
    };

    std::vector<size_t> order(positives.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    if (loss_out) loss_out->clear();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        size_t triples = 0;
        for (size_t pos : order) {
            auto [u, i] = positives[pos];
            for (int n = 0; n < config.neg_per_pos; ++n) {
                // Rejection-sample a negative outside the user's item set.
                int j = -1;
                for (int attempt = 0; attempt < 100; ++attempt) {
                    int cand = static_cast<int>(rng.below(items.size()));
                    if (!user_owns(u, cand)) {
                        j = cand;
                        break;
                    }
                }
                if (j < 0) continue;

                double* vu = &user_vecs[static_cast<size_t>(u) * d];
                double* vi = &item_vecs[static_cast<size_t>(i) * d];
                double* vj = &item_vecs[static_cast<size_t>(j) * d];
                double x = 0.0;
                for (int f = 0; f < d; ++f) x += vu[f] * (vi[f] - vj[f]);
                double e = 1.0 - sigmoid(x);
                epoch_loss += -std::log(std::max(sigmoid(x), 1e-300));
                ++triples;
                for (int f = 0; f < d; ++f) {
                    double gu = e * (vi[f] - vj[f]) - config.reg * vu[f];
                    double gi = e * vu[f] - config.reg * vi[f];
                    double gj = -e * vu[f] - config.reg * vj[f];
                    vu[f] += config.lr * gu;
                    vi[f] += config.lr * gi;
                    vj[f] += config.lr * gj;
                }
            }
        }
        if (loss_out) loss_out->push_back(triples ? epoch_loss / triples : 0.0);
    }

    for (double v : user_vecs) {
        if (!std::isfinite(v)) throw Error(ErrorCode::DivergedTraining, "user vector non-finite");
    }
    for (double v : item_vecs) {
        if (!std::isfinite(v)) throw Error(ErrorCode::DivergedTraining, "item vector non-finite");
    }

    EmbeddingTable table(d, Provenance::trained_mf);
    for (size_t u = 0; u < users.size(); ++u) {
        table.set_user(users[u],
                       std::vector<double>(user_vecs.begin() + u * d, user_vecs.begin() + (u + 1) * d));
    }
    for (size_t i = 0; i < items.size(); ++i) {
        table.set_item(items[i],
                       std::vector<double>(item_vecs.begin() + i * d, item_vecs.begin() + (i + 1) * d));
    }
    return table;
}

namespace {

/// Shared top-k selection: stable deterministic ordering by (score desc, id asc).
std::vector<Scored> take_topk(std::vector<Scored> scored, int k) {
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.item_id < b.item_id;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(k);
    return scored;
}

}  // namespace

std::vector<Scored> topk_for_item(const CooccurrenceStats& stats, const std::string& item_id,
                                  int k, const ItemSet* pool) {
    if (k < 1) throw Error(ErrorCode::ConfigError, "k must be >= 1");
    if (!stats.has_item(item_id)) throw Error(ErrorCode::UnknownItem, item_id);
    std::vector<Scored> scored;
    if (pool) {
        for (const auto& other : stats.items()) {
            if (other == item_id || !pool->count(other)) continue;
            scored.push_back({other, item_relevance(stats, item_id, other)});
        }
    } else {
        for (const auto& other : stats.items()) {
            if (other == item_id) continue;
            double rel = item_relevance(stats, item_id, other);
            if (rel > 0.0) scored.push_back({other, rel});
        }
    }
    return take_topk(std::move(scored), k);
}

std::vector<Scored> topk_for_item(const EmbeddingTable& table, const std::string& item_id, int k,
                                  const ItemSet* pool) {
    if (k < 1) throw Error(ErrorCode::ConfigError, "k must be >= 1");
    const auto& query = table.item_vec(item_id);  // throws UnknownKey for absent items
    std::vector<Scored> scored;
    for (const auto& other : table.item_ids()) {
        if (other == item_id) continue;
        if (pool && !pool->count(other)) continue;
        scored.push_back({other, dot(query, table.item_vec(other))});
    }
    return take_topk(std::move(scored), k);
}

std::vector<Scored> topk_for_vector(const EmbeddingTable& table, const std::vector<double>& query,
                                    int k, const ItemSet* pool, const ItemSet* exclude) {
    if (k < 1) throw Error(ErrorCode::ConfigError, "k must be >= 1");
    std::vector<Scored> scored;
    for (const auto& item : table.item_ids()) {
        if (pool && !pool->count(item)) continue;
        if (exclude && exclude->count(item)) continue;
        scored.push_back({item, dot(query, table.item_vec(item))});
    }
    return take_topk(std::move(scored), k);
}

std::vector<Scored> topk_for_user(const EmbeddingTable& table, const std::string& user_id, int k,
                                  const ItemSet* pool, const ItemSet* exclude) {
    return topk_for_vector(table, table.user_vec(user_id), k, pool, exclude);
}

}  // namespace knowrank::cf
