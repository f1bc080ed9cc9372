#include "knowrank/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "knowrank/util/errors.hpp"
#include "knowrank/util/rng.hpp"
#include "knowrank/util/text.hpp"

namespace knowrank::corpus {

using json = nlohmann::json;
namespace util = knowrank::util;

LogFormat log_format_from_string(const std::string& name) {
    if (name == "ml1m") return LogFormat::ml1m;
    if (name == "amazon_jsonl") return LogFormat::amazon_jsonl;
    if (name == "retail_csv") return LogFormat::retail_csv;
    if (name == "generic_tsv") return LogFormat::generic_tsv;
    throw Error(ErrorCode::UnknownFormat, "unknown log format '" + name + "'");
}

std::string to_string(LogFormat format) {
    switch (format) {
        case LogFormat::ml1m: return "ml1m";
        case LogFormat::amazon_jsonl: return "amazon_jsonl";
        case LogFormat::retail_csv: return "retail_csv";
        case LogFormat::generic_tsv: return "generic_tsv";
    }
    return "?";
}

void InteractionLog::add(Interaction interaction) {
    finalized_ = false;
    events_.push_back(std::move(interaction));
}

void InteractionLog::finalize() {
    by_user_.clear();
    users_.clear();
    for (size_t i = 0; i < events_.size(); ++i) {
        by_user_[events_[i].user_id].push_back(i);
    }
    for (auto& [user, idx] : by_user_) {
        // Stable on input order: ties in timestamp keep file order.
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            return events_[a].timestamp < events_[b].timestamp;
        });
        users_.push_back(user);
    }
    std::sort(users_.begin(), users_.end());
    finalized_ = true;
}

bool InteractionLog::has_user(const std::string& user_id) const {
    return by_user_.count(user_id) > 0;
}

std::vector<const Interaction*> InteractionLog::user_events(const std::string& user_id) const {
    std::vector<const Interaction*> out;
    auto it = by_user_.find(user_id);
    if (it == by_user_.end()) return out;
    out.reserve(it->second.size());
    for (size_t idx : it->second) out.push_back(&events_[idx]);
    return out;
}

std::vector<std::string> InteractionLog::user_items(const std::string& user_id) const {
    std::vector<std::string> out;
    for (const auto* e : user_events(user_id)) out.push_back(e->item_id);
    return out;
}

std::vector<std::string> InteractionLog::item_ids() const {
    std::unordered_set<std::string> seen;
    std::vector<std::string> out;
    for (const auto& e : events_) {
        if (seen.insert(e.item_id).second) out.push_back(e.item_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::unordered_map<std::string, int64_t> InteractionLog::item_event_counts() const {
    std::unordered_map<std::string, int64_t> counts;
    for (const auto& e : events_) ++counts[e.item_id];
    return counts;
}

namespace {

std::optional<Interaction> parse_ml1m_line(const std::string& line) {
    auto parts = util::split_on(line, "::");
    if (parts.size() != 4) return std::nullopt;
    Interaction it;
    it.user_id = util::trim(parts[0]);
    it.item_id = util::trim(parts[1]);
    if (it.user_id.empty() || it.item_id.empty()) return std::nullopt;
    try {
        it.rating = std::stod(parts[2]);
        it.timestamp = std::stoll(parts[3]);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (it.timestamp < 0) return std::nullopt;
    return it;
}

std::optional<Interaction> parse_amazon_line(const std::string& line) {
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    if (!j.contains("reviewerID") || !j.contains("asin") || !j.contains("unixReviewTime")) {
        return std::nullopt;
    }
    Interaction it;
    try {
        it.user_id = j.at("reviewerID").get<std::string>();
        it.item_id = j.at("asin").get<std::string>();
        if (j.contains("overall")) it.rating = j.at("overall").get<double>();
        it.timestamp = j.at("unixReviewTime").get<int64_t>();
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (it.user_id.empty() || it.item_id.empty() || it.timestamp < 0) return std::nullopt;
    return it;
}

std::optional<Interaction> parse_generic_tsv_line(const std::string& line) {
    auto parts = util::split(line, '\t');
    if (parts.size() != 4) return std::nullopt;
    Interaction it;
    it.user_id = parts[0];
    it.item_id = parts[1];
    if (it.user_id.empty() || it.item_id.empty()) return std::nullopt;
    try {
        if (!util::trim(parts[2]).empty()) it.rating = std::stod(parts[2]);
        it.timestamp = std::stoll(parts[3]);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (it.timestamp < 0) return std::nullopt;
    return it;
}

// Online Retail columns:
// InvoiceNo,StockCode,Description,Quantity,InvoiceDate,UnitPrice,CustomerID,Country
struct RetailRow {
    bool malformed = false;
    bool skipped = false;
    Interaction interaction;
};

RetailRow parse_retail_line(const std::string& raw_line) {
    RetailRow row;
    std::string line = util::looks_like_utf8(raw_line) ? raw_line : util::latin1_to_utf8(raw_line);
    auto fields = util::split_csv(line);
    if (fields.size() < 7) {
        row.malformed = true;
        return row;
    }
    std::string customer = util::trim(fields[6]);
    std::string stock = util::trim(fields[1]);
    if (customer.empty() || stock.empty()) {
        row.skipped = true;
        return row;
    }
    long quantity = 0;
    try {
        quantity = std::stol(util::trim(fields[3]));
    } catch (const std::exception&) {
        row.malformed = true;
        return row;
    }
    if (quantity <= 0) {  // returns / cancellations are not clicks
        row.skipped = true;
        return row;
    }
    auto ts = util::parse_dmy_hm(util::trim(fields[4]));
    if (!ts) {
        row.malformed = true;
        return row;
    }
    row.interaction.user_id = customer;
    row.interaction.item_id = stock;
    row.interaction.timestamp = *ts;
    return row;
}

bool looks_like_retail_header(const std::string& line) {
    auto lower = util::to_lower(line);
    return lower.find("invoiceno") != std::string::npos &&
           lower.find("stockcode") != std::string::npos;
}

}  // namespace

InteractionLog parse_interactions(const std::string& source, LogFormat format,
                                  ParseReport* report) {
    if (format != LogFormat::retail_csv && !util::looks_like_utf8(source)) {
        throw Error(ErrorCode::MalformedInput, "source is not valid UTF-8");
    }

    InteractionLog log;
    ParseReport local;

    std::istringstream in(source);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (util::trim(line).empty()) continue;
        if (format == LogFormat::retail_csv && first && looks_like_retail_header(line)) {
            first = false;
            continue;
        }
        first = false;
        ++local.total_lines;

        std::optional<Interaction> parsed;
        switch (format) {
            case LogFormat::ml1m:
                parsed = parse_ml1m_line(line);
                break;
            case LogFormat::amazon_jsonl:
                parsed = parse_amazon_line(line);
                break;
            case LogFormat::generic_tsv:
                parsed = parse_generic_tsv_line(line);
                break;
            case LogFormat::retail_csv: {
                RetailRow row = parse_retail_line(line);
                if (row.malformed) {
                    ++local.malformed;
                } else if (row.skipped) {
                    ++local.skipped;
                } else {
                    log.add(std::move(row.interaction));
                }
                continue;
            }
        }
        if (parsed) {
            log.add(std::move(*parsed));
        } else {
            ++local.malformed;
        }
    }

    if (report) *report = local;
    if (local.total_lines > 0 &&
        static_cast<double>(local.malformed) > 0.01 * static_cast<double>(local.total_lines)) {
        throw Error(ErrorCode::MalformedInput,
                    std::to_string(local.malformed) + " of " + std::to_string(local.total_lines) +
                        " lines unparseable");
    }
    log.finalize();
    return log;
}

void ItemCatalog::put(const std::string& item_id, ItemRecord record) {
    records_[item_id] = std::move(record);
}

bool ItemCatalog::has(const std::string& item_id) const { return records_.count(item_id) > 0; }

const ItemRecord* ItemCatalog::find(const std::string& item_id) const {
    auto it = records_.find(item_id);
    return it == records_.end() ? nullptr : &it->second;
}

std::string ItemCatalog::title_or_id(const std::string& item_id) const {
    const ItemRecord* rec = find(item_id);
    if (rec && !rec->title.empty()) return rec->title;
    return item_id;
}

CatalogFormat catalog_format_from_string(const std::string& name) {
    if (name == "ml1m_movies" || name == "ml1m") return CatalogFormat::ml1m_movies;
    if (name == "amazon_meta_jsonl" || name == "amazon_jsonl") return CatalogFormat::amazon_meta_jsonl;
    if (name == "retail_csv") return CatalogFormat::retail_csv;
    if (name == "generic_tsv") return CatalogFormat::generic_tsv;
    throw Error(ErrorCode::UnknownFormat, "unknown catalog format '" + name + "'");
}

ItemCatalog parse_catalog(const std::string& source, CatalogFormat format) {
    ItemCatalog catalog;
    std::istringstream in(source);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (util::trim(line).empty()) continue;
        switch (format) {
            case CatalogFormat::ml1m_movies: {
                std::string utf8 = util::looks_like_utf8(line) ? line : util::latin1_to_utf8(line);
                auto parts = util::split_on(utf8, "::");
                if (parts.size() != 3) continue;
                ItemRecord rec;
                rec.title = util::trim(parts[1]);
                for (const auto& genre : util::split(parts[2], '|')) {
                    if (!genre.empty()) rec.attributes.emplace_back("genre", genre);
                }
                if (auto year = util::trailing_year(rec.title)) {
                    rec.attributes.emplace_back("Publish year", std::to_string(*year));
                }
                catalog.put(util::trim(parts[0]), std::move(rec));
                break;
            }
            case CatalogFormat::amazon_meta_jsonl: {
                json j = json::parse(line, nullptr, false);
                if (j.is_discarded() || !j.contains("asin")) continue;
                ItemRecord rec;
                if (j.contains("title") && j["title"].is_string())
                    rec.title = j["title"].get<std::string>();
                if (j.contains("brand") && j["brand"].is_string()) {
                    std::string brand = util::trim(j["brand"].get<std::string>());
                    if (!brand.empty()) rec.attributes.emplace_back("brand", brand);
                }
                // Amazon metadata nests categories as a list of paths.
                if (j.contains("categories") && j["categories"].is_array()) {
                    for (const auto& path : j["categories"]) {
                        if (!path.is_array()) continue;
                        for (const auto& cat : path) {
                            if (cat.is_string())
                                rec.attributes.emplace_back("category", cat.get<std::string>());
                        }
                    }
                }
                std::string asin = j["asin"].get<std::string>();
                if (rec.title.empty()) rec.title = asin;
                catalog.put(asin, std::move(rec));
                break;
            }
            case CatalogFormat::retail_csv: {
                if (first && looks_like_retail_header(line)) break;
                std::string utf8 = util::looks_like_utf8(line) ? line : util::latin1_to_utf8(line);
                auto fields = util::split_csv(utf8);
                if (fields.size() < 7) break;
                std::string stock = util::trim(fields[1]);
                std::string title = util::trim(fields[2]);
                if (stock.empty() || title.empty()) break;
                if (!catalog.has(stock)) catalog.put(stock, ItemRecord{title, {}});
                break;
            }
            case CatalogFormat::generic_tsv: {
                auto parts = util::split(line, '\t');
                if (parts.size() < 2) continue;
                ItemRecord rec;
                rec.title = parts[1];
                if (parts.size() >= 3 && !parts[2].empty()) {
                    for (const auto& kv : util::split(parts[2], ';')) {
                        auto eq = kv.find('=');
                        if (eq != std::string::npos) {
                            rec.attributes.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
                        }
                    }
                }
                catalog.put(parts[0], std::move(rec));
                break;
            }
        }
        first = false;
    }
    return catalog;
}

InteractionLog threshold_ratings(const InteractionLog& log, double min_rating) {
    if (min_rating <= 0) return log;
    InteractionLog out;
    for (const auto& e : log.events()) {
        if (e.rating && *e.rating < min_rating) continue;
        out.add(e);
    }
    out.finalize();
    return out;
}

InteractionLog filter_core(const InteractionLog& log, int min_count) {
    std::vector<Interaction> kept(log.events().begin(), log.events().end());
    bool changed = true;
    while (changed) {
        changed = false;
        std::unordered_map<std::string, int> user_counts;
        std::unordered_map<std::string, int> item_counts;
        for (const auto& e : kept) {
            ++user_counts[e.user_id];
            ++item_counts[e.item_id];
        }
        std::vector<Interaction> next;
        next.reserve(kept.size());
        for (auto& e : kept) {
            if (user_counts[e.user_id] < min_count || item_counts[e.item_id] < min_count) {
                changed = true;
            } else {
                next.push_back(std::move(e));
            }
        }
        kept = std::move(next);
    }
    if (kept.empty()) throw Error(ErrorCode::EmptyResult, "no events survive core filtering");
    InteractionLog out;
    for (auto& e : kept) out.add(std::move(e));
    out.finalize();
    return out;
}

SplitCorpus split_leave_one_out(const InteractionLog& log) {
    SplitCorpus split;
    for (const auto& user : log.users()) {
        auto events = log.user_events(user);
        if (events.size() >= 3) {
            for (size_t i = 0; i + 2 < events.size(); ++i) split.train.add(*events[i]);
            split.valid.emplace(user, *events[events.size() - 2]);
            split.test.emplace(user, *events[events.size() - 1]);
        } else {
            for (const auto* e : events) split.train.add(*e);
        }
    }
    split.train.finalize();
    return split;
}

SamplingStrategy sampling_strategy_from_string(const std::string& name) {
    if (name == "random") return SamplingStrategy::random;
    if (name == "popularity") return SamplingStrategy::popularity;
    throw Error(ErrorCode::ConfigError, "unknown sampling strategy '" + name + "'");
}

std::string to_string(SamplingStrategy strategy) {
    return strategy == SamplingStrategy::random ? "random" : "popularity";
}

RankingTask sample_candidates(const std::string& user_id, const Interaction& test_event,
                              const InteractionLog& train,
                              const std::optional<Interaction>& valid_event,
                              SamplingStrategy strategy, int n_neg, uint64_t seed,
                              int max_history) {
    std::unordered_set<std::string> owned(
        {test_event.item_id});  // everything the user ever touched
    if (valid_event) owned.insert(valid_event->item_id);
    auto train_items = train.user_items(user_id);
    for (const auto& item : train_items) owned.insert(item);

    auto counts = train.item_event_counts();
    std::vector<std::string> pool;
    for (const auto& item : train.item_ids()) {
        if (!owned.count(item)) pool.push_back(item);
    }
    if (static_cast<int>(pool.size()) < n_neg) {
        throw Error(ErrorCode::InsufficientItems,
                    "eligible pool " + std::to_string(pool.size()) + " < " + std::to_string(n_neg));
    }

    util::Rng rng(seed);
    std::vector<std::string> negatives;
    negatives.reserve(n_neg);
    if (strategy == SamplingStrategy::random) {
        // Partial Fisher-Yates over the sorted pool.
        for (int k = 0; k < n_neg; ++k) {
            size_t j = k + static_cast<size_t>(rng.below(pool.size() - k));
            std::swap(pool[k], pool[j]);
            negatives.push_back(pool[k]);
        }
    } else {
        // Weighted draws without replacement; weights are integer click
        // counts, so the draw is exact integer arithmetic.
        std::vector<std::pair<std::string, int64_t>> weighted;
        weighted.reserve(pool.size());
        for (const auto& item : pool) {
            int64_t w = counts.count(item) ? counts.at(item) : 0;
            if (w > 0) weighted.emplace_back(item, w);
        }
        if (static_cast<int>(weighted.size()) < n_neg) {
            throw Error(ErrorCode::InsufficientItems, "weighted pool too small");
        }
        for (int k = 0; k < n_neg; ++k) {
            int64_t total = 0;
            for (const auto& [item, w] : weighted) total += w;
            int64_t draw = static_cast<int64_t>(rng.below(static_cast<uint64_t>(total)));
            size_t pick = 0;
            int64_t acc = 0;
            for (size_t i = 0; i < weighted.size(); ++i) {
                acc += weighted[i].second;
                if (draw < acc) {
                    pick = i;
                    break;
                }
            }
            negatives.push_back(weighted[pick].first);
            weighted.erase(weighted.begin() + pick);
        }
    }

    RankingTask task;
    task.user_id = user_id;
    task.strategy = strategy;
    task.candidates = negatives;
    task.candidates.push_back(test_event.item_id);
    rng.shuffle(task.candidates);
    for (size_t i = 0; i < task.candidates.size(); ++i) {
        if (task.candidates[i] == test_event.item_id) task.truth_index = static_cast<int>(i);
    }

    // History: last max_history train items, with the truth item (possible
    // in repeat-purchase data) removed so it never leaks into the prompt.
    std::vector<std::string> history;
    for (const auto& item : train_items) {
        if (item != test_event.item_id) history.push_back(item);
    }
    if (max_history > 0 && history.size() > static_cast<size_t>(max_history)) {
        history.erase(history.begin(), history.end() - max_history);
    }
    task.history = std::move(history);
    return task;
}

std::string to_generic_tsv(const InteractionLog& log) {
    std::ostringstream out;
    for (const auto& e : log.events()) {
        out << e.user_id << '\t' << e.item_id << '\t';
        if (e.rating) {
            std::ostringstream r;
            r << *e.rating;
            out << r.str();
        }
        out << '\t' << e.timestamp << '\n';
    }
    return out.str();
}

std::string split_manifest_jsonl(const SplitCorpus& split) {
    std::ostringstream out;
    auto emit = [&](const std::string& user, const std::string& item, const char* role) {
        json j{{"user", user}, {"item", item}, {"role", role}};
        out << j.dump() << '\n';
    };
    for (const auto& e : split.train.events()) emit(e.user_id, e.item_id, "train");
    for (const auto& [user, e] : split.valid) emit(user, e.item_id, "valid");
    for (const auto& [user, e] : split.test) emit(user, e.item_id, "test");
    return out.str();
}

std::string tasks_to_jsonl(const std::vector<RankingTask>& tasks) {
    std::ostringstream out;
    for (const auto& t : tasks) {
        json j{{"user", t.user_id},
               {"history", t.history},
               {"candidates", t.candidates},
               {"truth_index", t.truth_index},
               {"strategy", to_string(t.strategy)}};
        out << j.dump() << '\n';
    }
    return out.str();
}

std::vector<RankingTask> tasks_from_jsonl(const std::string& text) {
    std::vector<RankingTask> tasks;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        json j = json::parse(line);
        RankingTask t;
        t.user_id = j.at("user").get<std::string>();
        t.history = j.at("history").get<std::vector<std::string>>();
        t.candidates = j.at("candidates").get<std::vector<std::string>>();
        t.truth_index = j.at("truth_index").get<int>();
        t.strategy = sampling_strategy_from_string(j.at("strategy").get<std::string>());
        tasks.push_back(std::move(t));
    }
    return tasks;
}

std::string catalog_to_tsv(const ItemCatalog& catalog) {
    std::ostringstream out;
    for (const auto& [id, rec] : catalog.records()) {
        out << id << '\t' << rec.title << '\t';
        std::vector<std::string> kvs;
        for (const auto& [name, value] : rec.attributes) kvs.push_back(name + "=" + value);
        out << util::join(kvs, ";") << '\n';
    }
    return out.str();
}

ItemCatalog catalog_from_tsv(const std::string& text) {
    return parse_catalog(text, CatalogFormat::generic_tsv);
}

}  // namespace knowrank::corpus
