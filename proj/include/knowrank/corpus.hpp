#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace knowrank::corpus {

struct Interaction {
    std::string user_id;
    std::string item_id;
    std::optional<double> rating;  // dataset units, e.g. 1-5 stars
    int64_t timestamp = 0;
};

enum class LogFormat { ml1m, amazon_jsonl, retail_csv, generic_tsv };

LogFormat log_format_from_string(const std::string& name);
std::string to_string(LogFormat format);

/// Interaction events plus a per-user chronological index. The per-user
/// lists are sorted by timestamp with ties broken by input order, so a
/// rebuilt log over the same events is always identical.
class InteractionLog {
public:
    void add(Interaction interaction);
    void finalize();  // sorts per-user lists; call once after the last add

    const std::vector<Interaction>& events() const { return events_; }
    size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

    /// Users in sorted order (deterministic iteration).
    const std::vector<std::string>& users() const { return users_; }

    bool has_user(const std::string& user_id) const;

    /// The user's events in chronological order.
    std::vector<const Interaction*> user_events(const std::string& user_id) const;

    /// The user's item sequence in chronological order (with repeats).
    std::vector<std::string> user_items(const std::string& user_id) const;

    /// Distinct items, sorted.
    std::vector<std::string> item_ids() const;

    /// item -> number of events (click frequency).
    std::unordered_map<std::string, int64_t> item_event_counts() const;

private:
    std::vector<Interaction> events_;
    std::vector<std::string> users_;
    std::unordered_map<std::string, std::vector<size_t>> by_user_;
    bool finalized_ = false;
};

struct ParseReport {
    size_t total_lines = 0;  // non-empty data lines considered
    size_t malformed = 0;    // lines that failed to parse
    size_t skipped = 0;      // parseable but unusable (e.g. blank customer id)
};

/// Parses raw dataset bytes into an InteractionLog.
///
/// Formats: ml1m ("user::item::rating::ts"), amazon_jsonl (one review JSON
/// object per line with reviewerID/asin/overall/unixReviewTime), retail_csv
/// (Online Retail export; InvoiceDate is "%d/%m/%Y %H:%M", CustomerID is the
/// user, StockCode the item; rows with a blank CustomerID or non-positive
/// Quantity are skipped, not malformed), and generic_tsv
/// ("user\titem\trating\tts" with an empty rating field meaning absent).
///
/// Malformed lines are counted and reported; parsing fails with
/// MalformedInput only when they exceed 1% of data lines.
InteractionLog parse_interactions(const std::string& source, LogFormat format,
                                  ParseReport* report = nullptr);

/// Catalog record: display title plus an ordered list of (name, value)
/// attribute pairs. Multi-valued attributes repeat the name, e.g.
/// ("genre","Animation"), ("genre","Comedy").
struct ItemRecord {
    std::string title;
    std::vector<std::pair<std::string, std::string>> attributes;
};

class ItemCatalog {
public:
    void put(const std::string& item_id, ItemRecord record);
    bool has(const std::string& item_id) const;
    const ItemRecord* find(const std::string& item_id) const;

    /// Display title; falls back to the raw item id for unknown items.
    std::string title_or_id(const std::string& item_id) const;

    size_t size() const { return records_.size(); }
    const std::map<std::string, ItemRecord>& records() const { return records_; }

private:
    std::map<std::string, ItemRecord> records_;
};

enum class CatalogFormat { ml1m_movies, amazon_meta_jsonl, retail_csv, generic_tsv };

CatalogFormat catalog_format_from_string(const std::string& name);

/// Parses catalog metadata.
///
/// ml1m_movies: "id::Title (Year)::Genre|Genre" (Latin-1 tolerated); yields
/// one ("genre", g) pair per genre plus ("Publish year", year) when the
/// title carries a year. amazon_meta_jsonl: asin/title/brand/categories.
/// retail_csv: titles from the Description column of the transaction file.
/// generic_tsv: "item\ttitle\tname=value;name=value".
ItemCatalog parse_catalog(const std::string& source, CatalogFormat format);

/// Drops each interaction whose rating is present and below min_rating.
/// Unrated events are kept. A no-op when min_rating <= 0.
InteractionLog threshold_ratings(const InteractionLog& log, double min_rating);

/// Iteratively removes users and items with fewer than min_count events
/// until a fixed point. Throws EmptyResult when nothing survives.
InteractionLog filter_core(const InteractionLog& log, int min_count);

struct SplitCorpus {
    InteractionLog train;
    std::map<std::string, Interaction> valid;  // user -> held-out event
    std::map<std::string, Interaction> test;
};

/// Leave-one-out: for users with >= 3 events the last goes to test and the
/// second-to-last to valid; shorter users contribute everything to train.
SplitCorpus split_leave_one_out(const InteractionLog& log);

enum class SamplingStrategy { random, popularity };

SamplingStrategy sampling_strategy_from_string(const std::string& name);
std::string to_string(SamplingStrategy strategy);

struct RankingTask {
    std::string user_id;
    std::vector<std::string> history;     // chronological, truncated
    std::vector<std::string> candidates;  // exactly n_neg + 1 items
    int truth_index = -1;                 // position of the held-out item
    SamplingStrategy strategy = SamplingStrategy::random;

    const std::string& truth_item() const { return candidates.at(truth_index); }
};

/// Builds one ranking task for a held-out test event. Negatives are drawn
/// from the filtered item set minus every item the user interacted with
/// (train, valid and test). The random strategy draws uniformly without
/// replacement; popularity draws proportionally to global click frequency.
/// Candidate order is a seeded shuffle of {truth} + negatives.
RankingTask sample_candidates(const std::string& user_id, const Interaction& test_event,
                              const InteractionLog& train,
                              const std::optional<Interaction>& valid_event,
                              SamplingStrategy strategy, int n_neg, uint64_t seed,
                              int max_history = 50);

// --- persistence ---------------------------------------------------------

/// Normalized interchange log: "user\titem\trating\tts" per event.
std::string to_generic_tsv(const InteractionLog& log);

/// Split manifest as JSON-lines {user, item, role}; role in train/valid/test.
std::string split_manifest_jsonl(const SplitCorpus& split);

std::string tasks_to_jsonl(const std::vector<RankingTask>& tasks);
std::vector<RankingTask> tasks_from_jsonl(const std::string& text);

std::string catalog_to_tsv(const ItemCatalog& catalog);
ItemCatalog catalog_from_tsv(const std::string& text);

}  // namespace knowrank::corpus
