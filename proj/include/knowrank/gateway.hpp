#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "knowrank/corpus.hpp"
#include "knowrank/knowledge.hpp"

namespace knowrank::gateway {

struct CompletionConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    double temperature = 0.0;
    int max_tokens = 1024;
    int timeout_ms = 60000;
    int max_attempts = 5;
    int backoff_ms = 1000;  // doubles per retry
    int concurrency = 4;
    std::string api_key_env = "OPENAI_API_KEY";
};

enum class Backend { http, replay, mock_oracle };

Backend backend_from_name(const std::string& name);  // throws ConfigError
std::string backend_name(Backend backend);

/// Minimal HTTP seam so tests can observe traffic without a server.
struct HttpRequest {
    std::string url;
    std::string api_key;  // sent as a bearer token, never logged
    std::string body;
    int timeout_ms = 0;
};

struct HttpResponse {
    int status = 0;       // 0 means the transport itself failed
    std::string body;
    std::string error;    // transport failure description
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::unique_ptr<Transport> make_http_transport();

/// SHA-256 over (model, temperature, prompt text) — the replay cache key.
std::string cache_key(const std::string& model, double temperature, const std::string& prompt);

class Gateway {
public:
    /// transport may be null for replay/mock use; http then lazily builds
    /// the real client.
    Gateway(CompletionConfig config, std::string cache_dir, Transport* transport = nullptr);

    /// One completion. http POSTs with retry on 429/5xx and caches the
    /// response; replay serves only from the cache (CacheMiss otherwise);
    /// mock_oracle synthesizes a ranking from the task's knowledge pack and
    /// also caches it. task/pack/catalog are required for mock_oracle.
    std::string complete(const std::string& prompt_text, Backend backend,
                         const corpus::RankingTask* task = nullptr,
                         const knowledge::KnowledgePack* pack = nullptr,
                         const corpus::ItemCatalog* catalog = nullptr);

    struct ManyResult {
        std::vector<std::string> texts;    // empty string where failed
        std::vector<std::string> errors;   // empty string where succeeded
        size_t failures = 0;
    };

    /// Runs completions with at most config.concurrency in flight.
    /// Per-prompt errors are captured, not thrown.
    ManyResult complete_many(const std::vector<std::string>& prompts, Backend backend,
                             const std::vector<corpus::RankingTask>* tasks = nullptr,
                             const std::vector<knowledge::KnowledgePack>* packs = nullptr,
                             const corpus::ItemCatalog* catalog = nullptr);

    const CompletionConfig& config() const { return config_; }

private:
    std::string complete_http(const std::string& prompt_text);
    std::string cache_path(const std::string& key) const;
    void write_cache(const std::string& key, const std::string& prompt_sha,
                     const std::string& response_text);

    CompletionConfig config_;
    std::string cache_dir_;
    Transport* transport_;
    std::unique_ptr<Transport> owned_transport_;
};

/// Deterministic stand-in for the LLM: emits a JSON array of candidate
/// titles ordered by the pack's knowledge — the U2I order for his_cand_u2i,
/// a max-anchor-score sort for his_cand_i2i, original order otherwise.
std::string mock_oracle_rank(const corpus::RankingTask& task, const knowledge::KnowledgePack& pack,
                             const corpus::ItemCatalog& catalog);

struct ParseReport {
    int matched = 0;       // candidates hit by exact normalized title
    int fuzzy = 0;         // candidates hit by token-overlap match
    int missing = 0;       // candidates never mentioned, appended at the tail
    int hallucinated = 0;  // response strings matching no candidate, dropped
    bool array_found = true;
};

struct RankedList {
    std::vector<int> order;  // permutation of candidate indices
    ParseReport parse_report;
};

/// Extracts the first JSON array of strings from raw text (code fences and
/// prose tolerated) and resolves it to a total permutation of the
/// candidates. Unmentioned candidates are appended in original order; with
/// no array at all the original order is returned and flagged.
RankedList parse_ranking(const std::string& raw, const std::vector<std::string>& candidate_titles);

std::string ranked_to_jsonl(const std::vector<RankedList>& lists);
std::vector<RankedList> ranked_from_jsonl(const std::string& text);

}  // namespace knowrank::gateway
