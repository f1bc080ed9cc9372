#include "knowrank/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "knowrank/util/errors.hpp"
#include "knowrank/util/io.hpp"
#include "knowrank/util/sha256.hpp"
#include "knowrank/util/text.hpp"

namespace knowrank::gateway {


Backend backend_from_name(const std::string& name) {
    if (name == "http") return Backend::http;
    if (name == "replay") return Backend::replay;
    if (name == "mock" || name == "mock_oracle") return Backend::mock_oracle;
    throw Error(ErrorCode::ConfigError, "unknown backend: " + name);
}

std::string backend_name(Backend backend) {
    switch (backend) {
        case Backend::http: return "http";
        case Backend::replay: return "replay";
        case Backend::mock_oracle: return "mock_oracle";
    }
    return "http";
}

// ---------------------------------------------------------------------------
// HTTP transport

namespace {

class HttplibTransport : public Transport {
public:
    HttpResponse post(const HttpRequest& request) override {
        auto split = split_url(request.url);
        httplib::Client client(split.first);
        client.set_connection_timeout(request.timeout_ms / 1000,
                                      (request.timeout_ms % 1000) * 1000);
        client.set_read_timeout(request.timeout_ms / 1000, (request.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!request.api_key.empty())
            headers.emplace("Authorization", "Bearer " + request.api_key);
        auto result = client.Post(split.second, headers, request.body, "application/json");
        HttpResponse response;
        if (!result) {
            response.error = httplib::to_string(result.error());
            return response;
        }
        response.status = result->status;
        response.body = result->body;
        return response;
    }

private:
    // "https://host[:port]/path" -> (scheme://host[:port], /path)
    static std::pair<std::string, std::string> split_url(const std::string& url) {
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw Error(ErrorCode::ConfigError, "endpoint URL needs a scheme: " + url);
        auto path_start = url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) return {url, "/"};
        return {url.substr(0, path_start), url.substr(path_start)};
    }
};

}  // namespace

std::unique_ptr<Transport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

// ---------------------------------------------------------------------------
// Gateway

std::string cache_key(const std::string& model, double temperature, const std::string& prompt) {
    return util::sha256_hex(model + "\n" + util::format_double(temperature) + "\n" + prompt);
}

Gateway::Gateway(CompletionConfig config, std::string cache_dir, Transport* transport)
    : config_(std::move(config)), cache_dir_(std::move(cache_dir)), transport_(transport) {
    if (config_.max_attempts < 1)
        throw Error(ErrorCode::ConfigError, "max_attempts must be >= 1");
    if (config_.temperature < 0.0)
        throw Error(ErrorCode::ConfigError, "temperature must be >= 0");
    if (!cache_dir_.empty()) util::ensure_dir(cache_dir_);
}

std::string Gateway::cache_path(const std::string& key) const {
    return cache_dir_ + "/" + key + ".json";
}

void Gateway::write_cache(const std::string& key, const std::string& prompt_sha,
                          const std::string& response_text) {
    if (cache_dir_.empty()) return;
    static std::mutex write_mutex;
    std::lock_guard<std::mutex> lock(write_mutex);
    std::string path = cache_path(key);
    if (util::file_exists(path)) return;  // first write wins; keys are content-addressed
    nlohmann::json record;
    record["prompt_sha"] = prompt_sha;
    record["response_text"] = response_text;
    record["model"] = config_.model;
    record["timestamp"] = static_cast<int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    util::write_file(path, record.dump(2) + "\n");
}

std::string Gateway::complete_http(const std::string& prompt_text) {
    if (!transport_) {
        if (!owned_transport_) owned_transport_ = make_http_transport();
        transport_ = owned_transport_.get();
    }
    const char* key_value = config_.api_key_env.empty() ? nullptr
                                                        : std::getenv(config_.api_key_env.c_str());

    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    if (config_.max_tokens > 0) body["max_tokens"] = config_.max_tokens;
    body["messages"] = {{{"role", "user"}, {"content", prompt_text}}};

    HttpRequest request;
    request.url = config_.endpoint;
    request.api_key = key_value ? key_value : "";
    request.body = body.dump();
    request.timeout_ms = config_.timeout_ms;

    int backoff = config_.backoff_ms;
    HttpResponse response;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        response = transport_->post(request);
        bool retryable = response.status == 429 || response.status >= 500 || response.status == 0;
        if (!retryable) break;
        if (attempt == config_.max_attempts) {
            if (response.status == 429)
                throw Error(ErrorCode::RateLimited, "rate limited after retries");
            if (response.status == 0)
                throw Error(ErrorCode::Timeout, "transport failed after retries: " + response.error);
            throw Error(ErrorCode::IoError,
                        "server error " + std::to_string(response.status) + " after retries");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff *= 2;
    }
    if (response.status != 200)
        throw Error(ErrorCode::IoError, "unexpected status " + std::to_string(response.status));

    nlohmann::json parsed = nlohmann::json::parse(response.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty())
        throw Error(ErrorCode::MalformedInput, "completion response lacks choices");
    return parsed["choices"][0]["message"]["content"].get<std::string>();
}

std::string Gateway::complete(const std::string& prompt_text, Backend backend,
                              const corpus::RankingTask* task,
                              const knowledge::KnowledgePack* pack,
                              const corpus::ItemCatalog* catalog) {
    std::string key = cache_key(config_.model, config_.temperature, prompt_text);
    std::string prompt_sha = util::sha256_hex(prompt_text);

    switch (backend) {
        case Backend::replay: {
            std::string path = cache_path(key);
            if (cache_dir_.empty() || !util::file_exists(path))
                throw Error(ErrorCode::CacheMiss, "no cached response for prompt " + prompt_sha);
            nlohmann::json record = nlohmann::json::parse(util::read_file(path));
            return record.at("response_text").get<std::string>();
        }
        case Backend::mock_oracle: {
            if (!task || !pack || !catalog)
                throw Error(ErrorCode::ConfigError,
                            "mock_oracle needs the task, pack and catalog");
            std::string text = mock_oracle_rank(*task, *pack, *catalog);
            write_cache(key, prompt_sha, text);
            return text;
        }
        case Backend::http: {
            std::string text = complete_http(prompt_text);
            write_cache(key, prompt_sha, text);
            return text;
        }
    }
    throw Error(ErrorCode::ConfigError, "unhandled backend");
}

Gateway::ManyResult Gateway::complete_many(const std::vector<std::string>& prompts,
                                           Backend backend,
                                           const std::vector<corpus::RankingTask>* tasks,
                                           const std::vector<knowledge::KnowledgePack>* packs,
                                           const corpus::ItemCatalog* catalog) {
    ManyResult result;
    result.texts.assign(prompts.size(), "");
    result.errors.assign(prompts.size(), "");

    int workers = std::max(1, std::min<int>(config_.concurrency,
                                            static_cast<int>(prompts.size())));
    std::atomic<size_t> next{0};
    std::atomic<size_t> failures{0};
    auto work = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= prompts.size()) break;
            try {
                result.texts[i] =
                    complete(prompts[i], backend, tasks ? &(*tasks)[i] : nullptr,
                             packs ? &(*packs)[i] : nullptr, catalog);
            } catch (const Error& e) {
                result.errors[i] = e.what();
                failures.fetch_add(1);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    result.failures = failures.load();
    return result;
}

// ---------------------------------------------------------------------------
// Mock oracle

std::string mock_oracle_rank(const corpus::RankingTask& task, const knowledge::KnowledgePack& pack,
                             const corpus::ItemCatalog& catalog) {
    auto title = [&catalog](const std::string& item_id) {
        const auto* record = catalog.find(item_id);
        return record ? record->title : item_id;
    };

    std::vector<std::string> ordered_ids;
    if (pack.variant == knowledge::Variant::his_cand_u2i && !pack.u2i_list.empty()) {
        for (const auto& s : pack.u2i_list) ordered_ids.push_back(s.item_id);
    } else if (pack.variant == knowledge::Variant::his_cand_i2i && !pack.i2i_blocks.empty()) {
        // Best anchor-pair score per candidate; unmentioned candidates score
        // -inf and keep their original relative order.
        std::unordered_map<std::string, double> best;
        for (const auto& block : pack.i2i_blocks)
            for (const auto& neighbor : block.neighbors) {
                auto [it, inserted] = best.try_emplace(neighbor.item_id, neighbor.score);
                if (!inserted && neighbor.score > it->second) it->second = neighbor.score;
            }
        std::vector<std::pair<double, size_t>> scored;  // (-score, original index)
        for (size_t i = 0; i < task.candidates.size(); ++i) {
            auto it = best.find(task.candidates[i]);
            double score = it != best.end() ? it->second
                                            : -std::numeric_limits<double>::infinity();
            scored.emplace_back(-score, i);
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [neg, idx] : scored) ordered_ids.push_back(task.candidates[idx]);
    } else {
        ordered_ids = task.candidates;
    }

    nlohmann::json arr = nlohmann::json::array();
    for (const auto& id : ordered_ids) arr.push_back(title(id));
    return arr.dump();
}

// ---------------------------------------------------------------------------
// Response parsing

namespace {

// First syntactically valid JSON array of strings anywhere in the text.
bool extract_string_array(const std::string& raw, std::vector<std::string>* out) {
    for (size_t start = raw.find('['); start != std::string::npos;
         start = raw.find('[', start + 1)) {
        // Walk to the matching bracket, respecting string literals.
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        size_t end = std::string::npos;
        for (size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '[') {
                ++depth;
            } else if (c == ']') {
                if (--depth == 0) {
                    end = i;
                    break;
                }
            }
        }
        if (end == std::string::npos) continue;
        nlohmann::json parsed =
            nlohmann::json::parse(raw.substr(start, end - start + 1), nullptr, false);
        if (parsed.is_discarded() || !parsed.is_array() || parsed.empty()) continue;
        bool all_strings = std::all_of(parsed.begin(), parsed.end(),
                                       [](const nlohmann::json& v) { return v.is_string(); });
        if (!all_strings) continue;
        out->clear();
        for (const auto& v : parsed) out->push_back(v.get<std::string>());
        return true;
    }
    return false;
}

double token_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0.0;
    std::unordered_map<std::string, int> counts;
    for (const auto& t : a) counts[t]++;
    int inter = 0;
    for (const auto& t : b) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++inter;
        }
    }
    return static_cast<double>(inter) / static_cast<double>(std::max(a.size(), b.size()));
}

}  // namespace

RankedList parse_ranking(const std::string& raw, const std::vector<std::string>& candidate_titles) {
    const size_t n = candidate_titles.size();
    RankedList ranked;

    std::vector<std::string> normalized(n);
    std::vector<std::vector<std::string>> candidate_tokens(n);
    std::unordered_map<std::string, int> exact;  // normalized title -> first index
    for (size_t i = 0; i < n; ++i) {
        normalized[i] = util::normalize_title(candidate_titles[i]);
        candidate_tokens[i] = util::tokenize(normalized[i]);
        exact.try_emplace(normalized[i], static_cast<int>(i));
    }

    std::vector<std::string> mentions;
    if (!extract_string_array(raw, &mentions)) {
        ranked.parse_report.array_found = false;
        ranked.parse_report.missing = static_cast<int>(n);
        ranked.order.resize(n);
        for (size_t i = 0; i < n; ++i) ranked.order[i] = static_cast<int>(i);
        return ranked;
    }

    std::vector<bool> used(n, false);
    std::vector<bool> matched_fuzzily(n, false);
    for (const auto& mention : mentions) {
        std::string norm = util::normalize_title(mention);
        int idx = -1;
        bool fuzzy = false;
        if (auto it = exact.find(norm); it != exact.end()) {
            idx = it->second;
        } else {
            auto tokens = util::tokenize(norm);
            double best = 0.8;  // strictly-greater threshold
            for (size_t i = 0; i < n; ++i) {
                double overlap = token_overlap(tokens, candidate_tokens[i]);
                if (overlap > best) {
                    best = overlap;
                    idx = static_cast<int>(i);
                }
            }
            fuzzy = idx >= 0;
        }
        if (idx < 0) {
            ranked.parse_report.hallucinated++;
            continue;
        }
        if (used[idx]) continue;  // duplicate mention, first one stands
        used[idx] = true;
        matched_fuzzily[idx] = fuzzy;
        ranked.order.push_back(idx);
    }
    for (size_t i = 0; i < n; ++i) {
        if (used[i]) {
            (matched_fuzzily[i] ? ranked.parse_report.fuzzy : ranked.parse_report.matched)++;
        } else {
            ranked.order.push_back(static_cast<int>(i));
            ranked.parse_report.missing++;
        }
    }
    return ranked;
}

std::string ranked_to_jsonl(const std::vector<RankedList>& lists) {
    std::string out;
    for (const auto& ranked : lists) {
        nlohmann::json record;
        record["order"] = ranked.order;
        record["matched"] = ranked.parse_report.matched;
        record["fuzzy"] = ranked.parse_report.fuzzy;
        record["missing"] = ranked.parse_report.missing;
        record["hallucinated"] = ranked.parse_report.hallucinated;
        record["array_found"] = ranked.parse_report.array_found;
        out += record.dump();
        out += '\n';
    }
    return out;
}

std::vector<RankedList> ranked_from_jsonl(const std::string& text) {
    std::vector<RankedList> lists;
    for (const auto& line : util::split_lines(text)) {
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded())
            throw Error(ErrorCode::MalformedInput, "bad ranked list line: " + line);
        RankedList ranked;
        ranked.order = record.at("order").get<std::vector<int>>();
        ranked.parse_report.matched = record.at("matched").get<int>();
        ranked.parse_report.fuzzy = record.at("fuzzy").get<int>();
        ranked.parse_report.missing = record.at("missing").get<int>();
        ranked.parse_report.hallucinated = record.at("hallucinated").get<int>();
        ranked.parse_report.array_found = record.at("array_found").get<bool>();
        lists.push_back(std::move(ranked));
    }
    return lists;
}

}  // namespace knowrank::gateway
