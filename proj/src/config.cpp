#include "knowrank/config.hpp"

#include <functional>
#include <map>
#include <sstream>

#include "knowrank/util/errors.hpp"
#include "knowrank/util/io.hpp"
#include "knowrank/util/text.hpp"

namespace knowrank::config {


namespace {

int to_int(const std::string& section, const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        int parsed = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError,
                    "[" + section + "] " + key + " wants an integer, got '" + value + "'");
    }
}

uint64_t to_u64(const std::string& section, const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        unsigned long long parsed = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError,
                    "[" + section + "] " + key + " wants an unsigned integer, got '" + value + "'");
    }
}

double to_double(const std::string& section, const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        double parsed = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError,
                    "[" + section + "] " + key + " wants a number, got '" + value + "'");
    }
}

std::vector<int> to_int_list(const std::string& section, const std::string& key,
                             const std::string& value) {
    std::vector<int> out;
    for (const auto& part : util::split(value, ','))
        out.push_back(to_int(section, key, util::trim(part)));
    return out;
}

std::vector<std::string> to_str_list(const std::string& value) {
    std::vector<std::string> out;
    for (const auto& part : util::split(value, ',')) {
        auto trimmed = util::trim(part);
        if (!trimmed.empty()) out.push_back(trimmed);
    }
    return out;
}

bool to_bool(const std::string& section, const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw Error(ErrorCode::ConfigError,
                "[" + section + "] " + key + " wants a boolean, got '" + value + "'");
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;

    using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&,
                                      const std::string&)>;
    // (section, key) -> how to store the value.
    static const std::map<std::pair<std::string, std::string>, Setter> setters = {
        {{"dataset", "name"}, [](auto& c, auto&, auto&, auto& v) { c.dataset_name = v; }},
        {{"dataset", "interactions"}, [](auto& c, auto&, auto&, auto& v) { c.interactions_path = v; }},
        {{"dataset", "catalog"}, [](auto& c, auto&, auto&, auto& v) { c.catalog_path = v; }},
        {{"dataset", "log_format"}, [](auto& c, auto&, auto&, auto& v) { c.log_format = v; }},
        {{"dataset", "catalog_format"}, [](auto& c, auto&, auto&, auto& v) { c.catalog_format = v; }},
        {{"dataset", "min_rating"},
         [](auto& c, auto& s, auto& k, auto& v) { c.min_rating = to_double(s, k, v); }},
        {{"dataset", "lexicon"}, [](auto& c, auto&, auto&, auto& v) { c.lexicon = v; }},

        {{"split", "min_core"},
         [](auto& c, auto& s, auto& k, auto& v) { c.min_core = to_int(s, k, v); }},

        {{"sampling", "strategy"}, [](auto& c, auto&, auto&, auto& v) { c.strategy = v; }},
        {{"sampling", "n_neg"},
         [](auto& c, auto& s, auto& k, auto& v) { c.n_neg = to_int(s, k, v); }},
        {{"sampling", "seed"},
         [](auto& c, auto& s, auto& k, auto& v) { c.seed = to_u64(s, k, v); }},
        {{"sampling", "sample_cap"},
         [](auto& c, auto& s, auto& k, auto& v) { c.sample_cap = to_int(s, k, v); }},
        {{"sampling", "max_history"},
         [](auto& c, auto& s, auto& k, auto& v) { c.max_history = to_int(s, k, v); }},

        {{"cf", "mf_dim"}, [](auto& c, auto& s, auto& k, auto& v) { c.mf_dim = to_int(s, k, v); }},
        {{"cf", "mf_epochs"},
         [](auto& c, auto& s, auto& k, auto& v) { c.mf_epochs = to_int(s, k, v); }},
        {{"cf", "mf_lr"}, [](auto& c, auto& s, auto& k, auto& v) { c.mf_lr = to_double(s, k, v); }},
        {{"cf", "mf_reg"},
         [](auto& c, auto& s, auto& k, auto& v) { c.mf_reg = to_double(s, k, v); }},
        {{"cf", "mf_neg_per_pos"},
         [](auto& c, auto& s, auto& k, auto& v) { c.mf_neg_per_pos = to_int(s, k, v); }},
        {{"cf", "import_user_embeddings"},
         [](auto& c, auto&, auto&, auto& v) { c.import_user_embeddings = v; }},
        {{"cf", "import_item_embeddings"},
         [](auto& c, auto&, auto&, auto& v) { c.import_item_embeddings = v; }},

        {{"kg", "triples"}, [](auto& c, auto&, auto&, auto& v) { c.kg_triples_path = v; }},
        {{"kg", "labels"}, [](auto& c, auto&, auto&, auto& v) { c.kg_labels_path = v; }},
        {{"kg", "theta"}, [](auto& c, auto& s, auto& k, auto& v) { c.theta = to_double(s, k, v); }},
        {{"kg", "link_threshold"},
         [](auto& c, auto& s, auto& k, auto& v) { c.link_threshold = to_double(s, k, v); }},
        {{"kg", "max_path_len"},
         [](auto& c, auto& s, auto& k, auto& v) { c.max_path_len = to_int(s, k, v); }},
        {{"kg", "max_paths"},
         [](auto& c, auto& s, auto& k, auto& v) { c.max_paths = to_int(s, k, v); }},
        {{"kg", "scorer_dim"},
         [](auto& c, auto& s, auto& k, auto& v) { c.scorer_dim = to_int(s, k, v); }},
        {{"kg", "scorer_buckets"},
         [](auto& c, auto& s, auto& k, auto& v) { c.scorer_buckets = to_int(s, k, v); }},
        {{"kg", "scorer_epochs"},
         [](auto& c, auto& s, auto& k, auto& v) { c.scorer_epochs = to_int(s, k, v); }},
        {{"kg", "scorer_lr"},
         [](auto& c, auto& s, auto& k, auto& v) { c.scorer_lr = to_double(s, k, v); }},
        {{"kg", "scorer_neg_ratio"},
         [](auto& c, auto& s, auto& k, auto& v) { c.scorer_neg_ratio = to_int(s, k, v); }},

        {{"knowledge", "variant"}, [](auto& c, auto&, auto&, auto& v) { c.variant = v; }},
        {{"knowledge", "global_m"},
         [](auto& c, auto& s, auto& k, auto& v) { c.global_m = to_int(s, k, v); }},
        {{"knowledge", "his_h"},
         [](auto& c, auto& s, auto& k, auto& v) { c.his_h = to_int(s, k, v); }},
        {{"knowledge", "his_k"},
         [](auto& c, auto& s, auto& k, auto& v) { c.his_k = to_int(s, k, v); }},
        {{"knowledge", "u2i_n"},
         [](auto& c, auto& s, auto& k, auto& v) { c.u2i_n = to_int(s, k, v); }},
        {{"knowledge", "attach_attributes"},
         [](auto& c, auto& s, auto& k, auto& v) { c.attach_attrs = to_bool(s, k, v); }},

        {{"prompt", "template"}, [](auto& c, auto&, auto&, auto& v) { c.template_id = v; }},
        {{"prompt", "template_dir"}, [](auto& c, auto&, auto&, auto& v) { c.template_dir = v; }},
        {{"prompt", "token_budget"},
         [](auto& c, auto& s, auto& k, auto& v) { c.token_budget = to_int(s, k, v); }},

        {{"gateway", "endpoint"},
         [](auto& c, auto&, auto&, auto& v) { c.completion.endpoint = v; }},
        {{"gateway", "model"}, [](auto& c, auto&, auto&, auto& v) { c.completion.model = v; }},
        {{"gateway", "temperature"},
         [](auto& c, auto& s, auto& k, auto& v) { c.completion.temperature = to_double(s, k, v); }},
        {{"gateway", "max_tokens"},
         [](auto& c, auto& s, auto& k, auto& v) { c.completion.max_tokens = to_int(s, k, v); }},
        {{"gateway", "timeout_ms"},
         [](auto& c, auto& s, auto& k, auto& v) { c.completion.timeout_ms = to_int(s, k, v); }},
        {{"gateway", "max_attempts"},
         [](auto& c, auto& s, auto& k, auto& v) { c.completion.max_attempts = to_int(s, k, v); }},
        {{"gateway", "backoff_ms"},
         [](auto& c, auto& s, auto& k, auto& v) { c.completion.backoff_ms = to_int(s, k, v); }},
        {{"gateway", "concurrency"},
         [](auto& c, auto& s, auto& k, auto& v) { c.completion.concurrency = to_int(s, k, v); }},
        {{"gateway", "api_key_env"},
         [](auto& c, auto&, auto&, auto& v) { c.completion.api_key_env = v; }},
        {{"gateway", "backend"}, [](auto& c, auto&, auto&, auto& v) { c.backend = v; }},

        {{"eval", "ks"},
         [](auto& c, auto& s, auto& k, auto& v) { c.ks = to_int_list(s, k, v); }},
        {{"eval", "baselines"},
         [](auto& c, auto&, auto&, auto& v) { c.baselines = to_str_list(v); }},
        {{"eval", "group_axis"}, [](auto& c, auto&, auto&, auto& v) { c.group_axis = v; }},

        {{"output", "dir"}, [](auto& c, auto&, auto&, auto& v) { c.out_dir = v; }},
    };

    std::string section;
    int line_no = 0;
    for (const auto& raw_line : util::split_lines(text)) {
        ++line_no;
        std::string line = raw_line;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = util::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error(ErrorCode::ConfigError,
                            "line " + std::to_string(line_no) + ": unterminated section header");
            section = util::trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigError,
                        "line " + std::to_string(line_no) + ": expected key = value");
        std::string key = util::trim(line.substr(0, eq));
        std::string value = util::trim(line.substr(eq + 1));
        auto it = setters.find({section, key});
        if (it == setters.end())
            throw Error(ErrorCode::ConfigError,
                        "unknown config key [" + section + "] " + key);
        it->second(cfg, section, key, value);
    }
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    return parse_config(util::read_file(path));
}

std::string canonical(const PipelineConfig& c) {
    std::ostringstream out;
    auto kv = [&out](const std::string& key, const std::string& value) {
        out << key << " = " << value << "\n";
    };
    out << "[dataset]\n";
    kv("name", c.dataset_name);
    kv("interactions", c.interactions_path);
    kv("catalog", c.catalog_path);
    kv("log_format", c.log_format);
    kv("catalog_format", c.catalog_format);
    kv("min_rating", util::format_double(c.min_rating));
    kv("lexicon", c.lexicon);
    out << "[split]\n";
    kv("min_core", std::to_string(c.min_core));
    out << "[sampling]\n";
    kv("strategy", c.strategy);
    kv("n_neg", std::to_string(c.n_neg));
    kv("seed", std::to_string(c.seed));
    kv("sample_cap", std::to_string(c.sample_cap));
    kv("max_history", std::to_string(c.max_history));
    out << "[cf]\n";
    kv("mf_dim", std::to_string(c.mf_dim));
    kv("mf_epochs", std::to_string(c.mf_epochs));
    kv("mf_lr", util::format_double(c.mf_lr));
    kv("mf_reg", util::format_double(c.mf_reg));
    kv("mf_neg_per_pos", std::to_string(c.mf_neg_per_pos));
    kv("import_user_embeddings", c.import_user_embeddings);
    kv("import_item_embeddings", c.import_item_embeddings);
    out << "[kg]\n";
    kv("triples", c.kg_triples_path);
    kv("labels", c.kg_labels_path);
    kv("theta", util::format_double(c.theta));
    kv("link_threshold", util::format_double(c.link_threshold));
    kv("max_path_len", std::to_string(c.max_path_len));
    kv("max_paths", std::to_string(c.max_paths));
    kv("scorer_dim", std::to_string(c.scorer_dim));
    kv("scorer_buckets", std::to_string(c.scorer_buckets));
    kv("scorer_epochs", std::to_string(c.scorer_epochs));
    kv("scorer_lr", util::format_double(c.scorer_lr));
    kv("scorer_neg_ratio", std::to_string(c.scorer_neg_ratio));
    out << "[knowledge]\n";
    kv("variant", c.variant);
    kv("global_m", std::to_string(c.global_m));
    kv("his_h", std::to_string(c.his_h));
    kv("his_k", std::to_string(c.his_k));
    kv("u2i_n", std::to_string(c.u2i_n));
    kv("attach_attributes", c.attach_attrs ? "true" : "false");
    out << "[prompt]\n";
    kv("template", c.template_id);
    kv("template_dir", c.template_dir);
    kv("token_budget", std::to_string(c.token_budget));
    out << "[gateway]\n";
    kv("endpoint", c.completion.endpoint);
    kv("model", c.completion.model);
    kv("temperature", util::format_double(c.completion.temperature));
    kv("max_tokens", std::to_string(c.completion.max_tokens));
    kv("timeout_ms", std::to_string(c.completion.timeout_ms));
    kv("max_attempts", std::to_string(c.completion.max_attempts));
    kv("backoff_ms", std::to_string(c.completion.backoff_ms));
    kv("concurrency", std::to_string(c.completion.concurrency));
    kv("api_key_env", c.completion.api_key_env);
    kv("backend", c.backend);
    out << "[eval]\n";
    {
        std::string ks;
        for (size_t i = 0; i < c.ks.size(); ++i) ks += (i ? "," : "") + std::to_string(c.ks[i]);
        kv("ks", ks);
        std::string baselines;
        for (size_t i = 0; i < c.baselines.size(); ++i)
            baselines += (i ? "," : "") + c.baselines[i];
        kv("baselines", baselines);
        kv("group_axis", c.group_axis);
    }
    out << "[output]\n";
    kv("dir", c.out_dir);
    return out.str();
}

}  // namespace knowrank::config
