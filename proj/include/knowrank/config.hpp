#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "knowrank/corpus.hpp"
#include "knowrank/gateway.hpp"

namespace knowrank::config {

/// Everything a pipeline run needs, mirrored one-to-one by the sectioned
/// key=value config file. Defaults suit a MovieLens-scale run out of the
/// box.
struct PipelineConfig {
    // [dataset]
    std::string dataset_name = "toy";
    std::string interactions_path;
    std::string catalog_path;
    std::string log_format = "generic_tsv";
    std::string catalog_format = "generic_tsv";
    double min_rating = 0.0;  // 0 keeps every event
    std::string lexicon = "movie";

    // [split]
    int min_core = 5;

    // [sampling]
    std::string strategy = "random";
    int n_neg = 19;
    uint64_t seed = 42;
    int sample_cap = 1000;
    int max_history = 50;

    // [cf]
    int mf_dim = 32;
    int mf_epochs = 10;
    double mf_lr = 0.05;
    double mf_reg = 0.01;
    int mf_neg_per_pos = 1;
    std::string import_user_embeddings;  // skip training when both set
    std::string import_item_embeddings;

    // [kg]
    std::string kg_triples_path;
    std::string kg_labels_path;
    double theta = 0.2;
    double link_threshold = 0.7;
    int max_path_len = 3;
    int max_paths = 64;
    int scorer_dim = 16;
    int scorer_buckets = 64;
    int scorer_epochs = 10;
    double scorer_lr = 0.05;
    int scorer_neg_ratio = 1;

    // [knowledge]
    std::string variant = "none";
    int global_m = 20;
    int his_h = 10;
    int his_k = 3;
    int u2i_n = 20;
    bool attach_attrs = false;  // add attribute lines to non-attr variants too

    // [prompt]
    std::string template_id;  // empty -> variant's default template
    std::string template_dir = "templates";
    int token_budget = 0;

    // [gateway]
    gateway::CompletionConfig completion;
    std::string backend = "mock";

    // [eval]
    std::vector<int> ks = {1, 5, 10};
    std::vector<std::string> baselines = {"pop", "item_cf", "bm25", "mf"};
    std::string group_axis;  // empty -> no group report

    // [output]
    std::string out_dir = "out";
};

/// Parses the sectioned key=value file; '#' starts a comment. Unknown
/// sections or keys raise ConfigError so typos cannot silently fall back to
/// defaults.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

/// Canonical serialization of the effective config — the basis of the
/// provenance hash, so flag overrides change it.
std::string canonical(const PipelineConfig& config);

}  // namespace knowrank::config
