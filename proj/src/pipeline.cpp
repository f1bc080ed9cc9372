#include "knowrank/pipeline.hpp"

#include <algorithm>
#include <iostream>
#include <optional>

#include <nlohmann/json.hpp>

#include "knowrank/cf.hpp"
#include "knowrank/eval.hpp"
#include "knowrank/kg.hpp"
#include "knowrank/knowledge.hpp"
#include "knowrank/prompt.hpp"
#include "knowrank/util/errors.hpp"
#include "knowrank/util/io.hpp"
#include "knowrank/util/rng.hpp"
#include "knowrank/util/sha256.hpp"

namespace knowrank::pipeline {


namespace {

// ---------------------------------------------------------------------------
// Provenance: every stage records the config hash plus the hashes of what it
// read and wrote, so downstream stages can detect hand-edited or missing
// upstream artifacts and re-runs can be skipped when nothing changed.

struct Provenance {
    std::string config_sha;
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
};

std::string provenance_path(const config::PipelineConfig& cfg, const std::string& stage) {
    return cfg.out_dir + "/" + stage + ".provenance.json";
}

void write_provenance(const config::PipelineConfig& cfg, const std::string& stage,
                      const Provenance& prov) {
    nlohmann::json j;
    j["config_sha256"] = prov.config_sha;
    j["inputs"] = prov.inputs;
    j["outputs"] = prov.outputs;
    util::write_file(provenance_path(cfg, stage), j.dump(2) + "\n");
}

std::optional<Provenance> read_provenance(const config::PipelineConfig& cfg,
                                          const std::string& stage) {
    std::string path = provenance_path(cfg, stage);
    if (!util::file_exists(path)) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(util::read_file(path), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    Provenance prov;
    prov.config_sha = j.value("config_sha256", "");
    if (j.contains("inputs"))
        prov.inputs = j["inputs"].get<std::map<std::string, std::string>>();
    if (j.contains("outputs"))
        prov.outputs = j["outputs"].get<std::map<std::string, std::string>>();
    return prov;
}

std::string config_sha(const config::PipelineConfig& cfg) {
    return util::sha256_hex(config::canonical(cfg));
}

std::map<std::string, std::string> hash_files(const std::vector<std::string>& paths) {
    std::map<std::string, std::string> hashes;
    for (const auto& path : paths) {
        if (!util::file_exists(path))
            throw Error(ErrorCode::StaleUpstream, "required input missing: " + path);
        hashes[path] = util::sha256_file(path);
    }
    return hashes;
}

/// Verifies that an upstream stage ran and its outputs still match what it
/// recorded.
void check_upstream(const config::PipelineConfig& cfg, const std::string& stage) {
    auto prov = read_provenance(cfg, stage);
    if (!prov)
        throw Error(ErrorCode::StaleUpstream,
                    "no '" + stage + "' outputs under " + cfg.out_dir + "; run it first");
    for (const auto& [path, sha] : prov->outputs) {
        if (!util::file_exists(path))
            throw Error(ErrorCode::StaleUpstream, "upstream file missing: " + path);
        if (util::sha256_file(path) != sha)
            throw Error(ErrorCode::StaleUpstream,
                        "upstream file changed since '" + stage + "' ran: " + path);
    }
}

bool outputs_fresh(const config::PipelineConfig& cfg, const std::string& stage,
                   const std::string& cfg_sha,
                   const std::map<std::string, std::string>& inputs) {
    auto prov = read_provenance(cfg, stage);
    if (!prov || prov->config_sha != cfg_sha || prov->inputs != inputs) return false;
    for (const auto& [path, sha] : prov->outputs) {
        if (!util::file_exists(path)) return false;
        if (util::sha256_file(path) != sha) return false;
    }
    return true;
}

void finish_stage(const config::PipelineConfig& cfg, const std::string& stage,
                  const std::string& cfg_sha, const std::map<std::string, std::string>& inputs,
                  const std::vector<std::string>& output_paths) {
    Provenance prov;
    prov.config_sha = cfg_sha;
    prov.inputs = inputs;
    for (const auto& path : output_paths) prov.outputs[path] = util::sha256_file(path);
    write_provenance(cfg, stage, prov);
}

// ---------------------------------------------------------------------------
// Artifact paths

std::string train_path(const config::PipelineConfig& c) { return c.out_dir + "/train.tsv"; }
std::string split_path(const config::PipelineConfig& c) { return c.out_dir + "/split.jsonl"; }
std::string tasks_path(const config::PipelineConfig& c) { return c.out_dir + "/tasks.jsonl"; }
std::string catalog_path(const config::PipelineConfig& c) { return c.out_dir + "/catalog.tsv"; }
std::string pairs_path(const config::PipelineConfig& c) { return c.out_dir + "/stats_pairs.tsv"; }
std::string freq_path(const config::PipelineConfig& c) { return c.out_dir + "/stats_freq.tsv"; }
std::string user_emb_path(const config::PipelineConfig& c) {
    return c.out_dir + "/embeddings.user.tsv";
}
std::string item_emb_path(const config::PipelineConfig& c) {
    return c.out_dir + "/embeddings.item.tsv";
}
std::string linkmap_path(const config::PipelineConfig& c) { return c.out_dir + "/linkmap.tsv"; }
std::string path_cache_path(const config::PipelineConfig& c) { return c.out_dir + "/paths.jsonl"; }
std::string packs_path(const config::PipelineConfig& c) { return c.out_dir + "/packs.jsonl"; }
std::string prompts_path(const config::PipelineConfig& c) { return c.out_dir + "/prompts.jsonl"; }
std::string responses_path(const config::PipelineConfig& c) {
    return c.out_dir + "/responses.jsonl";
}
std::string ranked_path(const config::PipelineConfig& c) { return c.out_dir + "/ranked.jsonl"; }
std::string replay_cache_dir(const config::PipelineConfig& c) { return c.out_dir + "/cache"; }

// ---------------------------------------------------------------------------
// Shared loaders

corpus::InteractionLog load_train(const config::PipelineConfig& cfg) {
    return corpus::parse_interactions(util::read_file(train_path(cfg)),
                                      corpus::LogFormat::generic_tsv);
}

corpus::ItemCatalog load_catalog(const config::PipelineConfig& cfg) {
    return corpus::catalog_from_tsv(util::read_file(catalog_path(cfg)));
}

std::vector<corpus::RankingTask> load_tasks(const config::PipelineConfig& cfg) {
    return corpus::tasks_from_jsonl(util::read_file(tasks_path(cfg)));
}

cf::CooccurrenceStats load_stats(const config::PipelineConfig& cfg) {
    return cf::CooccurrenceStats::from_tsv(util::read_file(pairs_path(cfg)),
                                           util::read_file(freq_path(cfg)));
}

cf::EmbeddingTable load_table(const config::PipelineConfig& cfg) {
    return cf::EmbeddingTable::deserialize(util::read_file(user_emb_path(cfg)),
                                           util::read_file(item_emb_path(cfg)));
}

}  // namespace

// ---------------------------------------------------------------------------
// prepare

StageOutcome cmd_prepare(const config::PipelineConfig& cfg, bool force) {
    if (cfg.interactions_path.empty())
        throw Error(ErrorCode::ConfigError, "[dataset] interactions is required");
    util::ensure_dir(cfg.out_dir);

    std::vector<std::string> input_files = {cfg.interactions_path};
    if (!cfg.catalog_path.empty()) input_files.push_back(cfg.catalog_path);
    auto inputs = hash_files(input_files);
    std::string sha = config_sha(cfg);
    if (!force && outputs_fresh(cfg, "prepare", sha, inputs)) return {.fresh = true};

    auto log = corpus::parse_interactions(util::read_file(cfg.interactions_path),
                                          corpus::log_format_from_string(cfg.log_format));
    if (cfg.min_rating > 0.0) log = corpus::threshold_ratings(log, cfg.min_rating);
    log = corpus::filter_core(log, cfg.min_core);
    auto split = corpus::split_leave_one_out(log);

    corpus::ItemCatalog catalog;
    if (!cfg.catalog_path.empty())
        catalog = corpus::parse_catalog(util::read_file(cfg.catalog_path),
                                        corpus::catalog_format_from_string(cfg.catalog_format));

    auto strategy = corpus::sampling_strategy_from_string(cfg.strategy);
    std::vector<std::string> test_users;
    for (const auto& [user, event] : split.test) test_users.push_back(user);
    if (cfg.sample_cap > 0 && static_cast<int>(test_users.size()) > cfg.sample_cap) {
        util::Rng rng(cfg.seed);
        rng.shuffle(test_users);
        test_users.resize(cfg.sample_cap);
        std::sort(test_users.begin(), test_users.end());
    }

    std::vector<corpus::RankingTask> tasks;
    for (const auto& user : test_users) {
        std::optional<corpus::Interaction> valid_event;
        if (auto it = split.valid.find(user); it != split.valid.end()) valid_event = it->second;
        uint64_t task_seed = util::mix_seed(cfg.seed, user);
        tasks.push_back(corpus::sample_candidates(user, split.test.at(user), split.train,
                                                  valid_event, strategy, cfg.n_neg, task_seed,
                                                  cfg.max_history));
    }

    util::write_file(train_path(cfg), corpus::to_generic_tsv(split.train));
    util::write_file(split_path(cfg), corpus::split_manifest_jsonl(split));
    util::write_file(tasks_path(cfg), corpus::tasks_to_jsonl(tasks));
    util::write_file(catalog_path(cfg), corpus::catalog_to_tsv(catalog));
    finish_stage(cfg, "prepare", sha, inputs,
                 {train_path(cfg), split_path(cfg), tasks_path(cfg), catalog_path(cfg)});
    return {.tasks = tasks.size()};
}

// ---------------------------------------------------------------------------
// extract

StageOutcome cmd_extract(const config::PipelineConfig& cfg, bool force) {
    check_upstream(cfg, "prepare");

    std::vector<std::string> input_files = {train_path(cfg), catalog_path(cfg)};
    bool use_kg = !cfg.kg_triples_path.empty() && !cfg.kg_labels_path.empty();
    if (use_kg) {
        input_files.push_back(cfg.kg_triples_path);
        input_files.push_back(cfg.kg_labels_path);
    }
    bool import_embeddings =
        !cfg.import_user_embeddings.empty() && !cfg.import_item_embeddings.empty();
    if (import_embeddings) {
        input_files.push_back(cfg.import_user_embeddings);
        input_files.push_back(cfg.import_item_embeddings);
    }
    auto inputs = hash_files(input_files);
    std::string sha = config_sha(cfg);
    if (!force && outputs_fresh(cfg, "extract", sha, inputs)) return {.fresh = true};

    auto train = load_train(cfg);
    auto stats = cf::count_cooccurrence(train);
    util::write_file(pairs_path(cfg), stats.pairs_tsv());
    util::write_file(freq_path(cfg), stats.freq_tsv());

    cf::EmbeddingTable table =
        import_embeddings
            ? cf::EmbeddingTable::deserialize(util::read_file(cfg.import_user_embeddings),
                                              util::read_file(cfg.import_item_embeddings))
            : cf::train_mf(train, cf::MfConfig{.dim = cfg.mf_dim,
                                               .epochs = cfg.mf_epochs,
                                               .lr = cfg.mf_lr,
                                               .reg = cfg.mf_reg,
                                               .neg_per_pos = cfg.mf_neg_per_pos,
                                               .seed = cfg.seed});
    util::write_file(user_emb_path(cfg), table.serialize(true));
    util::write_file(item_emb_path(cfg), table.serialize(false));

    // The KG side is optional: without external triples the link map and
    // best-path cache are empty and path knowledge degrades gracefully.
    std::string linkmap_tsv, cache_jsonl;
    if (use_kg) {
        auto catalog = load_catalog(cfg);
        auto store = kg::TripleStore::from_tsv(util::read_file(cfg.kg_triples_path),
                                               util::read_file(cfg.kg_labels_path));
        auto links = kg::link_entities(catalog, store, cfg.link_threshold);
        linkmap_tsv = kg::linkmap_to_tsv(links);
        auto graph = kg::build_domain_graph(catalog, train, links, store, stats);

        kg::PathScorerConfig scorer_cfg;
        scorer_cfg.dim = cfg.scorer_dim;
        scorer_cfg.buckets = cfg.scorer_buckets;
        scorer_cfg.epochs = cfg.scorer_epochs;
        scorer_cfg.lr = cfg.scorer_lr;
        scorer_cfg.seed = cfg.seed;
        scorer_cfg.neg_ratio = cfg.scorer_neg_ratio;
        scorer_cfg.max_path_len = cfg.max_path_len;
        scorer_cfg.max_paths = cfg.max_paths;
        try {
            auto scorer = kg::train_path_scorer(graph, stats, cfg.theta, scorer_cfg);
            // Cache the best path for every item's strongest co-click
            // neighbor — the pairs path knowledge will ask about.
            kg::PathCache cache;
            for (const auto& item : stats.items()) {
                auto top = cf::topk_for_item(stats, item, 1);
                if (top.empty()) continue;
                auto paths = kg::enumerate_paths(graph, item, top.front().item_id,
                                                 cfg.max_path_len, cfg.max_paths);
                if (paths.empty()) continue;
                auto best = kg::best_path(scorer, graph, paths);
                kg::label_path(graph, best);
                cache.put(item, top.front().item_id, std::move(best));
            }
            cache_jsonl = cache.to_jsonl();
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoPositivePairs) throw;
            std::cerr << "extract: no relevance pairs above theta; path cache left empty\n";
        }
    }
    util::write_file(linkmap_path(cfg), linkmap_tsv);
    util::write_file(path_cache_path(cfg), cache_jsonl);

    finish_stage(cfg, "extract", sha, inputs,
                 {pairs_path(cfg), freq_path(cfg), user_emb_path(cfg), item_emb_path(cfg),
                  linkmap_path(cfg), path_cache_path(cfg)});
    return {};
}

// ---------------------------------------------------------------------------
// knowledge

StageOutcome cmd_knowledge(const config::PipelineConfig& cfg, bool force) {
    check_upstream(cfg, "prepare");
    check_upstream(cfg, "extract");

    auto inputs = hash_files({tasks_path(cfg), catalog_path(cfg), pairs_path(cfg), freq_path(cfg),
                              user_emb_path(cfg), item_emb_path(cfg), path_cache_path(cfg)});
    std::string sha = config_sha(cfg);
    if (!force && outputs_fresh(cfg, "knowledge", sha, inputs)) return {.fresh = true};

    auto tasks = load_tasks(cfg);
    auto catalog = load_catalog(cfg);
    auto variant = knowledge::variant_from_name(cfg.variant);

    std::optional<cf::CooccurrenceStats> stats;
    std::optional<cf::EmbeddingTable> table;
    std::optional<kg::PathCache> cache;
    auto need_stats = [&]() -> const cf::CooccurrenceStats& {
        if (!stats) stats = load_stats(cfg);
        return *stats;
    };
    auto need_table = [&]() -> const cf::EmbeddingTable& {
        if (!table) table = load_table(cfg);
        return *table;
    };

    std::vector<knowledge::KnowledgePack> packs;
    packs.reserve(tasks.size());
    for (const auto& task : tasks) {
        knowledge::KnowledgePack pack;
        switch (variant) {
            case knowledge::Variant::none:
            case knowledge::Variant::item_attr:
                pack.variant = variant;
                break;
            case knowledge::Variant::global_i2i:
                pack = knowledge::select_global_i2i(need_stats(), cfg.global_m);
                break;
            case knowledge::Variant::his_i2i:
                pack = knowledge::select_history_i2i(task, need_stats(), cfg.his_h, cfg.his_k,
                                                     false);
                break;
            case knowledge::Variant::his_cand_i2i:
                pack = knowledge::select_history_i2i(task, need_stats(), cfg.his_h, cfg.his_k,
                                                     true);
                break;
            case knowledge::Variant::his_u2i:
                pack = knowledge::select_history_u2i(task, need_table(), cfg.u2i_n, false);
                break;
            case knowledge::Variant::his_cand_u2i:
                pack = knowledge::select_history_u2i(task, need_table(), cfg.u2i_n, true);
                break;
            case knowledge::Variant::his_i2i_path: {
                pack = knowledge::select_history_i2i(task, need_stats(), cfg.his_h, cfg.his_k,
                                                     false);
                pack.variant = knowledge::Variant::his_i2i_path;
                if (!cache)
                    cache = kg::PathCache::from_jsonl(util::read_file(path_cache_path(cfg)));
                knowledge::attach_paths(pack, *cache);
                break;
            }
        }
        pack.user_id = task.user_id;
        if (variant == knowledge::Variant::item_attr || cfg.attach_attrs)
            knowledge::attach_attributes(pack, task, catalog);
        packs.push_back(std::move(pack));
    }

    util::write_file(packs_path(cfg), knowledge::packs_to_jsonl(packs));
    finish_stage(cfg, "knowledge", sha, inputs, {packs_path(cfg)});
    return {.tasks = packs.size()};
}

// ---------------------------------------------------------------------------
// render

StageOutcome cmd_render(const config::PipelineConfig& cfg, bool force) {
    check_upstream(cfg, "prepare");
    check_upstream(cfg, "knowledge");

    auto variant = knowledge::variant_from_name(cfg.variant);
    auto template_id = cfg.template_id.empty() ? prompt::default_template_for(variant)
                                               : prompt::template_from_name(cfg.template_id);
    std::string template_file =
        cfg.template_dir + "/" + prompt::template_name(template_id) + ".txt";

    auto inputs = hash_files({tasks_path(cfg), catalog_path(cfg), packs_path(cfg), template_file});
    std::string sha = config_sha(cfg);
    if (!force && outputs_fresh(cfg, "render", sha, inputs)) return {.fresh = true};

    auto tasks = load_tasks(cfg);
    auto packs = knowledge::packs_from_jsonl(util::read_file(packs_path(cfg)));
    if (tasks.size() != packs.size())
        throw Error(ErrorCode::StaleUpstream, "tasks and knowledge packs disagree in count");
    auto catalog = load_catalog(cfg);
    std::string body = prompt::load_template(cfg.template_dir, template_id);

    prompt::RenderOptions options;
    options.lexicon = prompt::lexicon_from_name(cfg.lexicon);
    options.token_budget = cfg.token_budget;

    std::vector<prompt::RenderedPrompt> prompts;
    prompts.reserve(tasks.size());
    for (size_t i = 0; i < tasks.size(); ++i)
        prompts.push_back(prompt::render_prompt(tasks[i], packs[i], body, catalog, options));

    util::write_file(prompts_path(cfg), prompt::prompts_to_jsonl(prompts));
    finish_stage(cfg, "render", sha, inputs, {prompts_path(cfg)});
    return {.tasks = prompts.size()};
}

// ---------------------------------------------------------------------------
// rank

StageOutcome cmd_rank(const config::PipelineConfig& cfg, bool force,
                      gateway::Transport* transport) {
    check_upstream(cfg, "prepare");
    check_upstream(cfg, "knowledge");
    check_upstream(cfg, "render");

    auto inputs = hash_files({tasks_path(cfg), catalog_path(cfg), packs_path(cfg),
                              prompts_path(cfg)});
    std::string sha = config_sha(cfg);
    if (!force && outputs_fresh(cfg, "rank", sha, inputs)) return {.fresh = true};

    auto tasks = load_tasks(cfg);
    auto packs = knowledge::packs_from_jsonl(util::read_file(packs_path(cfg)));
    auto prompts = prompt::prompts_from_jsonl(util::read_file(prompts_path(cfg)));
    if (tasks.size() != packs.size() || tasks.size() != prompts.size())
        throw Error(ErrorCode::StaleUpstream, "tasks, packs and prompts disagree in count");
    auto catalog = load_catalog(cfg);

    auto backend = gateway::backend_from_name(cfg.backend);
    gateway::Gateway gw(cfg.completion, replay_cache_dir(cfg), transport);

    std::vector<std::string> texts;
    texts.reserve(prompts.size());
    for (const auto& p : prompts) texts.push_back(p.text);
    auto result = gw.complete_many(texts, backend, &tasks, &packs, &catalog);

    std::string responses, ranked;
    for (size_t i = 0; i < tasks.size(); ++i) {
        bool ok = result.errors[i].empty();
        nlohmann::json response_record;
        response_record["user"] = tasks[i].user_id;
        response_record["ok"] = ok;
        if (ok)
            response_record["text"] = result.texts[i];
        else
            response_record["error"] = result.errors[i];
        responses += response_record.dump();
        responses += '\n';

        nlohmann::json ranked_record;
        ranked_record["user"] = tasks[i].user_id;
        ranked_record["ok"] = ok;
        if (ok) {
            std::vector<std::string> titles;
            for (const auto& id : tasks[i].candidates) titles.push_back(catalog.title_or_id(id));
            auto list = gateway::parse_ranking(result.texts[i], titles);
            ranked_record["order"] = list.order;
            ranked_record["matched"] = list.parse_report.matched;
            ranked_record["fuzzy"] = list.parse_report.fuzzy;
            ranked_record["missing"] = list.parse_report.missing;
            ranked_record["hallucinated"] = list.parse_report.hallucinated;
            ranked_record["array_found"] = list.parse_report.array_found;
        }
        ranked += ranked_record.dump();
        ranked += '\n';
    }
    util::write_file(responses_path(cfg), responses);
    util::write_file(ranked_path(cfg), ranked);
    finish_stage(cfg, "rank", sha, inputs, {responses_path(cfg), ranked_path(cfg)});
    return {.tasks = tasks.size(), .failures = result.failures};
}

// ---------------------------------------------------------------------------
// eval

StageOutcome cmd_eval(const config::PipelineConfig& cfg, bool force) {
    check_upstream(cfg, "prepare");
    check_upstream(cfg, "extract");
    check_upstream(cfg, "rank");

    auto inputs = hash_files({tasks_path(cfg), catalog_path(cfg), pairs_path(cfg), freq_path(cfg),
                              user_emb_path(cfg), item_emb_path(cfg), train_path(cfg),
                              ranked_path(cfg)});
    std::string sha = config_sha(cfg);
    if (!force && outputs_fresh(cfg, "eval", sha, inputs)) return {.fresh = true};

    auto all_tasks = load_tasks(cfg);

    // Pair each evaluable (ok) ranking with its task.
    std::vector<corpus::RankingTask> tasks;
    std::vector<gateway::RankedList> rankings;
    size_t skipped = 0;
    for (const auto& line : util::split_lines(util::read_file(ranked_path(cfg)))) {
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line);
        size_t index = tasks.size() + skipped;
        if (index >= all_tasks.size())
            throw Error(ErrorCode::StaleUpstream, "more rankings than tasks");
        if (!record.at("ok").get<bool>()) {
            ++skipped;
            continue;
        }
        gateway::RankedList list;
        list.order = record.at("order").get<std::vector<int>>();
        list.parse_report.matched = record.at("matched").get<int>();
        list.parse_report.fuzzy = record.at("fuzzy").get<int>();
        list.parse_report.missing = record.at("missing").get<int>();
        list.parse_report.hallucinated = record.at("hallucinated").get<int>();
        list.parse_report.array_found = record.at("array_found").get<bool>();
        tasks.push_back(all_tasks[index]);
        rankings.push_back(std::move(list));
    }
    if (tasks.empty()) throw Error(ErrorCode::EmptyResult, "no successful rankings to evaluate");

    auto report = eval::evaluate_run(tasks, rankings, cfg.ks, cfg.variant);
    util::write_file(cfg.out_dir + "/report.json", eval::report_to_json(report));
    util::write_file(cfg.out_dir + "/report.txt", eval::report_to_table(report));
    util::write_file(cfg.out_dir + "/samples.tsv", eval::samples_to_tsv(report));
    std::vector<std::string> outputs = {cfg.out_dir + "/report.json", cfg.out_dir + "/report.txt",
                                        cfg.out_dir + "/samples.tsv"};

    // Non-LLM baselines over the same tasks.
    auto train = load_train(cfg);
    auto stats = load_stats(cfg);
    auto table = load_table(cfg);
    auto catalog = load_catalog(cfg);
    auto counts = train.item_event_counts();
    std::map<std::string, int64_t> pop_counts(counts.begin(), counts.end());
    eval::BaselineIndices indices;
    indices.stats = &stats;
    indices.table = &table;
    indices.catalog = &catalog;
    indices.pop_counts = &pop_counts;

    for (const auto& name : cfg.baselines) {
        auto method = eval::baseline_from_name(name);
        std::vector<gateway::RankedList> baseline_rankings;
        baseline_rankings.reserve(tasks.size());
        for (const auto& task : tasks)
            baseline_rankings.push_back(eval::rank_baseline(task, method, indices));
        auto baseline_report = eval::evaluate_run(tasks, baseline_rankings, cfg.ks, name);
        std::string base = cfg.out_dir + "/baseline_" + name;
        util::write_file(base + ".json", eval::report_to_json(baseline_report));
        util::write_file(base + ".txt", eval::report_to_table(baseline_report));
        outputs.push_back(base + ".json");
        outputs.push_back(base + ".txt");
    }

    if (!cfg.group_axis.empty()) {
        auto axis = eval::axis_from_name(cfg.group_axis);
        eval::GroupingSpec spec;
        spec.axis = axis;
        spec.boundary = eval::median_boundary(report, axis, pop_counts);
        auto grouped = eval::group_report(report, spec, pop_counts);
        nlohmann::json j;
        j["axis"] = cfg.group_axis;
        j["boundary"] = spec.boundary;
        j["degenerate"] = grouped.degenerate;
        j["low"] = {{"count", grouped.low.samples.size()}, {"means", grouped.low.means}};
        j["high"] = {{"count", grouped.high.samples.size()}, {"means", grouped.high.means}};
        util::write_file(cfg.out_dir + "/groups.json", j.dump(2) + "\n");
        outputs.push_back(cfg.out_dir + "/groups.json");
    }

    finish_stage(cfg, "eval", sha, inputs, outputs);
    return {.tasks = tasks.size()};
}

// ---------------------------------------------------------------------------

int run_stage(const std::string& stage, const config::PipelineConfig& cfg, bool force,
              gateway::Transport* transport) {
    try {
        StageOutcome outcome;
        if (stage == "prepare")
            outcome = cmd_prepare(cfg, force);
        else if (stage == "extract")
            outcome = cmd_extract(cfg, force);
        else if (stage == "knowledge")
            outcome = cmd_knowledge(cfg, force);
        else if (stage == "render")
            outcome = cmd_render(cfg, force);
        else if (stage == "rank")
            outcome = cmd_rank(cfg, force, transport);
        else if (stage == "eval")
            outcome = cmd_eval(cfg, force);
        else
            throw Error(ErrorCode::ConfigError, "unknown stage: " + stage);

        if (outcome.fresh)
            std::cerr << stage << ": up to date\n";
        else if (outcome.failures > 0)
            std::cerr << stage << ": " << outcome.failures << " of " << outcome.tasks
                      << " tasks failed\n";
        else
            std::cerr << stage << ": done\n";
        return outcome.failures > 0 ? 4 : 0;
    } catch (const Error& e) {
        std::cerr << stage << ": " << e.what() << "\n";
        switch (e.code()) {
            case ErrorCode::ConfigError: return 2;
            case ErrorCode::StaleUpstream: return 3;
            default: return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << stage << ": " << e.what() << "\n";
        return 1;
    }
}

}  // namespace knowrank::pipeline
