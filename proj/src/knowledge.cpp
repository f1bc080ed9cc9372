#include "knowrank/knowledge.hpp"

#include <algorithm>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "knowrank/util/errors.hpp"
#include "knowrank/util/io.hpp"

namespace knowrank::knowledge {


std::string variant_name(Variant v) {
    switch (v) {
        case Variant::none: return "none";
        case Variant::item_attr: return "item_attr";
        case Variant::global_i2i: return "global_i2i";
        case Variant::his_i2i: return "his_i2i";
        case Variant::his_cand_i2i: return "his_cand_i2i";
        case Variant::his_u2i: return "his_u2i";
        case Variant::his_cand_u2i: return "his_cand_u2i";
        case Variant::his_i2i_path: return "his_i2i_path";
    }
    return "none";
}

Variant variant_from_name(const std::string& name) {
    static const std::map<std::string, Variant> table = {
        {"none", Variant::none},
        {"item_attr", Variant::item_attr},
        {"global_i2i", Variant::global_i2i},
        {"his_i2i", Variant::his_i2i},
        {"his_cand_i2i", Variant::his_cand_i2i},
        {"his_u2i", Variant::his_u2i},
        {"his_cand_u2i", Variant::his_cand_u2i},
        {"his_i2i_path", Variant::his_i2i_path},
    };
    auto it = table.find(name);
    if (it == table.end()) throw Error(ErrorCode::ConfigError, "unknown knowledge variant: " + name);
    return it->second;
}

KnowledgePack select_global_i2i(const cf::CooccurrenceStats& stats, int m) {
    struct Pair {
        double score;
        std::string a, b;
    };
    std::vector<Pair> scored;
    for (const auto& [a, b, count] : stats.pairs())
        scored.push_back({cf::item_relevance(stats, a, b), a, b});
    std::sort(scored.begin(), scored.end(), [](const Pair& x, const Pair& y) {
        if (x.score != y.score) return x.score > y.score;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });
    if (static_cast<int>(scored.size()) > m) scored.resize(m);

    KnowledgePack pack;
    pack.variant = Variant::global_i2i;
    for (const auto& pair : scored)
        pack.i2i_blocks.push_back({pair.a, {{pair.b, pair.score}}});
    return pack;
}

namespace {

std::vector<std::string> recent_anchors(const std::vector<std::string>& history, int h) {
    size_t start = history.size() > static_cast<size_t>(h) ? history.size() - h : 0;
    return {history.begin() + start, history.end()};
}

template <typename Index>
KnowledgePack history_i2i_impl(const corpus::RankingTask& task, const Index& index, int h, int k,
                               bool restrict_to_candidates) {
    KnowledgePack pack;
    pack.user_id = task.user_id;
    pack.variant = restrict_to_candidates ? Variant::his_cand_i2i : Variant::his_i2i;

    cf::ItemSet pool;
    if (restrict_to_candidates) pool.insert(task.candidates.begin(), task.candidates.end());

    for (const auto& anchor : recent_anchors(task.history, h)) {
        if (!index.has_item(anchor)) continue;
        auto neighbors = cf::topk_for_item(index, anchor, k,
                                           restrict_to_candidates ? &pool : nullptr);
        // A zero score carries no co-behavior signal; saying so would only
        // lengthen the prompt.
        std::erase_if(neighbors, [](const cf::Scored& s) { return s.score <= 0.0; });
        if (neighbors.empty()) continue;
        pack.i2i_blocks.push_back({anchor, std::move(neighbors)});
    }
    return pack;
}

}  // namespace

KnowledgePack select_history_i2i(const corpus::RankingTask& task,
                                 const cf::CooccurrenceStats& stats, int h, int k,
                                 bool restrict_to_candidates) {
    return history_i2i_impl(task, stats, h, k, restrict_to_candidates);
}

KnowledgePack select_history_i2i(const corpus::RankingTask& task, const cf::EmbeddingTable& table,
                                 int h, int k, bool restrict_to_candidates) {
    return history_i2i_impl(task, table, h, k, restrict_to_candidates);
}

KnowledgePack select_history_u2i(const corpus::RankingTask& task, const cf::EmbeddingTable& table,
                                 int n, bool restrict_to_candidates) {
    KnowledgePack pack;
    pack.user_id = task.user_id;
    pack.variant = restrict_to_candidates ? Variant::his_cand_u2i : Variant::his_u2i;

    std::vector<double> user_vec;
    if (table.has_user(task.user_id)) {
        user_vec = table.user_vec(task.user_id);
    } else {
        // Cold user: average the history item vectors instead.
        user_vec.assign(table.dim(), 0.0);
        int covered = 0;
        for (const auto& item : task.history) {
            if (!table.has_item(item)) continue;
            const auto& vec = table.item_vec(item);
            for (size_t d = 0; d < user_vec.size(); ++d) user_vec[d] += vec[d];
            ++covered;
        }
        if (covered > 0)
            for (auto& v : user_vec) v /= covered;
    }

    if (restrict_to_candidates) {
        cf::ItemSet pool(task.candidates.begin(), task.candidates.end());
        pack.u2i_list =
            cf::topk_for_vector(table, user_vec, static_cast<int>(task.candidates.size()), &pool);
        // Downstream needs a total order over the candidates; anything the
        // table cannot score goes to the tail in original candidate order.
        if (pack.u2i_list.size() < task.candidates.size()) {
            std::unordered_set<std::string> placed;
            for (const auto& s : pack.u2i_list) placed.insert(s.item_id);
            for (const auto& candidate : task.candidates)
                if (!placed.count(candidate)) pack.u2i_list.push_back({candidate, 0.0});
        }
    } else {
        cf::ItemSet exclude(task.history.begin(), task.history.end());
        pack.u2i_list = cf::topk_for_vector(table, user_vec, n, nullptr, &exclude);
    }
    return pack;
}

void attach_attributes(KnowledgePack& pack, const corpus::RankingTask& task,
                       const corpus::ItemCatalog& catalog) {
    auto render = [&catalog](const std::string& item_id) {
        const auto* record = catalog.find(item_id);
        if (!record) return item_id;
        if (record->attributes.empty()) return record->title;
        // Group repeated attribute names in first-appearance order:
        // "Title(genre: a, b, Publish year: y)".
        std::vector<std::pair<std::string, std::string>> grouped;
        for (const auto& [name, value] : record->attributes) {
            auto it = std::find_if(grouped.begin(), grouped.end(),
                                   [&](const auto& g) { return g.first == name; });
            if (it == grouped.end())
                grouped.emplace_back(name, value);
            else
                it->second += ", " + value;
        }
        std::string line = record->title + "(";
        for (size_t i = 0; i < grouped.size(); ++i) {
            if (i > 0) line += ", ";
            line += grouped[i].first + ": " + grouped[i].second;
        }
        line += ")";
        return line;
    };
    for (const auto& item : task.history) pack.attribute_lines[item] = render(item);
    for (const auto& item : task.candidates) pack.attribute_lines[item] = render(item);
}

void attach_paths(KnowledgePack& pack, const kg::PathCache& cache) {
    if (pack.variant != Variant::his_i2i_path)
        throw Error(ErrorCode::ConfigError, "attach_paths requires the his_i2i_path variant");
    for (const auto& block : pack.i2i_blocks) {
        if (block.neighbors.empty()) continue;
        const auto* path = cache.find(block.anchor, block.neighbors.front().item_id);
        if (path) pack.paths.push_back(*path);
    }
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

nlohmann::json scored_to_json(const std::vector<cf::Scored>& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : list) arr.push_back({{"item", s.item_id}, {"score", s.score}});
    return arr;
}

std::vector<cf::Scored> scored_from_json(const nlohmann::json& arr) {
    std::vector<cf::Scored> list;
    for (const auto& entry : arr)
        list.push_back({entry.at("item").get<std::string>(), entry.at("score").get<double>()});
    return list;
}

}  // namespace

std::string packs_to_jsonl(const std::vector<KnowledgePack>& packs) {
    std::string out;
    for (const auto& pack : packs) {
        nlohmann::json record;
        record["user"] = pack.user_id;
        record["variant"] = variant_name(pack.variant);
        nlohmann::json blocks = nlohmann::json::array();
        for (const auto& block : pack.i2i_blocks)
            blocks.push_back(
                {{"anchor", block.anchor}, {"neighbors", scored_to_json(block.neighbors)}});
        record["i2i"] = std::move(blocks);
        record["u2i"] = scored_to_json(pack.u2i_list);
        nlohmann::json paths = nlohmann::json::array();
        for (const auto& path : pack.paths) {
            nlohmann::json entry = {
                {"nodes", path.nodes}, {"relations", path.relations}, {"score", path.score}};
            if (!path.labels.empty()) entry["labels"] = path.labels;
            paths.push_back(std::move(entry));
        }
        record["paths"] = std::move(paths);
        record["attrs"] = pack.attribute_lines;
        out += record.dump();
        out += '\n';
    }
    return out;
}

std::vector<KnowledgePack> packs_from_jsonl(const std::string& text) {
    std::vector<KnowledgePack> packs;
    for (const auto& line : util::split_lines(text)) {
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded())
            throw Error(ErrorCode::MalformedInput, "bad knowledge pack line: " + line);
        KnowledgePack pack;
        pack.user_id = record.at("user").get<std::string>();
        pack.variant = variant_from_name(record.at("variant").get<std::string>());
        for (const auto& block : record.at("i2i"))
            pack.i2i_blocks.push_back({block.at("anchor").get<std::string>(),
                                       scored_from_json(block.at("neighbors"))});
        pack.u2i_list = scored_from_json(record.at("u2i"));
        for (const auto& path : record.at("paths")) {
            kg::ReasoningPath p;
            p.nodes = path.at("nodes").get<std::vector<std::string>>();
            p.relations = path.at("relations").get<std::vector<std::string>>();
            if (path.contains("labels"))
                p.labels = path.at("labels").get<std::vector<std::string>>();
            p.score = path.at("score").get<double>();
            pack.paths.push_back(std::move(p));
        }
        pack.attribute_lines =
            record.at("attrs").get<std::map<std::string, std::string>>();
        packs.push_back(std::move(pack));
    }
    return packs;
}

}  // namespace knowrank::knowledge
