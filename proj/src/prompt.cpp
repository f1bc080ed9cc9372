#include "knowrank/prompt.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "knowrank/util/errors.hpp"
#include "knowrank/util/io.hpp"

namespace knowrank::prompt {


std::string template_name(TemplateId id) {
    switch (id) {
        case TemplateId::none: return "none";
        case TemplateId::item_attr: return "item_attr";
        case TemplateId::global_i2i: return "global_i2i";
        case TemplateId::his_i2i: return "his_i2i";
        case TemplateId::his_cand_i2i: return "his_cand_i2i";
        case TemplateId::his_u2i: return "his_u2i";
        case TemplateId::his_cand_u2i: return "his_cand_u2i";
        case TemplateId::his_i2i_path: return "his_i2i_path";
        case TemplateId::prompt1: return "prompt1";
        case TemplateId::prompt2: return "prompt2";
        case TemplateId::prompt3: return "prompt3";
    }
    return "none";
}

TemplateId template_from_name(const std::string& name) {
    static const std::map<std::string, TemplateId> table = {
        {"none", TemplateId::none},
        {"item_attr", TemplateId::item_attr},
        {"global_i2i", TemplateId::global_i2i},
        {"his_i2i", TemplateId::his_i2i},
        {"his_cand_i2i", TemplateId::his_cand_i2i},
        {"his_u2i", TemplateId::his_u2i},
        {"his_cand_u2i", TemplateId::his_cand_u2i},
        {"his_i2i_path", TemplateId::his_i2i_path},
        {"prompt1", TemplateId::prompt1},
        {"prompt2", TemplateId::prompt2},
        {"prompt3", TemplateId::prompt3},
    };
    auto it = table.find(name);
    if (it == table.end()) throw Error(ErrorCode::ConfigError, "unknown template: " + name);
    return it->second;
}

TemplateId default_template_for(knowledge::Variant variant) {
    switch (variant) {
        case knowledge::Variant::none: return TemplateId::none;
        case knowledge::Variant::item_attr: return TemplateId::item_attr;
        case knowledge::Variant::global_i2i: return TemplateId::global_i2i;
        case knowledge::Variant::his_i2i: return TemplateId::his_i2i;
        case knowledge::Variant::his_cand_i2i: return TemplateId::his_cand_i2i;
        case knowledge::Variant::his_u2i: return TemplateId::his_u2i;
        case knowledge::Variant::his_cand_u2i: return TemplateId::his_cand_u2i;
        case knowledge::Variant::his_i2i_path: return TemplateId::his_i2i_path;
    }
    return TemplateId::none;
}

Lexicon lexicon_from_name(const std::string& name) {
    if (name == "movie") return Lexicon::movie;
    if (name == "product") return Lexicon::product;
    throw Error(ErrorCode::ConfigError, "unknown lexicon: " + name);
}

std::string apply_lexicon(const std::string& text, Lexicon lexicon) {
    if (lexicon == Lexicon::movie) return text;
    // Longer watch-phrases first so the bare noun pass cannot bite them.
    static const std::vector<std::pair<std::string, std::string>> rules = {
        {"watching history", "purchase history"},
        {"can watch next", "can purchase next"},
        {"to watch next", "to purchase next"},
        {"co-watched", "co-purchased"},
        {"watched by same user", "purchased by same user"},
        {"Users who watched", "Users who purchased"},
        {"historical watched", "historical purchased"},
        {"frequently watched", "frequently purchased"},
        {"likely next watch", "likely next purchase"},
        {"to watch each of them next", "to purchase each of them next"},
        {"movies", "products"},
        {"movie", "product"},
    };
    std::string out = text;
    for (const auto& [from, to] : rules) {
        size_t pos = 0;
        while ((pos = out.find(from, pos)) != std::string::npos) {
            out.replace(pos, from.size(), to);
            pos += to.size();
        }
    }
    return out;
}

std::string load_template(const std::string& template_dir, TemplateId id) {
    std::string body = util::read_file(template_dir + "/" + template_name(id) + ".txt");
    if (!body.empty() && body.back() == '\n') body.pop_back();
    return body;
}

namespace {

std::string title_of(const corpus::ItemCatalog& catalog, const std::string& item_id) {
    const auto* record = catalog.find(item_id);
    return record ? record->title : item_id;
}

std::string bracket_list(const std::vector<std::string>& entries) {
    std::string out = "[";
    for (size_t i = 0; i < entries.size(); ++i) {
        if (i > 0) out += ", ";
        out += entries[i];
    }
    out += "]";
    return out;
}

}  // namespace

std::string express_i2i(const std::vector<knowledge::I2iBlock>& blocks,
                        const corpus::ItemCatalog& catalog, Lexicon lexicon) {
    // The skeleton is lexicon-substituted before titles go in, so titles
    // themselves are never rewritten.
    const std::string lead = apply_lexicon("Users who watched ", lexicon);
    const std::string middle =
        apply_lexicon(", their most frequently watched movies in descending order are: ", lexicon);
    std::string out;
    for (const auto& block : blocks) {
        if (block.neighbors.empty()) continue;
        if (!out.empty()) out += '\n';
        out += lead + title_of(catalog, block.anchor) + middle;
        for (size_t i = 0; i < block.neighbors.size(); ++i) {
            if (i > 0) out += ", ";
            out += title_of(catalog, block.neighbors[i].item_id);
        }
        out += '.';
    }
    return out;
}

std::string express_u2i(const std::vector<cf::Scored>& list, const corpus::ItemCatalog& catalog) {
    std::string out;
    for (size_t i = 0; i < list.size(); ++i) {
        if (i > 0) out += ", ";
        out += title_of(catalog, list[i].item_id);
    }
    return out;
}

std::string express_path(const kg::ReasoningPath& path, const corpus::ItemCatalog& catalog) {
    auto display = [&](size_t i) -> std::string {
        if (i < path.labels.size()) return path.labels[i];
        // Fall back to deriving a label from the namespaced node id.
        const std::string& node = path.nodes[i];
        if (node.rfind("item:", 0) == 0) return title_of(catalog, node.substr(5));
        if (node.rfind("attr:", 0) == 0) {
            auto eq = node.find('=');
            return eq != std::string::npos ? node.substr(eq + 1) : node.substr(5);
        }
        if (node.rfind("ent:", 0) == 0) return node.substr(4);
        return node;
    };
    std::string out = display(0);
    for (size_t t = 0; t < path.relations.size(); ++t) {
        std::string relation = path.relations[t];
        std::replace(relation.begin(), relation.end(), '_', ' ');
        out += " --> (" + relation + ") --> " + display(t + 1);
    }
    return out;
}

int token_estimate(const std::string& text) {
    return static_cast<int>((text.size() + 3) / 4);
}

namespace {

struct Bindings {
    std::map<std::string, std::string> values;
};

Bindings make_bindings(const corpus::RankingTask& task, const knowledge::KnowledgePack& pack,
                       const corpus::ItemCatalog& catalog, Lexicon lexicon) {
    Bindings b;
    std::vector<std::string> history_titles, candidate_titles;
    std::vector<std::string> history_feat, candidate_feat;
    auto featured = [&](const std::string& item_id) {
        auto it = pack.attribute_lines.find(item_id);
        return it != pack.attribute_lines.end() ? it->second : title_of(catalog, item_id);
    };
    for (const auto& item : task.history) {
        history_titles.push_back(title_of(catalog, item));
        history_feat.push_back(featured(item));
    }
    for (const auto& item : task.candidates) {
        candidate_titles.push_back(title_of(catalog, item));
        candidate_feat.push_back(featured(item));
    }

    b.values["history titles"] = bracket_list(history_titles);
    b.values["candidate titles"] = bracket_list(candidate_titles);
    b.values["history titles with feature"] = bracket_list(history_feat);
    b.values["candidate titles with feature"] = bracket_list(candidate_feat);

    std::string i2i_text = express_i2i(pack.i2i_blocks, catalog, lexicon);
    b.values["global I2I text"] = i2i_text;
    b.values["His I2I text"] = i2i_text;
    b.values["His-Cand I2I text"] = i2i_text;

    std::string u2i_text = express_u2i(pack.u2i_list, catalog);
    b.values["His U2I item titles"] = u2i_text;
    b.values["His-Cand U2I item titles"] = u2i_text;

    std::string path_text;
    for (const auto& path : pack.paths) {
        if (!path_text.empty()) path_text += '\n';
        path_text += express_path(path, catalog);
    }
    b.values["His I2I path text"] = path_text;
    return b;
}

std::string substitute(const std::string& body, const Bindings& bindings) {
    std::string out;
    out.reserve(body.size());
    size_t pos = 0;
    while (pos < body.size()) {
        size_t open = body.find('{', pos);
        if (open == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        size_t close = body.find('}', open);
        if (close == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        out.append(body, pos, open - pos);
        std::string name = body.substr(open + 1, close - open - 1);
        auto it = bindings.values.find(name);
        if (it == bindings.values.end())
            throw Error(ErrorCode::MissingPlaceholder, "no binding for placeholder {" + name + "}");
        out += it->second;
        pos = close + 1;
    }
    return out;
}

}  // namespace

RenderedPrompt render_prompt(const corpus::RankingTask& task, const knowledge::KnowledgePack& pack,
                             const std::string& template_body, const corpus::ItemCatalog& catalog,
                             const RenderOptions& options) {
    std::string skeleton = apply_lexicon(template_body, options.lexicon);

    knowledge::KnowledgePack trimmed = pack;
    RenderedPrompt prompt;
    prompt.user_id = task.user_id;
    prompt.variant = knowledge::variant_name(pack.variant);
    while (true) {
        prompt.text = substitute(skeleton, make_bindings(task, trimmed, catalog, options.lexicon));
        prompt.token_estimate = token_estimate(prompt.text);
        if (options.token_budget <= 0 || prompt.token_estimate <= options.token_budget) break;
        if (!trimmed.i2i_blocks.empty()) {
            // Oldest anchor first; its reasoning path goes with it.
            std::string anchor = trimmed.i2i_blocks.front().anchor;
            trimmed.i2i_blocks.erase(trimmed.i2i_blocks.begin());
            std::string anchor_node = kg::KnowledgeGraph::item_node(anchor);
            std::erase_if(trimmed.paths, [&](const kg::ReasoningPath& p) {
                return !p.nodes.empty() && p.nodes.front() == anchor_node;
            });
        } else if (trimmed.variant == knowledge::Variant::his_u2i && !trimmed.u2i_list.empty()) {
            // The candidate-restricted list must stay a total order, so only
            // the open-set list is trimmable.
            trimmed.u2i_list.pop_back();
        } else {
            break;  // nothing left to cut
        }
    }
    return prompt;
}

std::string prompts_to_jsonl(const std::vector<RenderedPrompt>& prompts) {
    std::string out;
    for (const auto& prompt : prompts) {
        nlohmann::json record;
        record["user"] = prompt.user_id;
        record["variant"] = prompt.variant;
        record["text"] = prompt.text;
        record["tokens"] = prompt.token_estimate;
        out += record.dump();
        out += '\n';
    }
    return out;
}

std::vector<RenderedPrompt> prompts_from_jsonl(const std::string& text) {
    std::vector<RenderedPrompt> prompts;
    for (const auto& line : util::split_lines(text)) {
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded())
            throw Error(ErrorCode::MalformedInput, "bad prompt line: " + line);
        RenderedPrompt prompt;
        prompt.user_id = record.at("user").get<std::string>();
        prompt.variant = record.at("variant").get<std::string>();
        prompt.text = record.at("text").get<std::string>();
        prompt.token_estimate = record.at("tokens").get<int>();
        prompts.push_back(std::move(prompt));
    }
    return prompts;
}

}  // namespace knowrank::prompt
