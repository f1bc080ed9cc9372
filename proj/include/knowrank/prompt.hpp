#pragma once

#include <string>
#include <vector>

#include "knowrank/corpus.hpp"
#include "knowrank/knowledge.hpp"

namespace knowrank::prompt {

enum class TemplateId {
    none,
    item_attr,
    global_i2i,
    his_i2i,
    his_cand_i2i,
    his_u2i,
    his_cand_u2i,
    his_i2i_path,
    prompt1,
    prompt2,
    prompt3,
};

std::string template_name(TemplateId id);
TemplateId template_from_name(const std::string& name);  // throws ConfigError

/// The template that normally accompanies each knowledge variant.
TemplateId default_template_for(knowledge::Variant variant);

/// Wording domain: templates are written in movie/watch vocabulary; the
/// product lexicon rewrites them to product/purchase for shopping datasets.
enum class Lexicon { movie, product };

Lexicon lexicon_from_name(const std::string& name);  // throws ConfigError
std::string apply_lexicon(const std::string& text, Lexicon lexicon);

/// Reads templates/<id>.txt, stripping the file's single trailing newline.
std::string load_template(const std::string& template_dir, TemplateId id);

/// "Users who watched A, their most frequently watched movies in descending
/// order are: B, C." — one sentence per anchor, newline-separated. Empty
/// blocks yield the empty string.
std::string express_i2i(const std::vector<knowledge::I2iBlock>& blocks,
                        const corpus::ItemCatalog& catalog, Lexicon lexicon);

/// Titles comma-joined in list order.
std::string express_u2i(const std::vector<cf::Scored>& list, const corpus::ItemCatalog& catalog);

/// "A --> (has genre) --> Animation --> (genre of) --> B" with display
/// labels and relation underscores opened into spaces.
std::string express_path(const kg::ReasoningPath& path, const corpus::ItemCatalog& catalog);

struct RenderOptions {
    Lexicon lexicon = Lexicon::movie;
    /// 0 disables the budget. When the estimate exceeds it, the oldest
    /// knowledge anchors (and their paths) are dropped first.
    int token_budget = 0;
};

struct RenderedPrompt {
    std::string user_id;
    std::string variant;
    std::string text;
    int token_estimate = 0;
};

/// Fills the template's placeholders from the task and pack. Unknown
/// placeholders throw MissingPlaceholder. Pure: equal inputs give
/// byte-equal text.
RenderedPrompt render_prompt(const corpus::RankingTask& task, const knowledge::KnowledgePack& pack,
                             const std::string& template_body, const corpus::ItemCatalog& catalog,
                             const RenderOptions& options = {});

int token_estimate(const std::string& text);  // ceil(bytes / 4)

std::string prompts_to_jsonl(const std::vector<RenderedPrompt>& prompts);
std::vector<RenderedPrompt> prompts_from_jsonl(const std::string& text);

}  // namespace knowrank::prompt
