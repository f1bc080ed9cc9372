#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <string>

#include "doctest.h"
#include "knowrank/config.hpp"
#include "knowrank/util/errors.hpp"
#include "knowrank/util/io.hpp"

using namespace knowrank;

namespace {

void check_config_error(const std::string& text) {
    try {
        config::parse_config(text);
        FAIL_CHECK("expected ConfigError for: " << text);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
    }
}

}  // namespace

TEST_CASE("an empty config keeps every documented default") {
    auto cfg = config::parse_config("");
    CHECK(cfg.dataset_name == "toy");
    CHECK(cfg.log_format == "generic_tsv");
    CHECK(cfg.min_rating == 0.0);
    CHECK(cfg.lexicon == "movie");
    CHECK(cfg.min_core == 5);
    CHECK(cfg.strategy == "random");
    CHECK(cfg.n_neg == 19);
    CHECK(cfg.seed == 42);
    CHECK(cfg.sample_cap == 1000);
    CHECK(cfg.max_history == 50);
    CHECK(cfg.mf_dim == 32);
    CHECK(cfg.theta == 0.2);
    CHECK(cfg.link_threshold == 0.7);
    CHECK(cfg.max_path_len == 3);
    CHECK(cfg.max_paths == 64);
    CHECK(cfg.variant == "none");
    CHECK(cfg.global_m == 20);
    CHECK(cfg.his_h == 10);
    CHECK(cfg.his_k == 3);
    CHECK(cfg.u2i_n == 20);
    CHECK_FALSE(cfg.attach_attrs);
    CHECK(cfg.template_id.empty());
    CHECK(cfg.template_dir == "templates");
    CHECK(cfg.token_budget == 0);
    CHECK(cfg.completion.model == "gpt-3.5-turbo");
    CHECK(cfg.completion.temperature == 0.0);
    CHECK(cfg.completion.max_attempts == 5);
    CHECK(cfg.completion.backoff_ms == 1000);
    CHECK(cfg.completion.concurrency == 4);
    CHECK(cfg.completion.api_key_env == "OPENAI_API_KEY");
    CHECK(cfg.backend == "mock");
    CHECK(cfg.ks == std::vector<int>{1, 5, 10});
    CHECK(cfg.baselines == std::vector<std::string>{"pop", "item_cf", "bm25", "mf"});
    CHECK(cfg.group_axis.empty());
    CHECK(cfg.out_dir == "out");
}

TEST_CASE("sections, comments and whitespace parse as expected") {
    auto cfg = config::parse_config(
        "# full-line comment\n"
        "[dataset]\n"
        "name = ml-1m\n"
        "interactions = data/ratings.dat   # trailing comment\n"
        "log_format=ml1m\n"
        "min_rating = 4\n"
        "\n"
        "[sampling]\n"
        "  strategy = pop\n"
        "  seed = 7\n"
        "  sample_cap = 250\n"
        "[knowledge]\n"
        "variant = his_cand_u2i\n"
        "attach_attributes = yes\n"
        "[gateway]\n"
        "model = gpt-4\n"
        "temperature = 0.5\n"
        "backend = http\n"
        "[eval]\n"
        "ks = 1, 3 ,10\n"
        "baselines = pop , mf\n"
        "group_axis = history_length\n"
        "[output]\n"
        "dir = /tmp/run1\n");
    CHECK(cfg.dataset_name == "ml-1m");
    CHECK(cfg.interactions_path == "data/ratings.dat");
    CHECK(cfg.log_format == "ml1m");
    CHECK(cfg.min_rating == 4.0);
    CHECK(cfg.strategy == "pop");
    CHECK(cfg.seed == 7);
    CHECK(cfg.sample_cap == 250);
    CHECK(cfg.variant == "his_cand_u2i");
    CHECK(cfg.attach_attrs);
    CHECK(cfg.completion.model == "gpt-4");
    CHECK(cfg.completion.temperature == 0.5);
    CHECK(cfg.backend == "http");
    CHECK(cfg.ks == std::vector<int>{1, 3, 10});
    CHECK(cfg.baselines == std::vector<std::string>{"pop", "mf"});
    CHECK(cfg.group_axis == "history_length");
    CHECK(cfg.out_dir == "/tmp/run1");
}

TEST_CASE("boolean spellings") {
    for (const char* word : {"true", "1", "yes"})
        CHECK(config::parse_config(std::string("[knowledge]\nattach_attributes = ") + word)
                  .attach_attrs);
    for (const char* word : {"false", "0", "no"})
        CHECK_FALSE(
            config::parse_config(std::string("[knowledge]\nattach_attributes = ") + word)
                .attach_attrs);
    check_config_error("[knowledge]\nattach_attributes = maybe\n");
}

TEST_CASE("typos cannot fall through to defaults") {
    check_config_error("[dataset]\nnmae = oops\n");          // misspelt key
    check_config_error("[datasets]\nname = oops\n");          // misspelt section
    check_config_error("name = oops\n");                      // key before any section
    check_config_error("[dataset\nname = x\n");               // unterminated header
    check_config_error("[dataset]\njust some words\n");       // missing '='
}

TEST_CASE("non-numeric values for numeric keys are rejected") {
    check_config_error("[split]\nmin_core = five\n");
    check_config_error("[split]\nmin_core = 5x\n");
    check_config_error("[dataset]\nmin_rating = 4stars\n");
    check_config_error("[sampling]\nseed = 0x2a\n");
    check_config_error("[eval]\nks = 1,two,3\n");
    check_config_error("[gateway]\ntemperature = warm\n");
}

TEST_CASE("the canonical form is deterministic and override-sensitive") {
    auto base = config::parse_config("");
    auto same = config::parse_config("");
    CHECK(config::canonical(base) == config::canonical(same));

    auto tweaked = base;
    tweaked.seed = 43;
    CHECK(config::canonical(tweaked) != config::canonical(base));

    tweaked = base;
    tweaked.completion.temperature = 0.25;
    CHECK(config::canonical(tweaked) != config::canonical(base));

    tweaked = base;
    tweaked.baselines.push_back("recency_tiebreak");
    CHECK(config::canonical(tweaked) != config::canonical(base));
}

TEST_CASE("the canonical form parses back to itself") {
    auto cfg = config::parse_config(
        "[dataset]\nname = demo\nmin_rating = 3.5\n"
        "[sampling]\nseed = 99\n"
        "[knowledge]\nvariant = his_i2i_path\nattach_attributes = true\n"
        "[eval]\nks = 2,4\nbaselines = pop\n");
    auto text = config::canonical(cfg);
    auto reparsed = config::parse_config(text);
    CHECK(config::canonical(reparsed) == text);
    CHECK(reparsed.dataset_name == "demo");
    CHECK(reparsed.min_rating == 3.5);
    CHECK(reparsed.seed == 99);
    CHECK(reparsed.variant == "his_i2i_path");
    CHECK(reparsed.attach_attrs);
    CHECK(reparsed.ks == std::vector<int>{2, 4});
    CHECK(reparsed.baselines == std::vector<std::string>{"pop"});
}

TEST_CASE("load_config reads a file and surfaces missing paths") {
    std::string path = "/tmp/knowrank_config_test_" + std::to_string(::getpid()) + ".conf";
    util::write_file(path, "[output]\ndir = ./somewhere\n");
    auto cfg = config::load_config(path);
    CHECK(cfg.out_dir == "./somewhere");
    std::remove(path.c_str());

    CHECK_THROWS_AS(config::load_config("/nonexistent/knowrank.conf"), Error);
}
