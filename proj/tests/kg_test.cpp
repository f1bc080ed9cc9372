#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "knowrank/cf.hpp"
#include "knowrank/corpus.hpp"
#include "knowrank/kg.hpp"
#include "knowrank/util/errors.hpp"
#include "knowrank/util/rng.hpp"

using namespace knowrank;
using corpus::InteractionLog;

namespace {

corpus::ItemCatalog small_catalog() {
    corpus::ItemCatalog catalog;
    catalog.put("m1", {"Zootopia", {{"genre", "Animation"}, {"genre", "Adventure"}}});
    catalog.put("m2", {"Moana", {{"genre", "Animation"}, {"genre", "Adventure"}}});
    catalog.put("m3", {"Heat", {{"genre", "Crime"}}});
    return catalog;
}

InteractionLog clicks(const std::vector<std::pair<std::string, std::string>>& events) {
    InteractionLog log;
    int64_t ts = 0;
    for (const auto& [u, i] : events) log.add({u, i, 5.0, ++ts});
    log.finalize();
    return log;
}

}  // namespace

TEST_CASE("exact title match links with cosine one") {
    corpus::ItemCatalog catalog;
    catalog.put("m1", {"The Dark Crystal", {}});
    kg::TripleStore external;
    external.labels["Q1"] = "The Dark Crystal";
    external.labels["Q2"] = "Completely Unrelated Gardening Manual";
    auto links = kg::link_entities(catalog, external, 0.7);
    REQUIRE(links.count("m1") == 1);
    CHECK(links.at("m1").entity_id == "Q1");
    CHECK(links.at("m1").score == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("no shared token means no link") {
    corpus::ItemCatalog catalog;
    catalog.put("m1", {"Zootopia", {}});
    kg::TripleStore external;
    external.labels["Q1"] = "Gardening Manual";
    auto links = kg::link_entities(catalog, external, 0.7);
    CHECK(links.count("m1") == 0);
}

TEST_CASE("linking matches an exhaustive tf-idf cosine oracle") {
    // 5 items vs 10 labels; the oracle recomputes tf-idf (tf = raw count,
    // idf = ln((1+N)/(1+df)) + 1 over the label collection, L2-normalized)
    // from scratch with its own tokenizer.
    corpus::ItemCatalog catalog;
    catalog.put("i1", {"blue planet ocean", {}});
    catalog.put("i2", {"red planet mars mission", {}});
    catalog.put("i3", {"ocean deep dive", {}});
    catalog.put("i4", {"ancient rome history", {}});
    catalog.put("i5", {"quantum garden", {}});
    std::map<std::string, std::string> labels = {
        {"Q1", "blue planet ocean"},        {"Q2", "red planet mars"},
        {"Q3", "deep ocean dive"},          {"Q4", "rome ancient history empire"},
        {"Q5", "garden flowers"},           {"Q6", "mars mission launch"},
        {"Q7", "blue whale"},               {"Q8", "planet formation theory"},
        {"Q9", "history of science"},       {"Q10", "quantum field theory"}};
    kg::TripleStore external;
    external.labels = labels;

    auto tokenize = [](const std::string& text) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : text) {
            if (std::isalnum(static_cast<unsigned char>(c)))
                cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            else if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        }
        if (!cur.empty()) out.push_back(cur);
        // Drop the one stopword appearing in this fixture.
        std::erase(out, "of");
        return out;
    };

    // Document frequency over labels only.
    std::map<std::string, int> df;
    for (const auto& [id, label] : labels) {
        std::set<std::string> seen;
        for (const auto& tok : tokenize(label)) seen.insert(tok);
        for (const auto& tok : seen) ++df[tok];
    }
    double N = static_cast<double>(labels.size());
    auto idf = [&](const std::string& tok) {
        auto it = df.find(tok);
        double d = it == df.end() ? 0.0 : it->second;
        return std::log((1.0 + N) / (1.0 + d)) + 1.0;
    };
    auto vectorize = [&](const std::string& text) {
        std::map<std::string, double> v;
        for (const auto& tok : tokenize(text)) v[tok] += 1.0;
        double norm = 0.0;
        for (auto& [tok, tf] : v) {
            tf *= idf(tok);
            norm += tf * tf;
        }
        norm = std::sqrt(norm);
        if (norm > 0)
            for (auto& [tok, w] : v) w /= norm;
        return v;
    };
    auto cosine = [&](const std::string& a, const std::string& b) {
        auto va = vectorize(a), vb = vectorize(b);
        double s = 0.0;
        for (const auto& [tok, w] : va) {
            auto it = vb.find(tok);
            if (it != vb.end()) s += w * it->second;
        }
        return s;
    };

    const double threshold = 0.7;
    auto links = kg::link_entities(catalog, external, threshold);
    for (const auto& [item, rec] : catalog.records()) {
        std::string best_id;
        double best = 0.0;
        for (const auto& [qid, label] : labels) {
            double score = cosine(rec.title, label);
            if (score > best || (score == best && !best_id.empty() && qid < best_id)) {
                // strictly-greater keeps the lowest id on exact ties
                if (score > best) {
                    best = score;
                    best_id = qid;
                }
            }
        }
        if (best >= threshold) {
            REQUIRE(links.count(item) == 1);
            CHECK(links.at(item).entity_id == best_id);
            CHECK(links.at(item).score == doctest::Approx(best).epsilon(1e-9));
        } else {
            CHECK(links.count(item) == 0);
        }
    }
}

TEST_CASE("link map round-trips through TSV") {
    kg::LinkMap links;
    links["m1"] = {"Q64", 0.875};
    auto back = kg::linkmap_from_tsv(kg::linkmap_to_tsv(links));
    REQUIRE(back.count("m1") == 1);
    CHECK(back.at("m1").entity_id == "Q64");
    CHECK(back.at("m1").score == 0.875);
}

TEST_CASE("domain graph materializes attribute, co-click and external edges") {
    auto catalog = small_catalog();
    auto train = clicks({{"u1", "m1"}, {"u1", "m2"}, {"u2", "m3"}, {"u2", "m1"}});
    auto stats = cf::count_cooccurrence(train);

    kg::TripleStore external;
    external.labels["Q1"] = "Zootopia";
    external.labels["Q2"] = "Walt Disney Pictures";
    external.triples.push_back({"Q1", "production_company", "Q2"});
    auto links = kg::link_entities(catalog, external, 0.7);
    REQUIRE(links.count("m1") == 1);

    auto g = kg::build_domain_graph(catalog, train, links, external, stats);

    // Two genre edges for m1 (plus inverses).
    auto genre_anim = kg::KnowledgeGraph::attr_node("genre", "Animation");
    auto genre_adv = kg::KnowledgeGraph::attr_node("genre", "Adventure");
    auto m1 = kg::KnowledgeGraph::item_node("m1");
    auto m2 = kg::KnowledgeGraph::item_node("m2");
    auto m3 = kg::KnowledgeGraph::item_node("m3");
    CHECK(g.has_edge(m1, "has_genre", genre_anim));
    CHECK(g.has_edge(m1, "has_genre", genre_adv));
    CHECK(g.has_edge(genre_anim, "genre_of", m1));

    // Co-click edges only where the pair count is nonzero.
    CHECK(g.has_edge(m1, "co_click", m2));
    CHECK(g.has_edge(m2, "co_click", m1));
    CHECK(g.has_edge(m1, "co_click", m3));
    CHECK_FALSE(g.has_edge(m2, "co_click", m3));

    // External link and its neighborhood, with typed inverses.
    auto q1 = kg::KnowledgeGraph::entity_node("Q1");
    auto q2 = kg::KnowledgeGraph::entity_node("Q2");
    CHECK(g.has_edge(m1, "linked_to", q1));
    CHECK(g.has_edge(q1, "link_of", m1));
    CHECK(g.has_edge(q1, "production_company", q2));
    CHECK(g.has_edge(q2, "inv_production_company", q1));
    CHECK(g.label(q2) == "Walt Disney Pictures");

    // Brute-force node census: 3 items + 3 attr values + 2 entities.
    CHECK(g.node_count() == 8);
}

TEST_CASE("external neighborhood stops at two hops") {
    corpus::ItemCatalog catalog;
    catalog.put("m1", {"Alpha", {}});
    auto train = clicks({{"u1", "m1"}});
    auto stats = cf::count_cooccurrence(train);
    kg::TripleStore external;
    external.labels["Q1"] = "Alpha";
    external.triples.push_back({"Q1", "r", "Q2"});
    external.triples.push_back({"Q2", "r", "Q3"});
    external.triples.push_back({"Q3", "r", "Q4"});  // three hops out: excluded
    auto links = kg::link_entities(catalog, external, 0.7);
    auto g = kg::build_domain_graph(catalog, train, links, external, stats);
    CHECK(g.has_node(kg::KnowledgeGraph::entity_node("Q2")));
    CHECK(g.has_node(kg::KnowledgeGraph::entity_node("Q3")));
    CHECK_FALSE(g.has_node(kg::KnowledgeGraph::entity_node("Q4")));
}

TEST_CASE("genre chain between two movies is enumerated") {
    auto catalog = small_catalog();
    auto train = clicks({{"u1", "m1"}, {"u1", "m2"}});
    auto stats = cf::count_cooccurrence(train);
    auto g = kg::build_domain_graph(catalog, train, {}, {}, stats);

    auto paths = kg::enumerate_paths(g, "m1", "m2", 3, 64);
    REQUIRE_FALSE(paths.empty());

    auto m1 = kg::KnowledgeGraph::item_node("m1");
    auto m2 = kg::KnowledgeGraph::item_node("m2");
    auto genre_anim = kg::KnowledgeGraph::attr_node("genre", "Animation");
    kg::ReasoningPath genre_path;
    genre_path.nodes = {m1, genre_anim, m2};
    genre_path.relations = {"has_genre", "genre_of"};
    CHECK(std::find(paths.begin(), paths.end(), genre_path) != paths.end());

    // The direct co_click edge between the query pair itself is excluded.
    kg::ReasoningPath direct;
    direct.nodes = {m1, m2};
    direct.relations = {"co_click"};
    CHECK(std::find(paths.begin(), paths.end(), direct) == paths.end());

    // Every returned path replays as existing graph edges.
    for (const auto& path : paths) {
        REQUIRE(path.nodes.size() == path.relations.size() + 1);
        CHECK(path.length() <= 3);
        CHECK(path.nodes.front() == m1);
        CHECK(path.nodes.back() == m2);
        std::set<std::string> unique(path.nodes.begin(), path.nodes.end());
        CHECK(unique.size() == path.nodes.size());  // simple path
        for (size_t t = 0; t < path.relations.size(); ++t)
            CHECK(g.has_edge(path.nodes[t], path.relations[t], path.nodes[t + 1]));
    }
}

TEST_CASE("disconnected pairs yield no paths and unknown items throw") {
    corpus::ItemCatalog catalog;
    catalog.put("a", {"Alpha", {{"genre", "X"}}});
    catalog.put("b", {"Beta", {{"genre", "Y"}}});
    auto train = clicks({{"u1", "a"}, {"u2", "b"}});
    auto stats = cf::count_cooccurrence(train);
    auto g = kg::build_domain_graph(catalog, train, {}, {}, stats);
    CHECK(kg::enumerate_paths(g, "a", "b", 3, 64).empty());
    CHECK_THROWS_AS(kg::enumerate_paths(g, "a", "ghost", 3, 64), Error);
}

TEST_CASE("path enumeration equals a brute-force DFS oracle") {
    auto catalog = small_catalog();
    auto train = clicks({{"u1", "m1"}, {"u1", "m2"}, {"u2", "m2"}, {"u2", "m3"}, {"u3", "m1"},
                         {"u3", "m3"}});
    auto stats = cf::count_cooccurrence(train);
    auto g = kg::build_domain_graph(catalog, train, {}, {}, stats);

    auto m1 = kg::KnowledgeGraph::item_node("m1");
    auto m2 = kg::KnowledgeGraph::item_node("m2");

    // Independent recursive enumeration over the adjacency lists.
    std::vector<kg::ReasoningPath> oracle;
    std::vector<std::string> nodes = {m1};
    std::vector<std::string> rels;
    std::set<std::string> visited = {m1};
    auto walk = [&](auto&& self, const std::string& at) -> void {
        if (at == m2 && !rels.empty()) {
            kg::ReasoningPath p;
            p.nodes = nodes;
            p.relations = rels;
            oracle.push_back(p);
            return;
        }
        if (rels.size() == 3) return;
        for (const auto& [rel, next] : g.neighbors(at)) {
            if (visited.count(next)) continue;
            if (nodes.size() == 1 && next == m2 && rel == "co_click") continue;
            nodes.push_back(next);
            rels.push_back(rel);
            visited.insert(next);
            self(self, next);
            visited.erase(next);
            rels.pop_back();
            nodes.pop_back();
        }
    };
    walk(walk, m1);

    auto got = kg::enumerate_paths(g, "m1", "m2", 3, 1000);
    REQUIRE(got.size() == oracle.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == oracle[i]);

    // max_paths truncates to a prefix of the same order.
    auto truncated = kg::enumerate_paths(g, "m1", "m2", 3, 2);
    REQUIRE(truncated.size() == 2);
    CHECK(truncated[0] == got[0]);
    CHECK(truncated[1] == got[1]);

    // max_len = 2 keeps exactly the short oracle paths.
    auto short_paths = kg::enumerate_paths(g, "m1", "m2", 2, 1000);
    size_t expect_short = 0;
    for (const auto& p : oracle)
        if (p.length() <= 2) ++expect_short;
    CHECK(short_paths.size() == expect_short);
}

namespace {

struct ScorerFixture {
    corpus::ItemCatalog catalog;
    InteractionLog train;
    cf::CooccurrenceStats stats;
    kg::KnowledgeGraph graph;

    ScorerFixture() {
        catalog = small_catalog();
        train = clicks({{"u1", "m1"}, {"u1", "m2"}, {"u2", "m2"}, {"u2", "m3"}});
        stats = cf::count_cooccurrence(train);
        graph = kg::build_domain_graph(catalog, train, {}, {}, stats);
    }
};

}  // namespace

TEST_CASE("pair relevance is sigma of the mean path score") {
    ScorerFixture fx;
    kg::PathScorerConfig config;
    config.dim = 4;
    config.buckets = 8;
    kg::PathScorer scorer({"has_genre", "genre_of", "co_click"}, config);

    auto paths = kg::enumerate_paths(fx.graph, "m1", "m2", 3, 64);
    REQUIRE_FALSE(paths.empty());
    double mean = 0.0;
    for (const auto& p : paths) mean += scorer.path_score(fx.graph, p);
    mean /= static_cast<double>(paths.size());
    double expected = 1.0 / (1.0 + std::exp(-mean));
    CHECK(scorer.pair_relevance(fx.graph, paths) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(scorer.pair_relevance(fx.graph, paths) > 0.0);
    CHECK(scorer.pair_relevance(fx.graph, paths) < 1.0);
    CHECK_THROWS_AS(scorer.pair_relevance(fx.graph, {}), Error);

    // Frozen sigmoid values: mean 0 -> 0.5, mean 2 -> 0.8807970779778823.
    CHECK(1.0 / (1.0 + std::exp(-0.0)) == 0.5);
    CHECK(1.0 / (1.0 + std::exp(-2.0)) == doctest::Approx(0.8807970779778823).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
    ScorerFixture fx;
    kg::PathScorerConfig config;
    config.dim = 4;
    config.buckets = 8;
    config.seed = 13;
    kg::PathScorer scorer({"has_genre", "genre_of", "co_click"}, config);

    auto paths12 = kg::enumerate_paths(fx.graph, "m1", "m2", 3, 8);
    auto paths13 = kg::enumerate_paths(fx.graph, "m1", "m3", 3, 8);
    REQUIRE_FALSE(paths12.empty());
    REQUIRE_FALSE(paths13.empty());
    std::vector<kg::PathScorer::LabeledPair> pairs = {{paths12, true}, {paths13, false}};

    std::vector<double> grad;
    double loss0 = scorer.loss_and_gradient(fx.graph, pairs, &grad);
    CHECK(loss0 == doctest::Approx(scorer.loss(fx.graph, pairs)).epsilon(1e-12));

    auto params = scorer.parameters();
    REQUIRE(grad.size() == params.size());
    const double h = 1e-6;
    double max_rel_err = 0.0;
    int checked = 0;
    for (size_t i = 0; i < params.size(); ++i) {
        auto plus = params, minus = params;
        plus[i] += h;
        minus[i] -= h;
        scorer.set_parameters(plus);
        double lp = scorer.loss(fx.graph, pairs);
        scorer.set_parameters(minus);
        double lm = scorer.loss(fx.graph, pairs);
        scorer.set_parameters(params);
        double numeric = (lp - lm) / (2.0 * h);
        double denom = std::max({std::fabs(numeric), std::fabs(grad[i]), 1e-8});
        if (std::fabs(numeric) > 1e-10 || std::fabs(grad[i]) > 1e-10) {
            max_rel_err = std::max(max_rel_err, std::fabs(numeric - grad[i]) / denom);
            ++checked;
        }
    }
    CHECK(checked > 0);
    CHECK(max_rel_err < 1e-4);
}

TEST_CASE("scorer training separates genre-sharing pairs with AUC >= 0.9") {
    // Synthetic graph with a structural signal: 8 "g" items share one genre
    // and are co-clicked by 10 shared fan users (pair relevance 10/11, well
    // above theta), so every positive pair carries a has_genre/genre_of
    // path. 8 attribute-free "c" items each touch one g item through a
    // single user and get 25 solo clicks to dilute relevance (1/sqrt(286)),
    // so below-theta pairs connect only through co_click chains.
    corpus::ItemCatalog catalog;
    InteractionLog log;
    int64_t ts = 0;
    for (int i = 0; i < 8; ++i)
        catalog.put("g" + std::to_string(i),
                    {"Genre Film " + std::to_string(i), {{"genre", "Shared"}}});
    for (int i = 0; i < 8; ++i) catalog.put("c" + std::to_string(i), {"Chain", {}});
    for (int u = 0; u < 10; ++u)
        for (int i = 0; i < 8; ++i)
            log.add({"fan" + std::to_string(u), "g" + std::to_string(i), 5.0, ++ts});
    for (int i = 0; i < 8; ++i) {
        log.add({"lone" + std::to_string(i), "c" + std::to_string(i), 5.0, ++ts});
        log.add({"lone" + std::to_string(i), "g" + std::to_string(i), 5.0, ++ts});
        for (int s = 0; s < 25; ++s)
            log.add({"solo" + std::to_string(i) + "_" + std::to_string(s),
                     "c" + std::to_string(i), 5.0, ++ts});
    }
    log.finalize();
    auto stats = cf::count_cooccurrence(log);
    auto g = kg::build_domain_graph(catalog, log, {}, {}, stats);

    const double theta = 0.2;
    CHECK(cf::item_relevance(stats, "g0", "g1") > theta);
    CHECK(cf::item_relevance(stats, "c0", "g0") < theta);

    kg::PathScorerConfig config;
    config.dim = 8;
    config.buckets = 16;
    config.epochs = 40;
    config.lr = 0.1;
    config.seed = 5;
    config.neg_ratio = 1;
    config.max_path_len = 2;
    config.max_paths = 16;
    kg::PathTrainSummary summary;
    auto scorer = kg::train_path_scorer(g, stats, theta, config, &summary);
    CHECK(scorer.trained());
    CHECK(summary.positives > 0);
    CHECK(summary.negatives > 0);
    CHECK(summary.final_loss <= summary.initial_loss);

    // AUC over the relevance-derived label set itself: every above-theta
    // pair vs every cross-group pair that has a path.
    std::vector<double> pos_scores, neg_scores;
    for (int a = 0; a < 8; ++a)
        for (int b = a + 1; b < 8; ++b) {
            auto paths = kg::enumerate_paths(g, "g" + std::to_string(a), "g" + std::to_string(b),
                                             config.max_path_len, config.max_paths);
            REQUIRE_FALSE(paths.empty());
            pos_scores.push_back(scorer.pair_relevance(g, paths));
        }
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            auto paths = kg::enumerate_paths(g, "c" + std::to_string(i), "g" + std::to_string(j),
                                             config.max_path_len, config.max_paths);
            if (!paths.empty()) neg_scores.push_back(scorer.pair_relevance(g, paths));
        }
    REQUIRE_FALSE(pos_scores.empty());
    REQUIRE_FALSE(neg_scores.empty());
    int64_t wins = 0, ties = 0;
    for (double p : pos_scores)
        for (double n : neg_scores) {
            if (p > n)
                ++wins;
            else if (p == n)
                ++ties;
        }
    double auc = (wins + 0.5 * ties) /
                 (static_cast<double>(pos_scores.size()) * static_cast<double>(neg_scores.size()));
    CHECK(auc >= 0.9);
}

TEST_CASE("scorer training is deterministic and zero-epoch is initialization") {
    ScorerFixture fx;
    kg::PathScorerConfig config;
    config.dim = 4;
    config.buckets = 8;
    config.epochs = 5;
    config.seed = 21;
    kg::PathTrainSummary s1, s2;
    auto a = kg::train_path_scorer(fx.graph, fx.stats, 0.2, config, &s1);
    auto b = kg::train_path_scorer(fx.graph, fx.stats, 0.2, config, &s2);
    CHECK(a.parameters() == b.parameters());
    CHECK(s1.final_loss == s2.final_loss);

    config.epochs = 0;
    auto init = kg::train_path_scorer(fx.graph, fx.stats, 0.2, config);
    kg::PathScorer untouched({"co_click", "genre_of", "has_genre"}, config);
    CHECK(init.parameters() == untouched.parameters());

    CHECK_THROWS_AS(kg::train_path_scorer(fx.graph, fx.stats, 0.999999, config), Error);
}

TEST_CASE("best path takes the argmax with deterministic tie-breaks") {
    ScorerFixture fx;
    kg::PathScorerConfig config;
    config.dim = 4;
    config.buckets = 8;
    kg::PathScorer scorer({"has_genre", "genre_of", "co_click"}, config);
    auto paths = kg::enumerate_paths(fx.graph, "m1", "m2", 3, 64);
    REQUIRE(paths.size() >= 2);

    auto best = kg::best_path(scorer, fx.graph, paths);
    double best_score = -1e300;
    for (const auto& p : paths) best_score = std::max(best_score, scorer.path_score(fx.graph, p));
    CHECK(best.score == doctest::Approx(best_score).epsilon(1e-12));

    // Singleton argmax.
    auto only = kg::best_path(scorer, fx.graph, {paths[0]});
    CHECK(only == paths[0]);
    CHECK_THROWS_AS(kg::best_path(scorer, fx.graph, {}), Error);
}

TEST_CASE("adding a constant to every path score keeps the argmax") {
    // Shifting all scores equally must not change which path wins; verified
    // by bumping the scorer's output bias, which shifts every s_t alike.
    ScorerFixture fx;
    kg::PathScorerConfig config;
    config.dim = 4;
    config.buckets = 8;
    config.seed = 9;
    kg::PathScorer scorer({"has_genre", "genre_of", "co_click"}, config);
    auto paths = kg::enumerate_paths(fx.graph, "m1", "m2", 3, 64);
    REQUIRE(paths.size() >= 2);
    auto before = kg::best_path(scorer, fx.graph, paths);

    auto params = scorer.parameters();
    params.back() += 5.0;  // output bias is the final flattened parameter
    scorer.set_parameters(params);
    auto after = kg::best_path(scorer, fx.graph, paths);
    CHECK(before == after);
}

TEST_CASE("path labels come from the graph and cache round-trips") {
    ScorerFixture fx;
    auto paths = kg::enumerate_paths(fx.graph, "m1", "m2", 3, 64);
    REQUIRE_FALSE(paths.empty());
    auto path = paths[0];
    kg::label_path(fx.graph, path);
    REQUIRE(path.labels.size() == path.nodes.size());
    CHECK(path.labels.front() == "Zootopia");
    CHECK(path.labels.back() == "Moana");

    kg::PathCache cache;
    path.score = 1.25;
    cache.put("m1", "m2", path);
    CHECK(cache.find("m2", "m1") != nullptr);  // unordered key
    auto back = kg::PathCache::from_jsonl(cache.to_jsonl());
    REQUIRE(back.find("m1", "m2") != nullptr);
    CHECK(*back.find("m1", "m2") == path);
    CHECK(back.find("m1", "m2")->labels == path.labels);
    CHECK(back.find("m1", "m2")->score == 1.25);
    CHECK(back.find("m1", "m3") == nullptr);
}

TEST_CASE("triple store parses TSV inputs") {
    auto store = kg::TripleStore::from_tsv("Q1\tgenre\tQ2\nQ2\tpart_of\tQ3\n",
                                           "Q1\tZootopia\nQ2\tAnimation\nQ3\tFilm genres\n");
    REQUIRE(store.triples.size() == 2);
    CHECK(store.triples[0] == std::array<std::string, 3>{"Q1", "genre", "Q2"});
    CHECK(store.labels.at("Q3") == "Film genres");
}
