#include "knowrank/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "knowrank/util/errors.hpp"
#include "knowrank/util/io.hpp"
#include "knowrank/util/text.hpp"

namespace knowrank::eval {


namespace {

// 1-based rank of the truth candidate in the permutation.
int rank_of(const gateway::RankedList& ranked, int truth_index) {
    for (size_t pos = 0; pos < ranked.order.size(); ++pos)
        if (ranked.order[pos] == truth_index) return static_cast<int>(pos) + 1;
    throw Error(ErrorCode::MalformedInput, "truth index missing from ranking");
}

}  // namespace

double ndcg_at_k(const gateway::RankedList& ranked, int truth_index, int k) {
    int r = rank_of(ranked, truth_index);
    if (r > k) return 0.0;
    return 1.0 / std::log2(static_cast<double>(r) + 1.0);
}

double hit_at_k(const gateway::RankedList& ranked, int truth_index, int k) {
    return rank_of(ranked, truth_index) <= k ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------
// Baselines

BaselineMethod baseline_from_name(const std::string& name) {
    static const std::map<std::string, BaselineMethod> table = {
        {"pop", BaselineMethod::pop},
        {"item_cf", BaselineMethod::item_cf},
        {"bm25", BaselineMethod::bm25},
        {"mf", BaselineMethod::mf},
        {"recency_tiebreak", BaselineMethod::recency_tiebreak},
    };
    auto it = table.find(name);
    if (it == table.end()) throw Error(ErrorCode::ConfigError, "unknown baseline: " + name);
    return it->second;
}

std::string baseline_name(BaselineMethod method) {
    switch (method) {
        case BaselineMethod::pop: return "pop";
        case BaselineMethod::item_cf: return "item_cf";
        case BaselineMethod::bm25: return "bm25";
        case BaselineMethod::mf: return "mf";
        case BaselineMethod::recency_tiebreak: return "recency_tiebreak";
    }
    return "pop";
}

namespace {

std::vector<double> bm25_scores(const corpus::RankingTask& task,
                                const corpus::ItemCatalog& catalog) {
    const double k1 = 1.2, b = 0.75;
    auto title = [&catalog](const std::string& item_id) {
        const auto* record = catalog.find(item_id);
        return record ? record->title : item_id;
    };

    // Candidate titles are the document collection; the concatenated
    // history titles are the query.
    std::vector<std::vector<std::string>> docs;
    for (const auto& candidate : task.candidates) docs.push_back(util::tokenize(title(candidate)));
    double avgdl = 0.0;
    for (const auto& doc : docs) avgdl += static_cast<double>(doc.size());
    avgdl /= std::max<size_t>(1, docs.size());

    std::unordered_map<std::string, int> df;
    for (const auto& doc : docs) {
        std::unordered_map<std::string, bool> seen;
        for (const auto& t : doc)
            if (!seen.count(t)) {
                seen[t] = true;
                df[t]++;
            }
    }
    const double n_docs = static_cast<double>(docs.size());

    std::vector<std::string> query;
    for (const auto& item : task.history) {
        auto tokens = util::tokenize(title(item));
        query.insert(query.end(), tokens.begin(), tokens.end());
    }

    std::vector<double> scores(docs.size(), 0.0);
    for (size_t d = 0; d < docs.size(); ++d) {
        std::unordered_map<std::string, int> tf;
        for (const auto& t : docs[d]) tf[t]++;
        double dl = static_cast<double>(docs[d].size());
        for (const auto& q : query) {
            auto it = tf.find(q);
            if (it == tf.end()) continue;
            auto df_it = df.find(q);
            double idf =
                std::log(1.0 + (n_docs - df_it->second + 0.5) / (df_it->second + 0.5));
            double freq = static_cast<double>(it->second);
            scores[d] += idf * freq * (k1 + 1.0) /
                         (freq + k1 * (1.0 - b + b * dl / (avgdl > 0.0 ? avgdl : 1.0)));
        }
    }
    return scores;
}

}  // namespace

gateway::RankedList rank_baseline(const corpus::RankingTask& task, BaselineMethod method,
                                  const BaselineIndices& indices) {
    const size_t n = task.candidates.size();
    std::vector<double> scores(n, 0.0);

    switch (method) {
        case BaselineMethod::pop: {
            if (!indices.pop_counts)
                throw Error(ErrorCode::MissingIndex, "pop needs train frequencies");
            for (size_t i = 0; i < n; ++i) {
                auto it = indices.pop_counts->find(task.candidates[i]);
                scores[i] = it != indices.pop_counts->end() ? static_cast<double>(it->second) : 0.0;
            }
            break;
        }
        case BaselineMethod::item_cf: {
            if (!indices.stats)
                throw Error(ErrorCode::MissingIndex, "item_cf needs co-occurrence stats");
            for (size_t i = 0; i < n; ++i) {
                const auto& candidate = task.candidates[i];
                if (!indices.stats->has_item(candidate)) continue;
                double total = 0.0;
                for (const auto& h : task.history) {
                    if (h == candidate || !indices.stats->has_item(h)) continue;
                    total += cf::item_relevance(*indices.stats, h, candidate);
                }
                scores[i] = total;
            }
            break;
        }
        case BaselineMethod::bm25: {
            if (!indices.catalog) throw Error(ErrorCode::MissingIndex, "bm25 needs the catalog");
            scores = bm25_scores(task, *indices.catalog);
            break;
        }
        case BaselineMethod::mf: {
            if (!indices.table) throw Error(ErrorCode::MissingIndex, "mf needs the embedding table");
            const auto& table = *indices.table;
            std::vector<double> user_vec;
            if (table.has_user(task.user_id)) {
                user_vec = table.user_vec(task.user_id);
            } else {
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
            for (size_t i = 0; i < n; ++i)
                if (table.has_item(task.candidates[i]))
                    scores[i] = cf::dot(user_vec, table.item_vec(task.candidates[i]));
            break;
        }
        case BaselineMethod::recency_tiebreak: {
            if (!indices.stats)
                throw Error(ErrorCode::MissingIndex, "recency_tiebreak needs co-occurrence stats");
            if (!task.history.empty()) {
                const auto& recent = task.history.back();
                if (indices.stats->has_item(recent))
                    for (size_t i = 0; i < n; ++i) {
                        const auto& candidate = task.candidates[i];
                        if (candidate == recent || !indices.stats->has_item(candidate)) continue;
                        scores[i] = cf::item_relevance(*indices.stats, recent, candidate);
                    }
            }
            break;
        }
    }

    std::vector<int> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&scores](int a, int b) { return scores[a] > scores[b]; });

    gateway::RankedList ranked;
    ranked.order = std::move(order);
    ranked.parse_report.matched = static_cast<int>(n);
    return ranked;
}

// ---------------------------------------------------------------------------
// Aggregation

MetricReport evaluate_run(const std::vector<corpus::RankingTask>& tasks,
                          const std::vector<gateway::RankedList>& rankings,
                          const std::vector<int>& ks, const std::string& variant) {
    if (tasks.size() != rankings.size())
        throw Error(ErrorCode::MalformedInput, "tasks and rankings must pair up");
    MetricReport report;
    report.ks = ks;
    for (int k : ks) {
        report.means["ndcg@" + std::to_string(k)] = 0.0;
        report.means["hr@" + std::to_string(k)] = 0.0;
    }
    for (size_t i = 0; i < tasks.size(); ++i) {
        const auto& task = tasks[i];
        SampleRecord record;
        record.user_id = task.user_id;
        record.strategy = corpus::to_string(task.strategy);
        record.variant = variant;
        record.truth_item = task.candidates.at(task.truth_index);
        record.history_length = static_cast<int>(task.history.size());
        record.rank_of_truth = rank_of(rankings[i], task.truth_index);
        report.samples.push_back(std::move(record));
        for (int k : ks) {
            report.means["ndcg@" + std::to_string(k)] += ndcg_at_k(rankings[i], task.truth_index, k);
            report.means["hr@" + std::to_string(k)] += hit_at_k(rankings[i], task.truth_index, k);
        }
    }
    if (!report.samples.empty())
        for (auto& [name, total] : report.means) total /= static_cast<double>(report.samples.size());
    return report;
}

std::string report_to_json(const MetricReport& report) {
    nlohmann::json j;
    j["ks"] = report.ks;
    j["count"] = report.samples.size();
    nlohmann::json means;
    for (const auto& [name, value] : report.means) means[name] = value;
    j["means"] = std::move(means);
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : report.samples)
        samples.push_back({{"user", s.user_id},
                           {"strategy", s.strategy},
                           {"variant", s.variant},
                           {"truth_item", s.truth_item},
                           {"history_length", s.history_length},
                           {"rank", s.rank_of_truth}});
    j["samples"] = std::move(samples);
    return j.dump(2) + "\n";
}

MetricReport report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    MetricReport report;
    report.ks = j.at("ks").get<std::vector<int>>();
    for (const auto& [name, value] : j.at("means").items())
        report.means[name] = value.get<double>();
    for (const auto& s : j.at("samples")) {
        SampleRecord record;
        record.user_id = s.at("user").get<std::string>();
        record.strategy = s.at("strategy").get<std::string>();
        record.variant = s.at("variant").get<std::string>();
        record.truth_item = s.at("truth_item").get<std::string>();
        record.history_length = s.at("history_length").get<int>();
        record.rank_of_truth = s.at("rank").get<int>();
        report.samples.push_back(std::move(record));
    }
    return report;
}

std::string report_to_table(const MetricReport& report) {
    // One row of metric means with Table-2-style columns: N@k then HR for
    // the largest k.
    std::ostringstream out;
    std::vector<std::string> headers;
    for (int k : report.ks) headers.push_back("N@" + std::to_string(k));
    if (!report.ks.empty()) headers.push_back("HR@" + std::to_string(report.ks.back()));
    headers.push_back("samples");

    std::vector<std::string> cells;
    char buf[32];
    for (int k : report.ks) {
        std::snprintf(buf, sizeof(buf), "%.4f", report.means.at("ndcg@" + std::to_string(k)));
        cells.push_back(buf);
    }
    if (!report.ks.empty()) {
        std::snprintf(buf, sizeof(buf), "%.4f",
                      report.means.at("hr@" + std::to_string(report.ks.back())));
        cells.push_back(buf);
    }
    cells.push_back(std::to_string(report.samples.size()));

    for (size_t i = 0; i < headers.size(); ++i) {
        size_t width = std::max(headers[i].size(), cells[i].size());
        out << (i ? "  " : "") << std::string(width - headers[i].size(), ' ') << headers[i];
    }
    out << '\n';
    for (size_t i = 0; i < cells.size(); ++i) {
        size_t width = std::max(headers[i].size(), cells[i].size());
        out << (i ? "  " : "") << std::string(width - cells[i].size(), ' ') << cells[i];
    }
    out << '\n';
    return out.str();
}

std::string samples_to_tsv(const MetricReport& report) {
    std::string out = "user\tstrategy\tvariant\ttruth_item\thistory_length\trank\n";
    for (const auto& s : report.samples) {
        out += s.user_id + "\t" + s.strategy + "\t" + s.variant + "\t" + s.truth_item + "\t" +
               std::to_string(s.history_length) + "\t" + std::to_string(s.rank_of_truth) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Group analysis

GroupAxis axis_from_name(const std::string& name) {
    if (name == "item_popularity") return GroupAxis::item_popularity;
    if (name == "history_length") return GroupAxis::history_length;
    throw Error(ErrorCode::ConfigError, "unknown grouping axis: " + name);
}

double axis_value(const SampleRecord& record, GroupAxis axis,
                  const std::map<std::string, int64_t>& pop_counts) {
    if (axis == GroupAxis::history_length) return static_cast<double>(record.history_length);
    auto it = pop_counts.find(record.truth_item);
    return it != pop_counts.end() ? static_cast<double>(it->second) : 0.0;
}

double median_boundary(const MetricReport& report, GroupAxis axis,
                       const std::map<std::string, int64_t>& pop_counts) {
    std::vector<double> values;
    for (const auto& s : report.samples) values.push_back(axis_value(s, axis, pop_counts));
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

MetricReport recompute(const std::vector<SampleRecord>& samples, const std::vector<int>& ks) {
    MetricReport report;
    report.ks = ks;
    report.samples = samples;
    for (int k : ks) {
        double ndcg = 0.0, hr = 0.0;
        for (const auto& s : samples) {
            if (s.rank_of_truth <= k) {
                ndcg += 1.0 / std::log2(static_cast<double>(s.rank_of_truth) + 1.0);
                hr += 1.0;
            }
        }
        double denom = samples.empty() ? 1.0 : static_cast<double>(samples.size());
        report.means["ndcg@" + std::to_string(k)] = ndcg / denom;
        report.means["hr@" + std::to_string(k)] = hr / denom;
    }
    return report;
}

}  // namespace

GroupReport group_report(const MetricReport& report, const GroupingSpec& spec,
                         const std::map<std::string, int64_t>& pop_counts) {
    std::vector<SampleRecord> low, high;
    for (const auto& s : report.samples)
        (axis_value(s, spec.axis, pop_counts) <= spec.boundary ? low : high).push_back(s);
    GroupReport grouped;
    grouped.spec = spec;
    grouped.low = recompute(low, report.ks);
    grouped.high = recompute(high, report.ks);
    grouped.degenerate = low.empty() || high.empty();
    return grouped;
}

// ---------------------------------------------------------------------------
// Paired t-test

namespace {

// Regularized incomplete beta via the continued fraction (Lentz's method).
double betacf(double a, double b, double x) {
    const int max_iter = 200;
    const double eps = 3e-14, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

double reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

TTestResult t_test_paired(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw Error(ErrorCode::MalformedInput, "paired t-test needs two equal samples of size >= 2");
    const size_t n = a.size();
    std::vector<double> diff(n);
    for (size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
    double mean = 0.0;
    for (double d : diff) mean += d;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double d : diff) var += (d - mean) * (d - mean);
    var /= static_cast<double>(n - 1);

    TTestResult result;
    result.df = static_cast<int>(n) - 1;
    if (var == 0.0) {
        result.t = mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity() * (mean > 0 ? 1 : -1);
        result.p = mean == 0.0 ? 1.0 : 0.0;
        return result;
    }
    result.t = mean / std::sqrt(var / static_cast<double>(n));
    double df = static_cast<double>(result.df);
    result.p = reg_inc_beta(df / 2.0, 0.5, df / (df + result.t * result.t));
    return result;
}

}  // namespace knowrank::eval
