// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include "gvqa/cli.hpp"
#include "gvqa/dataset.hpp"
#include "gvqa/evalharness.hpp"
#include "gvqa/guardrails.hpp"
#include "gvqa/imaging.hpp"
#include "gvqa/knowledge.hpp"
#include "gvqa/ragcore.hpp"
#include "gvqa/retrieval.hpp"
#include "support.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>

using namespace gvqa;
using gvqa::testing::fixture;
using gvqa::testing::slurp;
using gvqa::testing::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

int g_failures = 0;

void report(const char* name, const std::function<void(Verdict&)>& body) {
    Verdict v;
    const auto start = Clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.ok = false;
        v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (!v.ok) {
        ++g_failures;
    }
    std::printf("%s  %-28s %.3fs%s%s\n", v.ok ? "PASS" : "FAIL", name, secs, v.ok ? "" : "  ", v.detail.c_str());
}

std::vector<retrieval::KnowledgeDoc> docs_with_scores(const std::vector<double>& scores) {
    std::vector<retrieval::KnowledgeDoc> docs;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        retrieval::KnowledgeDoc d;
        char id[16];
        std::snprintf(id, sizeof(id), "d%03zu", i);
        d.doc_id = id;
        d.title = id;
        d.embedding.values = {scores[i]};
        docs.push_back(std::move(d));
    }
    return docs;
}

void softmax_ranking(Verdict& v) {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> dim(2, 50);
    std::uniform_real_distribution<double> shift(-50.0, 50.0);
    const backends::Embedding query{{1.0}};
    const auto start = Clock::now();
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = dim(rng);
        auto scores = gvqa::testing::random_vector(rng, n, -10.0, 10.0);
        if (trial % 10 == 0) {
            scores[n - 1] = scores[0];  // exercise the doc_id tie-break
        }
        const auto docs = docs_with_scores(scores);
        const auto full = retrieval::score_and_rank(query, docs, n);

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
        });
        const double top = scores[order[0]];
        double z = 0.0;
        for (double s : scores) {
            z += std::exp(s - top);
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += full.docs[i].prob;
            v.require(full.docs[i].doc.doc_id == docs[order[i]].doc_id, "rank order differs from sort");
            v.require(std::abs(full.docs[i].prob - std::exp(scores[order[i]] - top) / z) <= 1e-9,
                      "prob differs from direct softmax");
        }
        v.require(std::abs(sum - 1.0) <= 1e-9, "probs do not sum to 1");

        const double c = shift(rng);
        auto shifted = scores;
        for (double& s : shifted) {
            s += c;
        }
        const auto moved = retrieval::score_and_rank(query, docs_with_scores(shifted), n);
        for (std::size_t i = 0; i < n; ++i) {
            v.require(std::abs(moved.docs[i].prob - full.docs[i].prob) <= 1e-9, "softmax not shift-invariant");
        }

        const std::size_t k = 1 + trial % n;
        const auto topk = retrieval::score_and_rank(query, docs, k);
        v.require(topk.docs.size() == k, "top-k size");
        for (std::size_t i = 0; i < k; ++i) {
            v.require(topk.docs[i].doc.doc_id == full.docs[i].doc.doc_id, "top-k is not a prefix of the full ranking");
        }
    }
    v.require(std::chrono::duration<double>(Clock::now() - start).count() < 5.0, "slower than 5 s");
}

double direct_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
}

void grounding(Verdict& v) {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<std::size_t> dim(2, 64);
    std::uniform_int_distribution<std::size_t> count(1, 10);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t d = dim(rng);
        const backends::Embedding pred{gvqa::testing::random_vector(rng, d)};
        std::vector<backends::Embedding> gts(count(rng));
        double expected = 0.0;
        for (auto& gt : gts) {
            gt.values = gvqa::testing::random_vector(rng, d);
            expected += direct_cosine(pred.values, gt.values);
        }
        expected /= static_cast<double>(gts.size());
        const auto r = guardrails::grounding_from_embeddings(pred, gts, 0.5);
        v.require(std::abs(r.g_mean - expected) <= 1e-9, "g_mean differs from direct arithmetic");
        v.require(r.hallucinated == (expected < 0.5), "hallucination flag");

        std::shuffle(gts.begin(), gts.end(), rng);
        const auto p = guardrails::grounding_from_embeddings(pred, gts, 0.5);
        v.require(std::abs(p.g_mean - r.g_mean) <= 1e-12, "not permutation-invariant");

        if (std::abs(r.g_mean) < 0.999) {
            const auto at = guardrails::grounding_from_embeddings(pred, gts, p.g_mean);
            v.require(!at.hallucinated, "g == tau flagged as hallucinated");
        }
    }
    const backends::Embedding e1{{1.0, 0.0}};
    const std::vector<backends::Embedding> mixed{backends::Embedding{{1.0, 0.0}}, backends::Embedding{{0.0, 1.0}}};
    const auto half = guardrails::grounding_from_embeddings(e1, mixed, 0.5);
    v.require(half.g_mean == 0.5 && !half.hallucinated, "exact g = tau = 0.5 boundary");
}

void marginalization(Verdict& v) {
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<std::size_t> small(1, 5);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::uniform_real_distribution<double> lp(-12.0, 0.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = small(rng);
        const std::size_t nc = small(rng);
        retrieval::RetrievalSet set;
        double z = 0.0;
        std::vector<double> weights(k);
        for (double& w : weights) {
            w = u(rng);
            z += w;
        }
        for (std::size_t i = 0; i < k; ++i) {
            retrieval::ScoredDoc d;
            d.doc.doc_id = "z" + std::to_string(i);
            d.prob = weights[i] / z;
            set.docs.push_back(d);
        }
        set.k = k;
        std::vector<std::string> cands;
        std::map<std::pair<std::string, std::string>, double> table;
        for (std::size_t c = 0; c < nc; ++c) {
            cands.push_back("c" + std::to_string(c));
            for (const auto& d : set.docs) {
                table[{cands.back(), d.doc.doc_id}] = lp(rng);
            }
        }
        const auto result = ragcore::marginalize(
            cands, set, [&](const std::string& c, const retrieval::ScoredDoc& d) { return table.at({c, d.doc.doc_id}); });
        v.require(result.size() == nc, "candidate count");
        for (const auto& r : result) {
            double expected = 0.0;
            double lo = 1.0, hi = 0.0;
            for (const auto& d : set.docs) {
                const double p = std::exp(table.at({r.text, d.doc.doc_id}));
                expected += d.prob * p;
                lo = std::min(lo, p);
                hi = std::max(hi, p);
            }
            v.require(std::abs(r.marginal_prob - expected) <= 1e-9, "marginal differs from weighted sum");
            v.require(r.marginal_prob >= lo - 1e-12 && r.marginal_prob <= hi + 1e-12, "marginal outside convex bounds");
        }
    }
}

void gate_law(Verdict& v) {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const double score = trial % 7 == 0 ? std::round(u(rng) * 10) / 10 : u(rng);
        const double lambda = trial % 7 == 0 ? score : u(rng);
        const auto d = guardrails::gate(score, lambda);
        v.require((d.label == dataset::Split::id) == (score >= lambda), "decision differs from score >= lambda");
        bool seen_ood = false;
        for (int i = 0; i <= 20; ++i) {
            const bool id = guardrails::gate(score, i / 20.0).label == dataset::Split::id;
            v.require(!(seen_ood && id), "not monotone in lambda");
            seen_ood = seen_ood || !id;
        }
    }
}

void metrics(Verdict& v) {
    for (int m = 0; m <= 10; ++m) {
        std::vector<std::string> gts(10, "wrong");
        std::fill_n(gts.begin(), m, "right");
        v.require(eval::soft_accuracy("right", gts) == std::min(m / 3.0, 1.0), "soft accuracy at m=" + std::to_string(m));
    }
    const std::vector<int> y{1};
    const std::vector<double> p{0.5};
    v.require(std::abs(eval::bce_loss(y, p) - std::log(2.0)) <= 1e-9, "bce(1, 0.5) != ln 2");

    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> cat(0, 10);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<eval::VqaOutcome> outcomes(2 + trial % 15);
        for (auto& o : outcomes) {
            o.category = dataset::kAllCategories[cat(rng)];
            o.soft_accuracy = std::floor(u(rng) * 4) / 3.0;
            o.soft_accuracy = std::min(o.soft_accuracy, 1.0);
            o.grounding.g_mean = 2 * u(rng) - 1;
            o.grounding.hallucinated = o.grounding.g_mean < 0.5;
            o.confidence.s_combined = u(rng);
            o.gate = guardrails::gate(o.confidence.s_combined, 0.5);
        }
        const auto reports = eval::aggregate_splits(outcomes, {}, "");
        if (reports.size() < 3) {
            continue;
        }
        for (auto field : {&eval::RunReport::accuracy, &eval::RunReport::grounding_mean,
                           &eval::RunReport::hallucination_rate, &eval::RunReport::bce, &eval::RunReport::gated_id_rate}) {
            const double all = reports[0].*field;
            const double a = reports[1].*field;
            const double b = reports[2].*field;
            v.require(all >= std::min(a, b) - 1e-12 && all <= std::max(a, b) + 1e-12, "ALL not between ID and OOD");
        }
    }
}

void tiling(Verdict& v) {
    std::mt19937_64 rng(606);
    std::uniform_int_distribution<std::uint32_t> side(1, 64);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int trial = 0; trial < 200; ++trial) {
        const std::uint32_t w = side(rng);
        const std::uint32_t h = side(rng);
        std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * 3);
        for (auto& b : data) {
            b = static_cast<std::uint8_t>(byte(rng));
        }
        const imaging::RawImage image(w, h, data);
        const std::uint32_t rows = 1 + static_cast<std::uint32_t>(trial) % std::min<std::uint32_t>(4, h);
        const std::uint32_t cols = 1 + static_cast<std::uint32_t>(trial / 4) % std::min<std::uint32_t>(4, w);
        const auto grid = imaging::partition(image, rows, cols);
        v.require(grid.patches.size() == static_cast<std::size_t>(rows) * cols, "patch count");
        std::vector<int> cover(static_cast<std::size_t>(w) * h, 0);
        for (const auto& p : grid.patches) {
            for (std::uint32_t y = p.y0; y < p.y0 + p.h; ++y) {
                for (std::uint32_t x = p.x0; x < p.x0 + p.w; ++x) {
                    ++cover[static_cast<std::size_t>(y) * w + x];
                    const std::size_t src = (static_cast<std::size_t>(y) * w + x) * 3;
                    const std::size_t dst = (static_cast<std::size_t>(y - p.y0) * p.w + (x - p.x0)) * 3;
                    v.require(std::equal(p.data.begin() + dst, p.data.begin() + dst + 3, data.begin() + src),
                              "patch bytes differ from the frame");
                }
            }
        }
        v.require(std::all_of(cover.begin(), cover.end(), [](int c) { return c == 1; }), "patches not a disjoint cover");
        v.require(imaging::reassemble(grid) == image, "reassemble is not byte-identical");
    }
}

void sparql(Verdict& v) {
    const std::string head = "SELECT ?abstract WHERE { ?s rdfs:label \"";
    const std::string tail = "\"@en ; dbo:abstract ?abstract . FILTER (lang(?abstract) = 'en') } LIMIT 1";
    const std::vector<std::pair<std::string, std::string>> goldens{
        {"Pizza", "Pizza"},
        {"Big Ben", "Big Ben"},
        {"The \"Boss\"", "The \\\"Boss\\\""},
        {"AC\\DC", "AC\\\\DC"},
        {"Line\tTab", "Line\\tTab"},
    };
    for (const auto& [label, escaped] : goldens) {
        v.require(retrieval::dbpedia_sparql(label) == head + escaped + tail, "golden mismatch for " + label);
    }
}

void end_to_end(Verdict& v) {
    TempDir dir("acceptance");
    const std::vector<std::string> base{"gvqa", "--config", fixture("mock.conf").string(), "--set",
                                        "retrieval.cache_dir=" + (dir / "cache").string()};
    auto with = [&](std::vector<std::string> extra) {
        auto args = base;
        args.insert(args.end(), extra.begin(), extra.end());
        return gvqa::cli::run(args);
    };
    v.require(with({"cache-warm"}) == 0, "cache-warm failed");
    const auto start = Clock::now();
    v.require(with({"--offline", "--out", (dir / "a").string(), "run"}) == 0, "first offline run failed");
    v.require(with({"--offline", "--out", (dir / "b").string(), "run"}) == 0, "second offline run failed");
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const std::string a = slurp(dir / "a/outcomes.jsonl");
    v.require(std::count(a.begin(), a.end(), '\n') == 10, "expected 10 outcome records");
    v.require(a == slurp(dir / "b/outcomes.jsonl"), "outcomes differ between runs");
    for (const char* run : {"a", "b"}) {
        const auto meta = nlohmann::json::parse(slurp(dir / run / "run.json"));
        v.require(meta.at("transport_calls") == 0, "offline run used the transport");
    }
    v.require(secs < 10.0, "slower than 10 s");
}

void dataset_split(Verdict& v) {
    const std::map<std::string, dataset::Split> table{
        {"Vehicles & Transportation", dataset::Split::ood},
        {"Brands, Companies & Products", dataset::Split::ood},
        {"Objects, Materials & Clothing", dataset::Split::id},
        {"Sports & Recreation", dataset::Split::ood},
        {"Cooking & Food", dataset::Split::id},
        {"Geography, History, Language & Culture", dataset::Split::id},
        {"People & Everyday Life", dataset::Split::id},
        {"Plants & Animals", dataset::Split::id},
        {"Science & Technology", dataset::Split::ood},
        {"Weather & Climate", dataset::Split::ood},
        {"Other", dataset::Split::id},
    };
    std::set<dataset::KnowledgeCategory> seen;
    for (const auto& [label, split] : table) {
        const auto cat = dataset::parse_category(label);
        seen.insert(cat);
        v.require(dataset::category_label(cat) == label, "label round trip for " + label);
        v.require(dataset::split_membership(cat) == split, "wrong split for " + label);
    }
    v.require(seen.size() == 11, "labels do not name 11 distinct categories");

    const auto samples = dataset::load_dataset(fixture("okvqa_full/annotations.json"), fixture("okvqa_full/questions.json"));
    std::set<std::string> id, ood, all;
    for (const auto& s : samples) {
        all.insert(s.sample_id);
        (s.split() == dataset::Split::id ? id : ood).insert(s.sample_id);
        v.require(s.split() == table.at(std::string(dataset::category_label(s.category))), "sample split mismatch");
    }
    std::vector<std::string> both;
    std::set_intersection(id.begin(), id.end(), ood.begin(), ood.end(), std::back_inserter(both));
    v.require(both.empty(), "a sample is in both splits");
    v.require(id.size() + ood.size() == all.size() && all.size() == samples.size(), "splits do not cover the manifest");
    v.require(!id.empty() && !ood.empty(), "a split is empty");
}

}  // namespace

int main() {
    report("softmax-ranking-oracle", softmax_ranking);
    report("grounding-oracle", grounding);
    report("marginalization-oracle", marginalization);
    report("gate-law", gate_law);
    report("metric-oracles", metrics);
    report("tiling-round-trip", tiling);
    report("sparql-goldens", sparql);
    report("end-to-end-determinism", end_to_end);
    report("dataset-split", dataset_split);
    std::printf("%d failure(s)\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
