// SPDX-License-Identifier: Apache-2.0
#include "gvqa/error.hpp"
#include "gvqa/knowledge.hpp"
#include "gvqa/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

namespace gvqa::retrieval {
namespace {

using nlohmann::json;

std::set<std::string> content_terms(std::string_view s) {
    std::set<std::string> terms;
    const std::string lowered = text::to_lower(s);
    for (std::string_view w : text::split_words(lowered)) {
        const std::string_view core = text::strip_punct(w);
        if (!core.empty() && !is_stopword(core)) {
            terms.emplace(core);
        }
    }
    return terms;
}

// Inverse of sparql_escape, applied to the literal inside rdfs:label "...".
std::string sparql_label(const std::string& query) {
    const std::string open = "rdfs:label \"";
    const auto start = query.find(open);
    if (start == std::string::npos) {
        return {};
    }
    std::string label;
    for (std::size_t i = start + open.size(); i < query.size(); ++i) {
        const char c = query[i];
        if (c == '"') {
            return label;
        }
        if (c == '\\' && i + 1 < query.size()) {
            const char e = query[++i];
            switch (e) {
                case 'n': label.push_back('\n'); break;
                case 'r': label.push_back('\r'); break;
                case 't': label.push_back('\t'); break;
                case 'b': label.push_back('\b'); break;
                case 'f': label.push_back('\f'); break;
                default: label.push_back(e);
            }
            continue;
        }
        label.push_back(c);
    }
    return {};
}

}  // namespace

FixtureTransport::FixtureTransport(const std::filesystem::path& fixture_file) {
    std::ifstream in(fixture_file);
    if (!in) {
        throw IoError("cannot open knowledge fixture " + fixture_file.string(), Stage::retrieval);
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(Stage::retrieval, fixture_file.string() + ": " + e.what());
    }
    for (const json& r : doc.value("recorded", json::array())) {
        m_recorded.emplace_back(r.at("url").get<std::string>(),
                                net::HttpResponse{r.value("status", 200), r.at("body").get<std::string>()});
    }
    const json corpus = doc.value("corpus", json::object());
    for (const json& a : corpus.value("articles", json::array())) {
        m_articles.push_back({a.at("title").get<std::string>(), a.at("extract").get<std::string>()});
    }
    for (const json& a : corpus.value("abstracts", json::array())) {
        m_abstracts.emplace_back(a.at("label").get<std::string>(), a.at("abstract").get<std::string>());
    }
}

net::HttpResponse FixtureTransport::get(const std::string& url) {
    for (const auto& [recorded_url, response] : m_recorded) {
        if (recorded_url == url) {
            return response;
        }
    }
    const std::string path = net::url_path(url);
    if (path.starts_with("/w/api.php")) {
        const std::set<std::string> query_terms = content_terms(net::query_param(url, "srsearch"));
        const std::string limit_text = net::query_param(url, "srlimit");
        const std::size_t limit = limit_text.empty() ? 10 : std::stoul(limit_text);
        std::vector<std::pair<std::size_t, const Article*>> ranked;
        for (const Article& article : m_articles) {
            const std::set<std::string> title_terms = content_terms(article.title);
            const std::set<std::string> body_terms = content_terms(article.extract);
            std::size_t score = 0;
            for (const std::string& t : query_terms) {
                score += 2 * title_terms.count(t) + body_terms.count(t);
            }
            if (score > 0) {
                ranked.emplace_back(score, &article);
            }
        }
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second->title < b.second->title;
        });
        json hits = json::array();
        for (std::size_t i = 0; i < ranked.size() && i < limit; ++i) {
            const Article& a = *ranked[i].second;
            hits.push_back({{"ns", 0}, {"title", a.title}, {"snippet", std::string(text::utf8_prefix(a.extract, 120))}});
        }
        const json body{{"batchcomplete", ""},
                        {"query", {{"searchinfo", {{"totalhits", ranked.size()}}}, {"search", std::move(hits)}}}};
        return {200, body.dump()};
    }
    constexpr std::string_view kSummary = "/api/rest_v1/page/summary/";
    if (path.starts_with(kSummary)) {
        std::string title = net::url_decode(path.substr(kSummary.size()));
        std::replace(title.begin(), title.end(), '_', ' ');
        for (const Article& a : m_articles) {
            if (a.title == title) {
                return {200, json{{"type", "standard"}, {"title", a.title}, {"extract", a.extract}}.dump()};
            }
        }
        return {404, json{{"type", "https://mediawiki.org/wiki/HyperSwitch/errors/not_found"},
                          {"title", "Not found."}, {"detail", "Page or revision not found."}}.dump()};
    }
    if (path.starts_with("/sparql")) {
        const std::string label = sparql_label(net::query_param(url, "query"));
        json bindings = json::array();
        for (const auto& [l, abstract] : m_abstracts) {
            if (l == label) {
                bindings.push_back({{"abstract", {{"type", "literal"}, {"xml:lang", "en"}, {"value", abstract}}}});
                break;
            }
        }
        const json body{{"head", {{"link", json::array()}, {"vars", {"abstract"}}}},
                        {"results", {{"distinct", false}, {"ordered", true}, {"bindings", std::move(bindings)}}}};
        return {200, body.dump()};
    }
    return {404, "{}"};
}

net::HttpResponse FixtureTransport::post(const std::string& url, const std::string&, const std::string&) {
    return get(url);
}

}  // namespace gvqa::retrieval
