// SPDX-License-Identifier: Apache-2.0
#include "gvqa/knowledge.hpp"

#include "gvqa/error.hpp"
#include "gvqa/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <future>
#include <unordered_set>

namespace gvqa::retrieval {
namespace {

using nlohmann::json;

constexpr std::string_view kSearchSource = "wikipedia-search";
constexpr std::string_view kSummarySource = "wikipedia-summary";
constexpr std::string_view kSparqlSource = "dbpedia-sparql";

std::string strip_markup(std::string_view html) {
    std::string out;
    bool in_tag = false;
    for (char c : html) {
        if (c == '<') {
            in_tag = true;
        } else if (c == '>') {
            in_tag = false;
        } else if (!in_tag) {
            out.push_back(c);
        }
    }
    static constexpr std::pair<std::string_view, std::string_view> kEntities[] = {
        {"&quot;", "\""}, {"&#039;", "'"}, {"&#39;", "'"}, {"&lt;", "<"}, {"&gt;", ">"}, {"&amp;", "&"}};
    for (const auto& [entity, plain] : kEntities) {
        for (auto pos = out.find(entity); pos != std::string::npos; pos = out.find(entity, pos + plain.size())) {
            out.replace(pos, entity.size(), plain);
        }
    }
    return out;
}

json parse_payload(const std::string& body, std::string_view what) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw ProtocolError("malformed " + std::string(what) + " payload: " + e.what(), Stage::retrieval);
    }
}

std::string page_key(std::string_view title) {
    std::string key(text::trim(title));
    std::replace(key.begin(), key.end(), ' ', '_');
    return key;
}

}  // namespace

std::string sparql_escape(std::string_view label) {
    std::string out;
    out.reserve(label.size() + 8);
    for (unsigned char c : label) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            default:
                if (c < 0x20 || c == 0x7F) {
                    throw ValidationError(Stage::retrieval, "label contains an unescapable control character");
                }
                out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

std::string dbpedia_sparql(std::string_view label) {
    if (label.empty()) {
        throw ValidationError(Stage::retrieval, "DBpedia label must be non-empty");
    }
    return "SELECT ?abstract WHERE { ?s rdfs:label \"" + sparql_escape(label) +
           "\"@en ; dbo:abstract ?abstract . FILTER (lang(?abstract) = 'en') } LIMIT 1";
}

std::string wikipedia_search_url(const Endpoints& endpoints, std::string_view query, std::size_t limit) {
    return endpoints.wikipedia + "/w/api.php?action=query&list=search&format=json&utf8=1&srlimit=" +
           std::to_string(limit) + "&srsearch=" + text::url_encode(query);
}

std::string wikipedia_summary_url(const Endpoints& endpoints, std::string_view title) {
    return endpoints.wikipedia + "/api/rest_v1/page/summary/" + text::url_encode(page_key(title));
}

std::string dbpedia_query_url(const Endpoints& endpoints, std::string_view sparql) {
    return endpoints.dbpedia + "/sparql?query=" + text::url_encode(sparql) +
           "&format=" + text::url_encode("application/sparql-results+json");
}

KnowledgeClient::KnowledgeClient(std::shared_ptr<net::Transport> transport, std::shared_ptr<DiskCache> cache,
                                 bool offline, Endpoints endpoints)
    : m_transport(std::move(transport)), m_cache(std::move(cache)), m_offline(offline), m_endpoints(std::move(endpoints)) {}

KnowledgeClient::Fetched KnowledgeClient::fetch(std::string_view source, std::string_view key, const std::string& url) {
    if (m_cache) {
        if (auto hit = m_cache->get(source, key)) {
            return {hit->status, std::move(hit->payload)};
        }
    }
    if (m_offline || !m_transport) {
        throw TransportError("offline: no cached " + std::string(source) + " record for '" + std::string(key) + "'", false);
    }
    net::HttpResponse response = m_transport->get(url);
    if (response.status == 200 || response.status == 404) {
        if (m_cache) {
            m_cache->put(source, key, response.body, response.status);
        }
        return {response.status, std::move(response.body)};
    }
    throw TransportError("HTTP " + std::to_string(response.status) + " from " + url,
                         net::is_retryable_status(response.status));
}

std::vector<SearchHit> KnowledgeClient::wikipedia_search(std::string_view query, std::size_t limit) {
    if (text::trim(query).empty()) {
        throw ValidationError(Stage::retrieval, "search query must be non-empty");
    }
    if (limit == 0) {
        throw ValidationError(Stage::retrieval, "search limit must be >= 1");
    }
    const std::string normalized = normalize_query(query);
    const std::string source = std::string(kSearchSource) + ":" + std::to_string(limit);
    const Fetched fetched = fetch(source, normalized, wikipedia_search_url(m_endpoints, normalized, limit));
    if (fetched.status != 200) {
        throw TransportError("search for '" + normalized + "' returned HTTP " + std::to_string(fetched.status), false);
    }
    const json payload = parse_payload(fetched.body, "search");
    if (!payload.contains("query") || !payload["query"].contains("search") || !payload["query"]["search"].is_array()) {
        throw ProtocolError("search payload lacks query.search", Stage::retrieval);
    }
    std::vector<SearchHit> hits;
    for (const json& entry : payload["query"]["search"]) {
        if (hits.size() >= limit) {
            break;
        }
        if (!entry.contains("title") || !entry["title"].is_string()) {
            throw ProtocolError("search hit without a title", Stage::retrieval);
        }
        std::string snippet = strip_markup(entry.value("snippet", std::string{}));
        hits.push_back({entry["title"].get<std::string>(), std::move(snippet)});
    }
    return hits;
}

std::string KnowledgeClient::wikipedia_summary(std::string_view title) {
    const std::string key = page_key(title);
    if (key.empty()) {
        throw ValidationError(Stage::retrieval, "summary title must be non-empty");
    }
    const Fetched fetched = fetch(kSummarySource, key, wikipedia_summary_url(m_endpoints, title));
    if (fetched.status == 404) {
        throw NotFoundError("no Wikipedia page titled '" + std::string(title) + "'", std::string(title));
    }
    const json payload = parse_payload(fetched.body, "summary");
    const std::string extract = payload.is_object() ? payload.value("extract", std::string{}) : std::string{};
    if (text::trim(extract).empty()) {
        throw NotFoundError("Wikipedia page '" + std::string(title) + "' has no extract", std::string(title));
    }
    return extract;
}

std::optional<std::string> KnowledgeClient::dbpedia_abstract(std::string_view label) {
    const std::string sparql = dbpedia_sparql(label);
    const Fetched fetched = fetch(kSparqlSource, label, dbpedia_query_url(m_endpoints, sparql));
    if (fetched.status == 404) {
        return std::nullopt;
    }
    const json payload = parse_payload(fetched.body, "SPARQL");
    if (!payload.contains("results") || !payload["results"].contains("bindings")) {
        throw ProtocolError("SPARQL payload lacks results.bindings", Stage::retrieval);
    }
    for (const json& binding : payload["results"]["bindings"]) {
        if (binding.contains("abstract") && binding["abstract"].contains("value")) {
            std::string value = binding["abstract"]["value"].get<std::string>();
            if (!text::trim(value).empty()) {
                return value;
            }
        }
    }
    return std::nullopt;
}

Retriever::Retriever(KnowledgeClient& client, const backends::Backend& embedder, RetrieverConfig config)
    : m_client(client), m_embedder(embedder), m_config(config) {
    if (config.top_k == 0 || config.pool_size == 0) {
        throw ValidationError(Stage::config, "retrieval top_k and pool_size must be >= 1");
    }
}

std::vector<KnowledgeDoc> Retriever::gather(std::string_view query, const std::vector<std::string>& labels) {
    // Sources are independent; DBpedia runs alongside the Wikipedia chain.
    auto dbpedia = std::async(std::launch::async, [&] {
        std::vector<KnowledgeDoc> docs;
        for (std::size_t i = 0; i < labels.size() && i < m_config.max_labels; ++i) {
            if (auto abstract = m_client.dbpedia_abstract(labels[i])) {
                docs.push_back({"dbpedia:" + page_key(labels[i]), Source::dbpedia, labels[i], std::move(*abstract), {}});
            }
        }
        return docs;
    });

    std::vector<KnowledgeDoc> pool;
    std::exception_ptr wiki_error;
    try {
        if (!text::trim(query).empty()) {
            for (const SearchHit& hit : m_client.wikipedia_search(query, m_config.pool_size)) {
                std::string summary;
                try {
                    summary = m_client.wikipedia_summary(hit.title);
                } catch (const NotFoundError&) {
                    continue;  // search hits occasionally point at deleted pages
                }
                pool.push_back({"wiki:" + page_key(hit.title), Source::wikipedia, hit.title, std::move(summary), {}});
            }
        }
    } catch (...) {
        wiki_error = std::current_exception();
    }
    std::vector<KnowledgeDoc> from_dbpedia = dbpedia.get();
    if (wiki_error) {
        std::rethrow_exception(wiki_error);
    }
    pool.insert(pool.end(), std::make_move_iterator(from_dbpedia.begin()), std::make_move_iterator(from_dbpedia.end()));

    std::unordered_set<std::string> seen;
    std::vector<KnowledgeDoc> unique;
    for (KnowledgeDoc& doc : pool) {
        if (seen.insert(doc.doc_id).second) {
            unique.push_back(std::move(doc));
        }
    }
    for (KnowledgeDoc& doc : unique) {
        doc.embedding = m_embedder.embed_text(doc.title + ". " + doc.text);
    }
    return unique;
}

RetrievalSet Retriever::retrieve(std::string_view query, const std::vector<std::string>& labels,
                                 const backends::Embedding& query_embedding) {
    const std::vector<KnowledgeDoc> pool = gather(query, labels);
    if (pool.empty()) {
        return RetrievalSet{normalize_query(query), {}, m_config.top_k};
    }
    return score_and_rank(query_embedding, pool, m_config.top_k, normalize_query(query));
}

}  // namespace gvqa::retrieval
