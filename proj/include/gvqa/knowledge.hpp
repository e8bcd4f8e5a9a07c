// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gvqa/cache.hpp"
#include "gvqa/net/transport.hpp"
#include "gvqa/retrieval.hpp"

namespace gvqa::retrieval {

struct SearchHit {
    std::string title;
    std::string snippet;  ///< HTML markup stripped

    bool operator==(const SearchHit&) const = default;
};

struct Endpoints {
    std::string wikipedia = "https://en.wikipedia.org";
    std::string dbpedia = "https://dbpedia.org";
};

/// SPARQL abstract lookup by English label:
///   SELECT ?abstract WHERE { ?s rdfs:label "LABEL"@en ; dbo:abstract ?abstract .
///   FILTER (lang(?abstract) = 'en') } LIMIT 1
/// (on one line). Throws ValidationError for an empty label or one holding
/// control characters with no SPARQL escape.
std::string dbpedia_sparql(std::string_view label);

/// SPARQL STRING_LITERAL2 escaping (\" \\ \n \r \t \b \f).
std::string sparql_escape(std::string_view label);

std::string wikipedia_search_url(const Endpoints& endpoints, std::string_view query, std::size_t limit);
std::string wikipedia_summary_url(const Endpoints& endpoints, std::string_view title);
std::string dbpedia_query_url(const Endpoints& endpoints, std::string_view sparql);

/// Wikipedia + DBpedia access with a read-through disk cache. In offline mode
/// only the cache is consulted and a miss is a retrieval error.
class KnowledgeClient {
public:
    KnowledgeClient(std::shared_ptr<net::Transport> transport, std::shared_ptr<DiskCache> cache, bool offline,
                    Endpoints endpoints = {});

    /// Up to `limit` hits in source order; zero hits is an empty list.
    std::vector<SearchHit> wikipedia_search(std::string_view query, std::size_t limit);

    /// Lead extract of the page. Throws NotFoundError carrying the title.
    std::string wikipedia_summary(std::string_view title);

    /// English abstract for the label, nullopt when DBpedia has none.
    std::optional<std::string> dbpedia_abstract(std::string_view label);

    bool offline() const noexcept { return m_offline; }

private:
    struct Fetched {
        int status = 0;
        std::string body;
    };
    Fetched fetch(std::string_view source, std::string_view key, const std::string& url);

    std::shared_ptr<net::Transport> m_transport;
    std::shared_ptr<DiskCache> m_cache;
    bool m_offline;
    Endpoints m_endpoints;
};

struct RetrieverConfig {
    std::size_t top_k = 3;
    std::size_t pool_size = 5;   ///< Wikipedia hits whose summaries enter the pool
    std::size_t max_labels = 2;  ///< DBpedia abstracts per sample
};

/// Builds the candidate pool for a query, embeds it, and ranks it.
class Retriever {
public:
    Retriever(KnowledgeClient& client, const backends::Backend& embedder, RetrieverConfig config);

    /// Pool in deterministic order: Wikipedia hits (search order), then DBpedia
    /// abstracts (label order); duplicate ids dropped.
    std::vector<KnowledgeDoc> gather(std::string_view query, const std::vector<std::string>& labels);

    /// Empty pool yields an empty RetrievalSet rather than an error.
    RetrievalSet retrieve(std::string_view query, const std::vector<std::string>& labels,
                          const backends::Embedding& query_embedding);

    const RetrieverConfig& config() const noexcept { return m_config; }

private:
    KnowledgeClient& m_client;
    const backends::Backend& m_embedder;
    RetrieverConfig m_config;
};

/// Serves Wikipedia/DBpedia requests from a fixture file:
///   {"recorded": [{"url", "status", "body"}...],
///    "corpus": {"articles": [{"title", "extract"}...], "abstracts": [{"label", "abstract"}...]}}
/// Exact recorded URLs win; otherwise search is answered by term overlap over
/// the corpus, summaries and SPARQL by exact title/label lookup.
class FixtureTransport final : public net::Transport {
public:
    explicit FixtureTransport(const std::filesystem::path& fixture_file);
    net::HttpResponse get(const std::string& url) override;
    net::HttpResponse post(const std::string& url, const std::string& body, const std::string& content_type) override;

private:
    struct Article {
        std::string title;
        std::string extract;
    };
    std::vector<std::pair<std::string, net::HttpResponse>> m_recorded;
    std::vector<Article> m_articles;
    std::vector<std::pair<std::string, std::string>> m_abstracts;
};

}  // namespace gvqa::retrieval
