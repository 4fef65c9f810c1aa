#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "ragcal/error.hpp"
#include "ragcal/jsonl.hpp"
#include "ragcal/text.hpp"

namespace ragcal {

struct CorpusDoc {
    std::string doc_id;
    std::string title;
    std::string text;
};

inline json to_json(const CorpusDoc& d) {
    return json{{"doc_id", d.doc_id}, {"title", d.title}, {"text", d.text}};
}

inline CorpusDoc corpus_doc_from_json(const json& j) {
    CorpusDoc d;
    d.doc_id = detail::require_field(j, "doc_id").get<std::string>();
    if (auto it = j.find("title"); it != j.end() && !it->is_null()) d.title = it->get<std::string>();
    d.text = detail::require_field(j, "text").get<std::string>();
    return d;
}

template <>
struct JsonCodec<CorpusDoc> {
    static json encode(const CorpusDoc& d) { return to_json(d); }
    static CorpusDoc decode(const json& j) { return corpus_doc_from_json(j); }
};

struct TokenizerOptions {
    bool lowercase = true;  // lowercase + split on non-alphanumerics; no stemming, no stopwords
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::size_t doc;  // index into Corpus::docs
    int tf = 0;

    bool operator==(const Posting&) const = default;
};

struct CorpusStats {
    std::size_t doc_count = 0;
    double avg_doc_len = 0.0;
};

// Immutable after indexing; concurrent queries are safe.
struct Corpus {
    std::vector<CorpusDoc> docs;  // sorted by doc_id
    std::vector<std::size_t> doc_len;
    std::map<std::string, std::vector<Posting>> index;
    CorpusStats stats;
    TokenizerOptions tokenizer;
};

struct RetrievalHit {
    std::string doc_id;
    double score = 0.0;
    int rank = 0;  // 1-based
};

inline std::vector<std::string> corpus_tokenize(const TokenizerOptions& opts, std::string_view text) {
    if (opts.lowercase) return tokenize(text);
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// Builds the inverted index. Docs are sorted by doc_id first so the result is
// independent of input order. Title and body are both indexed.
inline Corpus index_corpus(std::vector<CorpusDoc> docs, TokenizerOptions tokenizer = {}) {
    if (docs.empty()) throw_data("index_corpus: empty document list");
    std::sort(docs.begin(), docs.end(),
              [](const CorpusDoc& a, const CorpusDoc& b) { return a.doc_id < b.doc_id; });
    for (std::size_t i = 1; i < docs.size(); ++i) {
        if (docs[i].doc_id == docs[i - 1].doc_id) {
            throw_data("duplicate doc_id: " + docs[i].doc_id);
        }
    }
    Corpus corpus;
    corpus.tokenizer = tokenizer;
    corpus.docs = std::move(docs);
    corpus.doc_len.resize(corpus.docs.size());
    std::size_t total_len = 0;
    for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
        std::string joined = corpus.docs[i].title.empty()
                                 ? corpus.docs[i].text
                                 : corpus.docs[i].title + " " + corpus.docs[i].text;
        auto tokens = corpus_tokenize(tokenizer, joined);
        corpus.doc_len[i] = tokens.size();
        total_len += tokens.size();
        std::map<std::string, int> tf;
        for (auto& t : tokens) tf[t] += 1;
        for (auto& [term, freq] : tf) {
            corpus.index[term].push_back(Posting{i, freq});
        }
    }
    corpus.stats.doc_count = corpus.docs.size();
    corpus.stats.avg_doc_len =
        static_cast<double>(total_len) / static_cast<double>(corpus.docs.size());
    return corpus;
}

// Okapi BM25 with non-negative IDF: ln(1 + (N - df + 0.5) / (df + 0.5)).
inline double bm25_idf(std::size_t doc_count, std::size_t df) {
    const double n = static_cast<double>(doc_count);
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

inline std::vector<RetrievalHit> bm25_retrieve(const Corpus& corpus, std::string_view query,
                                               int k, Bm25Params params = {}) {
    if (k < 1) throw_data("bm25_retrieve: k must be >= 1");
    auto terms = corpus_tokenize(corpus.tokenizer, query);
    std::map<std::string, int> qtf;
    for (auto& t : terms) qtf[t] += 1;

    std::map<std::size_t, double> scores;  // doc index -> score, ordered by doc index
    for (const auto& [term, _] : qtf) {
        auto it = corpus.index.find(term);
        if (it == corpus.index.end()) continue;
        const double idf = bm25_idf(corpus.stats.doc_count, it->second.size());
        for (const auto& post : it->second) {
            const double tf = static_cast<double>(post.tf);
            const double len_norm =
                1.0 - params.b +
                params.b * static_cast<double>(corpus.doc_len[post.doc]) / corpus.stats.avg_doc_len;
            scores[post.doc] += idf * tf * (params.k1 + 1.0) / (tf + params.k1 * len_norm);
        }
    }

    std::vector<RetrievalHit> hits;
    hits.reserve(scores.size());
    for (const auto& [doc, score] : scores) {
        hits.push_back(RetrievalHit{corpus.docs[doc].doc_id, score, 0});
    }
    std::stable_sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (hits.size() > static_cast<std::size_t>(k)) hits.resize(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = static_cast<int>(i + 1);
    return hits;
}

// ---------------------------------------------------------------------------
// Dense retrieval adapter
// ---------------------------------------------------------------------------

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

struct EmbeddingEndpoint {
    std::string base_url;        // e.g. "http://localhost:8100"
    std::string path = "/embed";
    std::string auth_env;        // env var holding the bearer token; empty = no auth
    std::string auth_header = "Authorization";
    int timeout_s = 60;
    int max_retries = 3;
    int backoff_ms = 200;
};

// POSTs {"texts": [...]} and expects {"embeddings": [[...], ...]}.
class HttpEmbeddingClient : public EmbeddingClient {
public:
    explicit HttpEmbeddingClient(EmbeddingEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
        json body{{"texts", texts}};
        const std::string payload = body.dump();
        std::string last_error;
        for (int attempt = 1; attempt <= std::max(1, endpoint_.max_retries); ++attempt) {
            if (attempt > 1) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(endpoint_.backoff_ms * (1 << (attempt - 2))));
            }
            httplib::Client client(endpoint_.base_url);
            client.set_connection_timeout(endpoint_.timeout_s);
            client.set_read_timeout(endpoint_.timeout_s);
            httplib::Headers headers;
            if (!endpoint_.auth_env.empty()) {
                const char* token = std::getenv(endpoint_.auth_env.c_str());
                if (token) headers.emplace(endpoint_.auth_header, std::string("Bearer ") + token);
            }
            auto res = client.Post(endpoint_.path, headers, payload, "application/json");
            if (!res) {
                last_error = "connection failed: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw_endpoint("embedding endpoint returned status " + std::to_string(res->status));
            }
            json reply = json::parse(res->body, nullptr, false);
            if (reply.is_discarded() || !reply.contains("embeddings")) {
                throw_endpoint("embedding endpoint returned malformed body");
            }
            auto vectors = reply["embeddings"].get<std::vector<std::vector<double>>>();
            if (vectors.size() != texts.size()) {
                throw_endpoint("embedding endpoint returned " + std::to_string(vectors.size()) +
                               " vectors for " + std::to_string(texts.size()) + " texts");
            }
            return vectors;
        }
        throw TransientEndpointError("embedding endpoint failed after " +
                                     std::to_string(std::max(1, endpoint_.max_retries)) +
                                     " attempts: " + last_error);
    }

private:
    EmbeddingEndpoint endpoint_;
};

struct DenseParams {
    int max_input_tokens = 256;  // truncation applied before embedding
    int knn_candidates = 100;
};

inline std::string truncate_tokens(std::string_view text, int max_tokens) {
    auto words = split_whitespace(text);
    if (static_cast<int>(words.size()) <= max_tokens) return std::string(trim(text));
    std::string out;
    for (int i = 0; i < max_tokens; ++i) {
        if (!out.empty()) out.push_back(' ');
        out += words[static_cast<std::size_t>(i)];
    }
    return out;
}

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw_endpoint("embedding dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    return denom > 0.0 ? dot / denom : 0.0;
}

// Cosine top-k over externally produced embeddings. Documents are embedded in
// one batch; dimension mismatches are fatal, transport failures retriable.
inline std::vector<RetrievalHit> dense_retrieve(EmbeddingClient& client, const Corpus& corpus,
                                                std::string_view query, int k,
                                                DenseParams params = {}) {
    if (k < 1) throw_data("dense_retrieve: k must be >= 1");
    std::vector<std::string> texts;
    texts.reserve(corpus.docs.size() + 1);
    for (const auto& doc : corpus.docs) {
        std::string joined = doc.title.empty() ? doc.text : doc.title + " " + doc.text;
        texts.push_back(truncate_tokens(joined, params.max_input_tokens));
    }
    texts.push_back(truncate_tokens(query, params.max_input_tokens));

    auto vectors = client.embed(texts);
    const auto& query_vec = vectors.back();
    const std::size_t dim = query_vec.size();
    for (std::size_t i = 0; i + 1 < vectors.size(); ++i) {
        if (vectors[i].size() != dim) {
            throw_endpoint("embedding dimension mismatch: doc " + corpus.docs[i].doc_id + " has " +
                           std::to_string(vectors[i].size()) + ", query has " + std::to_string(dim));
        }
    }

    std::vector<RetrievalHit> hits;
    hits.reserve(corpus.docs.size());
    for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
        hits.push_back(RetrievalHit{corpus.docs[i].doc_id, cosine_similarity(vectors[i], query_vec), 0});
    }
    std::stable_sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    const std::size_t pool = std::min<std::size_t>(hits.size(), static_cast<std::size_t>(params.knn_candidates));
    hits.resize(std::min<std::size_t>(pool, static_cast<std::size_t>(k)));
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = static_cast<int>(i + 1);
    return hits;
}

}  // namespace ragcal
