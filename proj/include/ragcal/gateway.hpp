#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "ragcal/error.hpp"
#include "ragcal/jsonl.hpp"
#include "ragcal/parser.hpp"
#include "ragcal/prompts.hpp"
#include "ragcal/rng.hpp"
#include "ragcal/types.hpp"

namespace ragcal {

struct EndpointConfig {
    std::string base_url;  // e.g. "http://localhost:8000"
    std::string path = "/v1/chat/completions";
    std::string model_tag = "model";
    std::string auth_env;  // env var holding the bearer token; empty = no auth
    std::string auth_header = "Authorization";
    int timeout_s = 120;
    int max_retries = 3;
    int backoff_ms = 200;
    int parallel = 8;
    double rate_limit_qps = 0.0;  // 0 = unlimited
};

struct GenerationParams {
    double temperature = 0.0;
    int max_tokens = 2048;
    int n_samples = 1;
    bool logprobs = false;
    std::string model_tag = "model";
    std::optional<std::uint64_t> seed;  // consumed by mock backends only
};

inline GenerationParams evaluation_preset(std::string model_tag = "model") {
    GenerationParams p;
    p.temperature = 0.0;
    p.max_tokens = 2048;
    p.n_samples = 1;
    p.model_tag = std::move(model_tag);
    return p;
}

inline GenerationParams bon_preset(std::string model_tag = "model") {
    GenerationParams p;
    p.temperature = 1.0;
    p.max_tokens = 2048;
    p.n_samples = 16;
    p.model_tag = std::move(model_tag);
    return p;
}

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;
};

struct Completion {
    std::string text;
    bool truncated = false;
    std::optional<TokenUsage> usage;
    std::vector<TokenLogprob> first_token_logprobs;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::vector<Completion> complete(const std::string& prompt,
                                             const GenerationParams& params) = 0;
    virtual bool supports_logprobs() const { return false; }
};

// ---------------------------------------------------------------------------
// Chat-completions wire driver
// ---------------------------------------------------------------------------

class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(EndpointConfig config) : config_(std::move(config)) {}

    bool supports_logprobs() const override { return true; }

    std::vector<Completion> complete(const std::string& prompt,
                                     const GenerationParams& params) override {
        json body{{"model", params.model_tag},
                  {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
                  {"temperature", params.temperature},
                  {"n", params.n_samples},
                  {"max_tokens", params.max_tokens}};
        if (params.logprobs) {
            body["logprobs"] = true;
            body["top_logprobs"] = 5;
        }

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_s);
        client.set_read_timeout(config_.timeout_s);
        httplib::Headers headers;
        if (!config_.auth_env.empty()) {
            const char* token = std::getenv(config_.auth_env.c_str());
            if (token) headers.emplace(config_.auth_header, std::string("Bearer ") + token);
        }
        auto res = client.Post(config_.path, headers, body.dump(), "application/json");
        if (!res) {
            throw TransientEndpointError("connection failed: " + httplib::to_string(res.error()));
        }
        if (res->status == 429 || res->status >= 500) {
            throw TransientEndpointError("endpoint status " + std::to_string(res->status), res->status);
        }
        if (res->status != 200) {
            throw_endpoint("endpoint status " + std::to_string(res->status) + ": " + res->body);
        }
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices")) {
            throw_endpoint("malformed chat completion body");
        }

        std::optional<TokenUsage> usage;
        if (auto it = reply.find("usage"); it != reply.end() && it->is_object()) {
            TokenUsage u;
            u.prompt_tokens = it->value("prompt_tokens", 0);
            u.completion_tokens = it->value("completion_tokens", 0);
            usage = u;
        }

        std::vector<Completion> out;
        for (const auto& choice : reply["choices"]) {
            Completion c;
            if (choice.contains("message")) {
                c.text = choice["message"].value("content", std::string());
            }
            c.truncated = choice.value("finish_reason", std::string()) == "length";
            c.usage = usage;
            if (auto lp = choice.find("logprobs"); lp != choice.end() && lp->is_object()) {
                const auto& content = (*lp)["content"];
                if (content.is_array() && !content.empty()) {
                    for (const auto& alt : content[0].value("top_logprobs", json::array())) {
                        c.first_token_logprobs.push_back(
                            TokenLogprob{alt.value("token", std::string()), alt.value("logprob", 0.0)});
                    }
                }
            }
            out.push_back(std::move(c));
        }
        return out;
    }

private:
    EndpointConfig config_;
};

// ---------------------------------------------------------------------------
// Generation with retry
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_ms = 200;
};

struct GenerationResult {
    std::vector<ModelResponse> responses;
    int attempts = 1;
};

// Drives one prompt through the backend; transient failures retried with
// exponential backoff, hard failures propagate immediately.
inline GenerationResult generate(ChatBackend& backend, const std::string& prompt,
                                 const GenerationParams& params, RetryPolicy retry = {}) {
    std::string last_error;
    const int max_attempts = std::max(1, retry.max_attempts);
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        if (attempt > 1 && retry.backoff_ms > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(retry.backoff_ms * (1 << (attempt - 2))));
        }
        try {
            auto completions = backend.complete(prompt, params);
            if (static_cast<int>(completions.size()) != params.n_samples) {
                throw_endpoint("endpoint returned " + std::to_string(completions.size()) +
                               " completions, requested " + std::to_string(params.n_samples));
            }
            GenerationResult result;
            result.attempts = attempt;
            for (std::size_t i = 0; i < completions.size(); ++i) {
                ModelResponse r;
                r.raw = std::move(completions[i].text);
                r.sample_index = static_cast<int>(i);
                r.truncated = completions[i].truncated;
                r.token_usage = completions[i].usage;
                result.responses.push_back(std::move(r));
            }
            return result;
        } catch (const TransientEndpointError& e) {
            last_error = e.what();
        }
    }
    throw_endpoint("generation failed after " + std::to_string(max_attempts) +
                   " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// P(True) probe
// ---------------------------------------------------------------------------

// Normalized probability of the "True" token over True and False, read from
// the first generated token's log-probabilities. A missing token gets a log
// floor (so the present one saturates near 1); both missing is an error.
inline double p_true(ChatBackend& backend, const QAInstance& instance,
                     const RetrievalContext& context, const std::string& answer,
                     const std::string& model_tag = "model") {
    if (!backend.supports_logprobs()) {
        throw_endpoint("endpoint does not expose token log-probabilities");
    }
    GenerationParams params;
    params.temperature = 0.0;
    params.max_tokens = 4;
    params.n_samples = 1;
    params.logprobs = true;
    params.model_tag = model_tag;

    const std::string prompt = render_prompt(get_template("p_true"), instance, context,
                                             {{"proposed_answer", answer}});
    auto completions = backend.complete(prompt, params);
    if (completions.empty()) throw_endpoint("no completion for p_true probe");

    constexpr double kLogFloor = -1.0e4;
    std::optional<double> lp_true, lp_false;
    for (const auto& tl : completions[0].first_token_logprobs) {
        const std::string tok = to_lower(trim(tl.token));
        if (tok == "true" && !lp_true) lp_true = tl.logprob;
        if (tok == "false" && !lp_false) lp_false = tl.logprob;
    }
    if (!lp_true && !lp_false) throw_endpoint("tokens not found");
    const double lt = lp_true.value_or(kLogFloor);
    const double lf = lp_false.value_or(kLogFloor);
    return 1.0 / (1.0 + std::exp(lf - lt));
}

// ---------------------------------------------------------------------------
// Sampling-aggregation baselines
// ---------------------------------------------------------------------------

// Majority answer by normalized vote; confidence is the mean confidence of
// that answer. Ties break toward higher mean confidence, then lexicographic
// normalized form.
inline std::pair<std::string, double> ensemble_confidence(
    const std::vector<std::pair<std::string, double>>& samples) {
    if (samples.empty()) throw_data("ensemble_confidence: no parsed answers");
    struct Bucket {
        int count = 0;
        double conf_sum = 0.0;
        std::string original;
    };
    std::map<std::string, Bucket> buckets;
    for (const auto& [answer, confidence] : samples) {
        auto& b = buckets[normalize_answer(answer)];
        if (b.count == 0) b.original = answer;
        b.count += 1;
        b.conf_sum += confidence;
    }
    const Bucket* best = nullptr;
    const std::string* best_key = nullptr;
    for (const auto& [key, b] : buckets) {
        const double mean = b.conf_sum / b.count;
        if (!best) {
            best = &b;
            best_key = &key;
            continue;
        }
        const double best_mean = best->conf_sum / best->count;
        if (b.count > best->count ||
            (b.count == best->count && (mean > best_mean ||
                                        (mean == best_mean && key < *best_key)))) {
            best = &b;
            best_key = &key;
        }
    }
    return {best->original, best->conf_sum / best->count};
}

// Frequency of the majority normalized answer among all samples.
inline double self_frequency(const std::vector<std::string>& answers) {
    if (answers.empty()) throw_data("self_frequency: no parsed answers");
    std::map<std::string, int> counts;
    for (const auto& a : answers) counts[normalize_answer(a)] += 1;
    int best = 0;
    for (const auto& [_, c] : counts) best = std::max(best, c);
    return static_cast<double>(best) / static_cast<double>(answers.size());
}

// Majority answer by normalized vote; count ties break lexicographically on
// the normalized form. Returns the first-seen original spelling.
inline std::string majority_answer(const std::vector<std::string>& answers) {
    if (answers.empty()) throw_data("majority_answer: no parsed answers");
    struct Bucket {
        int count = 0;
        std::string original;
    };
    std::map<std::string, Bucket> buckets;
    for (const auto& a : answers) {
        auto& b = buckets[normalize_answer(a)];
        if (b.count == 0) b.original = a;
        b.count += 1;
    }
    const Bucket* best = nullptr;
    for (const auto& [_, b] : buckets) {
        if (!best || b.count > best->count) best = &b;
    }
    return best->original;
}

// ---------------------------------------------------------------------------
// Response sources: one interface over live endpoints and test policies
// ---------------------------------------------------------------------------

class ResponseSource {
public:
    virtual ~ResponseSource() = default;
    // `prompt` is the rendered text a live endpoint would receive; policy
    // mocks ignore it and work from the structured inputs instead.
    virtual GenerationResult generate_for(const QAInstance& instance,
                                          const RetrievalContext& context,
                                          const std::string& prompt,
                                          const GenerationParams& params) = 0;
};

class EndpointResponseSource : public ResponseSource {
public:
    EndpointResponseSource(std::shared_ptr<ChatBackend> backend, RetryPolicy retry)
        : backend_(std::move(backend)), retry_(retry) {}

    GenerationResult generate_for(const QAInstance&, const RetrievalContext&,
                                  const std::string& prompt,
                                  const GenerationParams& params) override {
        return generate(*backend_, prompt, params, retry_);
    }

    ChatBackend& backend() { return *backend_; }

private:
    std::shared_ptr<ChatBackend> backend_;
    RetryPolicy retry_;
};

// BoN sampling for training-response generation (rules prompt, temperature 1).
inline GenerationResult generate_bon(ResponseSource& source, const QAInstance& instance,
                                     const RetrievalContext& context,
                                     const GenerationParams& params) {
    const std::string prompt = render_prompt(get_template("rules"), instance, context);
    return source.generate_for(instance, context, prompt, params);
}

// ---------------------------------------------------------------------------
// Bounded-parallel task runner + token-bucket limiter
// ---------------------------------------------------------------------------

class RateLimiter {
public:
    explicit RateLimiter(double qps) : interval_ns_(qps > 0.0 ? 1.0e9 / qps : 0.0) {}

    void acquire() {
        if (interval_ns_ <= 0.0) return;
        std::unique_lock<std::mutex> lock(mutex_);
        const auto now = std::chrono::steady_clock::now();
        if (next_ < now) next_ = now;
        const auto slot = next_;
        next_ += std::chrono::nanoseconds(static_cast<std::int64_t>(interval_ns_));
        lock.unlock();
        std::this_thread::sleep_until(slot);
    }

private:
    double interval_ns_;
    std::mutex mutex_;
    std::chrono::steady_clock::time_point next_{};
};

// Runs fn(0..n-1) on up to `parallel` threads; first exception wins and is
// rethrown after all workers drain.
inline void parallel_for(std::size_t n, int parallel, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const int workers = std::max(1, std::min<int>(parallel, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (first_error) return;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ragcal
