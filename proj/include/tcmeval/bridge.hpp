#pragma once

// HTTP client for an external sentence-embedding service.
//
//   GET  /health  -> {"model": str, "dimension": int}
//   POST /embed   {"texts": [str, ...]}  (1..256 texts, each <= 8192 bytes)
//                 -> {"model": str, "dimension": int, "embeddings": [[float, ...], ...]}

#include <chrono>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "tcmeval/error.hpp"
#include "tcmeval/semantic.hpp"

namespace tcmeval {

inline constexpr std::size_t kBridgeMaxBatch = 256;
inline constexpr std::size_t kBridgeMaxTextBytes = 8192;

struct BridgeUrl {
    std::string origin; // scheme://host[:port]
    std::string prefix; // path prefix without trailing slash
};

inline BridgeUrl parse_bridge_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos || url.compare(0, scheme, "http") != 0)
        throw ParameterError("bridge URL must start with http://, got '" + url + "'");
    const auto path = url.find('/', scheme + 3);
    BridgeUrl out;
    out.origin = url.substr(0, path);
    if (path != std::string::npos) out.prefix = url.substr(path);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    if (out.origin.size() <= scheme + 3) throw ParameterError("bridge URL has no host: '" + url + "'");
    return out;
}

class BridgeEmbedder final : public EmbeddingProvider {
public:
    /// Contacts /health immediately; throws EmbeddingError if the service is
    /// unreachable or malformed.
    explicit BridgeEmbedder(const std::string& url, std::chrono::seconds timeout = std::chrono::seconds(120))
        : url_(parse_bridge_url(url)), timeout_(timeout) {
        auto cli = client();
        auto res = cli.Get(url_.prefix + "/health");
        if (!res) throw EmbeddingError("bridge /health unreachable: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw EmbeddingError("bridge /health returned HTTP " + std::to_string(res->status));
        try {
            const auto j = nlohmann::json::parse(res->body);
            model_ = j.at("model").get<std::string>();
            dimension_ = j.at("dimension").get<std::size_t>();
        } catch (const std::exception& e) {
            throw EmbeddingError(std::string("bridge /health malformed: ") + e.what());
        }
        if (dimension_ == 0) throw EmbeddingError("bridge reports dimension 0");
    }

    std::string name() const override { return "bridge:" + model_; }
    std::size_t dimension() const override { return dimension_; }
    const std::string& model() const { return model_; }

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (texts[i].size() > kBridgeMaxTextBytes)
                throw EmbeddingError("text " + std::to_string(i) + " exceeds " +
                                     std::to_string(kBridgeMaxTextBytes) + " bytes");
        }
        std::vector<Embedding> out;
        out.reserve(texts.size());
        auto cli = client();
        for (std::size_t begin = 0; begin < texts.size(); begin += kBridgeMaxBatch) {
            const std::size_t end = std::min(texts.size(), begin + kBridgeMaxBatch);
            nlohmann::json req{{"texts", std::vector<std::string>(texts.begin() + begin, texts.begin() + end)}};
            auto res = cli.Post(url_.prefix + "/embed", req.dump(), "application/json");
            if (!res) throw EmbeddingError("bridge /embed unreachable: " + httplib::to_string(res.error()));
            if (res->status != 200)
                throw EmbeddingError("bridge /embed returned HTTP " + std::to_string(res->status) +
                                     ": " + res->body);
            std::vector<Embedding> batch;
            try {
                const auto j = nlohmann::json::parse(res->body);
                batch = j.at("embeddings").get<std::vector<Embedding>>();
            } catch (const std::exception& e) {
                throw EmbeddingError(std::string("bridge /embed malformed: ") + e.what());
            }
            if (batch.size() != end - begin)
                throw EmbeddingError("bridge returned " + std::to_string(batch.size()) +
                                     " vectors for " + std::to_string(end - begin) + " texts");
            for (auto& v : batch) {
                if (v.size() != dimension_)
                    throw EmbeddingError("bridge vector has dimension " + std::to_string(v.size()) +
                                         ", expected " + std::to_string(dimension_));
                out.push_back(std::move(v));
            }
        }
        return out;
    }

private:
    httplib::Client client() const {
        httplib::Client cli(url_.origin);
        cli.set_connection_timeout(timeout_);
        cli.set_read_timeout(timeout_);
        return cli;
    }

    BridgeUrl url_;
    std::chrono::seconds timeout_;
    std::string model_;
    std::size_t dimension_ = 0;
};

} // namespace tcmeval
