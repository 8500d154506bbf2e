#include "neggen/http_backend.hpp"

#include <chrono>

#include "httplib.h"
#include "json.hpp"
#include "neggen/errors.hpp"
#include "neggen/hash.hpp"
#include "neggen/jsonl.hpp"

namespace neggen {

HttpEndpoint HttpEndpoint::parse(const std::string& url) {
    size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw ValidationError("backend URL must include a scheme: " + url);
    }
    size_t host_start = scheme + 3;
    size_t slash = url.find('/', host_start);
    HttpEndpoint ep;
    if (slash == std::string::npos) {
        ep.base = url;
        ep.path = "/";
    } else {
        ep.base = url.substr(0, slash);
        ep.path = url.substr(slash);
    }
    return ep;
}

namespace {

// httplib clients are not safe to share across threads; a client per call
// keeps the backends usable under the pipeline's in-flight concurrency.
nlohmann::json post_json(const HttpEndpoint& endpoint, const std::string& token,
                         const nlohmann::json& body) {
    httplib::Client client(endpoint.base);
    client.set_connection_timeout(10);
    client.set_read_timeout(300);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    auto res = client.Post(endpoint.path, headers, body.dump(), "application/json");
    if (!res) {
        throw BackendError("backend unreachable: " + endpoint.base + endpoint.path);
    }
    if (res->status != 200) {
        throw BackendError("backend returned HTTP " + std::to_string(res->status) +
                           ": " + endpoint.base + endpoint.path);
    }
    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw BackendError("backend reply is not JSON");
    return j;
}

}  // namespace

HttpTextBackend::HttpTextBackend(std::string url, std::string token)
    : endpoint_(HttpEndpoint::parse(url)), token_(std::move(token)) {}

GenerationResponse HttpTextBackend::generate(const GenerationRequest& request) {
    auto start = std::chrono::steady_clock::now();
    nlohmann::json body = {{"prompt", request.prompt},
                           {"max_tokens", request.max_tokens},
                           {"temperature", request.temperature},
                           {"seed", request.seed}};
    nlohmann::json reply = post_json(endpoint_, token_, body);
    if (!reply.contains("text") || !reply.at("text").is_string()) {
        throw BackendError("text backend reply missing 'text'");
    }
    GenerationResponse resp;
    resp.text = reply.at("text").get<std::string>();
    if (resp.text.empty()) throw BackendError("text backend returned empty text");
    resp.backend_id = id();
    resp.latency_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    return resp;
}

HttpImageBackend::HttpImageBackend(std::string url, std::string token, bool remote,
                                   std::filesystem::path out_root)
    : endpoint_(HttpEndpoint::parse(url)),
      token_(std::move(token)),
      remote_(remote),
      out_root_(std::move(out_root)) {}

std::string HttpImageBackend::inpaint(const ImageEditRequest& request) {
    nlohmann::json layout = nlohmann::json::array();
    for (const auto& e : request.layout) {
        layout.push_back(
            {{"box", {e.box.x1, e.box.y1, e.box.x2, e.box.y2}}, {"phrase", e.phrase}});
    }
    std::string image_field = request.source_image;
    if (remote_) {
        image_field = base64_encode(read_text_file(request.source_image));
    }
    nlohmann::json body = {{"image", image_field},
                           {"box",
                            {request.target_box.x1, request.target_box.y1,
                             request.target_box.x2, request.target_box.y2}},
                           {"caption", request.edited_caption},
                           {"phrase", request.edited_phrase},
                           {"layout", layout},
                           {"seed", request.seed}};
    nlohmann::json reply = post_json(endpoint_, token_, body);
    if (!reply.contains("image") || !reply.at("image").is_string()) {
        throw BackendError("image backend reply missing 'image'");
    }
    std::string image = reply.at("image").get<std::string>();
    if (!remote_) return image;
    // remote replies carry the PNG bytes; materialize them under out_root
    std::string bytes = base64_decode(image);
    std::string key = sha256_hex(bytes).substr(0, 16);
    std::filesystem::path rel = std::filesystem::path("images/generated") / (key + ".png");
    write_text_file(out_root_ / rel, bytes);
    return rel.generic_string();
}

HttpScorer::HttpScorer(std::string url, std::string token)
    : endpoint_(HttpEndpoint::parse(url)), token_(std::move(token)) {}

std::vector<double> HttpScorer::score(const std::string& image,
                                      const std::optional<BoundingBox>& crop,
                                      const std::vector<std::string>& texts) {
    nlohmann::json body = {{"image", image}, {"texts", texts}};
    body["crop"] = crop ? nlohmann::json({crop->x1, crop->y1, crop->x2, crop->y2})
                        : nlohmann::json(nullptr);
    nlohmann::json reply = post_json(endpoint_, token_, body);
    if (!reply.contains("logits") || !reply.at("logits").is_array()) {
        throw BackendError("scorer reply missing 'logits'");
    }
    std::vector<double> logits = reply.at("logits").get<std::vector<double>>();
    if (logits.size() != texts.size()) {
        throw BackendError("scorer returned " + std::to_string(logits.size()) +
                           " logits for " + std::to_string(texts.size()) + " texts");
    }
    return logits;
}

std::string base64_encode(std::string_view bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= bytes.size()) {
        uint32_t v = (static_cast<uint8_t>(bytes[i]) << 16) |
                     (static_cast<uint8_t>(bytes[i + 1]) << 8) |
                     static_cast<uint8_t>(bytes[i + 2]);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
        i += 3;
    }
    size_t rest = bytes.size() - i;
    if (rest == 1) {
        uint32_t v = static_cast<uint8_t>(bytes[i]) << 16;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out += "==";
    } else if (rest == 2) {
        uint32_t v = (static_cast<uint8_t>(bytes[i]) << 16) |
                     (static_cast<uint8_t>(bytes[i + 1]) << 8);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::string out;
    uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        int v = value_of(c);
        if (v < 0) throw ParseError("invalid base64 payload");
        acc = (acc << 6) | static_cast<uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<char>((acc >> bits) & 0xff));
        }
    }
    return out;
}

}  // namespace neggen
