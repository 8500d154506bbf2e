#pragma once

#include <string>

#include "neggen/backend.hpp"
#include "neggen/negimage.hpp"

namespace neggen {

// Splits "http://host:port/path" into a client base and the request path
// (path defaults to "/").
struct HttpEndpoint {
    std::string base;  // scheme://host:port
    std::string path;

    static HttpEndpoint parse(const std::string& url);
};

// POST {"prompt","max_tokens","temperature","seed"} -> {"text"}.
class HttpTextBackend : public TextBackend {
  public:
    HttpTextBackend(std::string url, std::string token = {});
    GenerationResponse generate(const GenerationRequest& request) override;
    std::string id() const override { return "http:" + endpoint_.base; }

  private:
    HttpEndpoint endpoint_;
    std::string token_;
};

// POST {"image","box","caption","phrase","layout","seed"} -> {"image"}.
// Local mode sends the source image path; remote mode sends base64 of its
// bytes and decodes a base64 reply into out_root.
class HttpImageBackend : public ImageBackend {
  public:
    HttpImageBackend(std::string url, std::string token = {}, bool remote = false,
                     std::filesystem::path out_root = {});
    std::string inpaint(const ImageEditRequest& request) override;
    std::string id() const override { return "http:" + endpoint_.base; }

  private:
    HttpEndpoint endpoint_;
    std::string token_;
    bool remote_ = false;
    std::filesystem::path out_root_;
};

// POST {"image","crop","texts"} -> {"logits"}.
class HttpScorer : public Scorer {
  public:
    HttpScorer(std::string url, std::string token = {});
    std::vector<double> score(const std::string& image,
                              const std::optional<BoundingBox>& crop,
                              const std::vector<std::string>& texts) override;
    std::string id() const override { return "http:" + endpoint_.base; }

  private:
    HttpEndpoint endpoint_;
    std::string token_;
};

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace neggen
