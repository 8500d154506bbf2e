#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "neggen/negimage.hpp"

namespace neggen {

// Inpainting stand-in: loads the source image when readable, otherwise
// synthesizes a deterministic placeholder, then fills every layout box whose
// phrase was edited with a color keyed on the edited phrase. Output files are
// PNGs named by a content key under out_root.
class MockImageBackend : public ImageBackend {
  public:
    MockImageBackend(std::filesystem::path out_root,
                     std::filesystem::path subdir = "images/generated");

    std::string inpaint(const ImageEditRequest& request) override;
    std::string id() const override { return "mock"; }

  private:
    std::filesystem::path out_root_;
    std::filesystem::path subdir_;
};

// Deterministic logits: explicit per-text entries from a table file, hashed
// fallback in [-2, 2) otherwise. Never touches pixels.
class MockScorer : public Scorer {
  public:
    MockScorer() = default;
    explicit MockScorer(std::map<std::string, double> table,
                        std::optional<double> default_logit = std::nullopt);
    static MockScorer load(const std::filesystem::path& table_path);

    std::vector<double> score(const std::string& image,
                              const std::optional<BoundingBox>& crop,
                              const std::vector<std::string>& texts) override;
    std::string id() const override { return "mock"; }

  private:
    std::map<std::string, double> table_;
    std::optional<double> default_logit_;
};

}  // namespace neggen
