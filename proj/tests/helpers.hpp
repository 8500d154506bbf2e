#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "neggen/backend.hpp"
#include "neggen/errors.hpp"
#include "neggen/mock_backend.hpp"

namespace neggen::test {

inline std::filesystem::path fixture_dir() { return NEGGEN_FIXTURE_DIR; }
inline std::filesystem::path data_dir() { return NEGGEN_DATA_DIR; }
inline std::string bin_path() { return NEGGEN_BIN; }

// Replays a fixed sequence of replies and records every prompt it saw.
class ScriptedBackend : public TextBackend {
  public:
    explicit ScriptedBackend(std::vector<std::string> replies)
        : replies_(std::move(replies)) {}

    GenerationResponse generate(const GenerationRequest& request) override {
        prompts.push_back(request.prompt);
        if (next_ >= replies_.size()) {
            throw BackendError("scripted backend exhausted");
        }
        return {replies_[next_++], id()};
    }
    std::string id() const override { return "scripted"; }

    std::vector<std::string> prompts;

  private:
    std::vector<std::string> replies_;
    size_t next_ = 0;
};

class FailingBackend : public TextBackend {
  public:
    GenerationResponse generate(const GenerationRequest&) override {
        throw BackendError("backend down");
    }
    std::string id() const override { return "failing"; }
};

inline SubstitutionTable small_table() {
    SubstitutionTable table;
    table.entries["boy"] = {"girl"};
    table.entries["dog"] = {"cat", "wolf"};
    table.entries["man"] = {"woman"};
    table.entries["cake"] = {"pie"};
    return table;
}

inline MockTextBackend make_mock(double echo_rate = 0.0, double nonjson_rate = 0.0) {
    MockBackendOptions opt;
    opt.table = small_table();
    opt.attribute_words = {"sitting", "standing"};
    opt.fault_echo_rate = echo_rate;
    opt.fault_nonjson_rate = nonjson_rate;
    return MockTextBackend(std::move(opt));
}

// Unique scratch directory per test, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("neggen_test_" + tag + "_" + std::to_string(counter()++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::filesystem::path path_;
};

}  // namespace neggen::test
