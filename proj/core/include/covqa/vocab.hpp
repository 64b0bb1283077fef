#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace covqa {

// Fixed special ids; every vocabulary starts with these four.
enum SpecialToken : int { kSentStart = 0, kSentEnd = 1, kPad = 2, kUnk = 3 };
inline constexpr int kNumSpecials = 4;

// Lowercased maximal alphanumeric runs; punctuation only separates.
std::vector<std::string> word_tokens(const std::string& text);

// Closed word-level vocabulary. Non-special tokens are ranked by corpus
// frequency, ties broken lexicographically, truncated to the cap.
class Vocabulary {
  public:
    Vocabulary() = default;

    static Vocabulary build(const std::vector<std::string>& corpus, std::size_t cap);
    // Reconstruct from a full token list (specials first), e.g. a checkpoint.
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    std::size_t size() const { return id_to_token_.size(); }
    const std::string& token_of(int id) const;
    // kUnk for out-of-vocabulary words.
    int id_of(const std::string& token) const;
    const std::vector<std::string>& tokens() const { return id_to_token_; }

    // Line-oriented text file: one token per line, line number = id.
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

  private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;

    void index_tokens();
};

Vocabulary build_vocabulary(const std::vector<std::string>& corpus, std::size_t cap);

// Word tokens to ids; out-of-vocabulary words map to kUnk, no specials added.
std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab);

}  // namespace covqa
