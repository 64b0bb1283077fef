#include "covqa/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "covqa/errors.hpp"

namespace covqa {

namespace {
const char* kSpecialNames[kNumSpecials] = {"<s>", "</s>", "<pad>", "<unk>"};
}

std::vector<std::string> word_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus, std::size_t cap) {
    if (corpus.empty()) throw ConfigError("build_vocabulary: empty corpus");
    // std::map keeps the tie order lexicographic for equal frequencies.
    std::map<std::string, std::size_t> counts;
    for (const auto& text : corpus)
        for (auto& w : word_tokens(text)) ++counts[w];

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > cap) ranked.resize(cap);

    Vocabulary v;
    v.id_to_token_.reserve(ranked.size() + kNumSpecials);
    for (const char* s : kSpecialNames) v.id_to_token_.emplace_back(s);
    for (auto& [tok, cnt] : ranked) v.id_to_token_.push_back(tok);
    v.index_tokens();
    return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    if (tokens.size() < kNumSpecials)
        throw FormatError("vocabulary: fewer tokens than the four specials");
    for (int i = 0; i < kNumSpecials; ++i)
        if (tokens[static_cast<std::size_t>(i)] != kSpecialNames[i])
            throw FormatError("vocabulary: special id " + std::to_string(i) + " is '" +
                              tokens[static_cast<std::size_t>(i)] + "', expected '" +
                              kSpecialNames[i] + "'");
    Vocabulary v;
    v.id_to_token_ = std::move(tokens);
    v.index_tokens();
    return v;
}

void Vocabulary::index_tokens() {
    token_to_id_.clear();
    token_to_id_.reserve(id_to_token_.size());
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
        auto [it, inserted] = token_to_id_.emplace(id_to_token_[i], static_cast<int>(i));
        if (!inserted) throw FormatError("vocabulary: duplicate token '" + id_to_token_[i] + "'");
    }
}

const std::string& Vocabulary::token_of(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
        throw IndexError("vocabulary: id " + std::to_string(id) + " outside [0, " +
                         std::to_string(id_to_token_.size()) + ")");
    return id_to_token_[static_cast<std::size_t>(id)];
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);  // binary keeps line endings bit-exact
    if (!out) throw FormatError("vocabulary: cannot open " + path.string() + " for writing");
    for (const auto& tok : id_to_token_) out << tok << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("vocabulary: cannot open " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) tokens.push_back(line);
    return from_tokens(std::move(tokens));
}

Vocabulary build_vocabulary(const std::vector<std::string>& corpus, std::size_t cap) {
    return Vocabulary::build(corpus, cap);
}

std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab) {
    std::vector<int> ids;
    for (auto& w : word_tokens(text)) ids.push_back(vocab.id_of(w));
    return ids;
}

}  // namespace covqa
