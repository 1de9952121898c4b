#include "fia/corpus.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "fia/rng.hpp"

namespace fia {

namespace {

std::vector<std::string> build_vocabulary(Rng& rng, std::size_t size) {
    static const char* onsets[] = {"b",  "br", "c",  "ch", "d",  "dr", "f",  "g",
                                   "gr", "h",  "j",  "k",  "l",  "m",  "n",  "p",
                                   "pl", "r",  "s",  "st", "t",  "th", "tr", "v", "w"};
    static const char* nuclei[] = {"a", "ai", "e", "ea", "i", "o", "oa", "u", "ou"};
    static const char* codas[] = {"",  "n",  "r", "s",  "t",  "l",  "m",
                                  "nd", "st", "ck", "ng", "th", ""};
    std::vector<std::string> vocab;
    vocab.reserve(size);
    while (vocab.size() < size) {
        std::string word;
        const int syllables = 1 + static_cast<int>(rng.below(3));
        for (int s = 0; s < syllables; ++s) {
            word += onsets[rng.below(std::size(onsets))];
            word += nuclei[rng.below(std::size(nuclei))];
            word += codas[rng.below(std::size(codas))];
        }
        vocab.push_back(word);
    }
    return vocab;
}

} // namespace

std::string synthetic_corpus(std::size_t n_bytes, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t vocab_size = 180;
    const std::vector<std::string> vocab = build_vocabulary(rng, vocab_size);

    // Sparse bigram chain: each word can be followed by a small fixed set of
    // successors, so the sequence has structure beyond unigram frequencies.
    const std::size_t fanout = 6;
    std::vector<std::array<std::size_t, 6>> successors(vocab_size);
    for (auto& row : successors)
        for (auto& s : row) s = rng.below(vocab_size);

    std::string text;
    text.reserve(n_bytes + 32);
    std::size_t word = rng.below(vocab_size);
    bool sentence_start = true;
    std::size_t words_in_sentence = 0;
    while (text.size() < n_bytes) {
        std::string token = vocab[word];
        if (sentence_start) token[0] = static_cast<char>(std::toupper(token[0]));
        text += token;
        sentence_start = false;
        ++words_in_sentence;
        if (words_in_sentence >= 6 + rng.below(9)) {
            text += rng.uniform() < 0.8 ? ". " : "? ";
            sentence_start = true;
            words_in_sentence = 0;
        } else {
            text += rng.uniform() < 0.08 ? ", " : " ";
        }
        word = successors[word][rng.below(fanout)];
    }
    text.resize(n_bytes);
    return text;
}

double byte_entropy(const std::string& text) {
    if (text.empty()) return 0.0;
    std::array<std::size_t, 256> counts{};
    for (unsigned char b : text) ++counts[b];
    const double total = static_cast<double>(text.size());
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

} // namespace fia
