#pragma once

#include <cstdint>
#include <string>

namespace fia {

// Deterministic English-like text: a seeded word vocabulary driven by a
// bigram chain, with sentence casing and punctuation. Gives the byte-level
// language model sequential structure to learn while the order-0 byte
// entropy stays close to natural text.
std::string synthetic_corpus(std::size_t n_bytes, std::uint64_t seed);

// Order-0 byte entropy of the text in nats: -sum p(b) log p(b) over byte
// frequencies. exp() of this is the perplexity of the best memoryless
// predictor, the baseline a trained model must beat.
double byte_entropy(const std::string& text);

} // namespace fia
