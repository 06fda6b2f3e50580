#include "absa/text.hpp"

#include <cctype>

namespace absa {

namespace {

bool word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

}  // namespace

std::vector<Word> tokenize_words(std::string_view text) {
  std::vector<Word> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    if (word_byte(c)) {
      while (j < n) {
        const unsigned char b = static_cast<unsigned char>(text[j]);
        if (word_byte(b)) {
          ++j;
          continue;
        }
        // keep ' and - inside a word: "don't", "easy-to-use"
        if ((b == '\'' || b == '-') && j > i && j + 1 < n &&
            word_byte(static_cast<unsigned char>(text[j + 1]))) {
          ++j;
          continue;
        }
        break;
      }
    } else {
      j = i + 1;
    }
    out.push_back({std::string(text.substr(i, j - i)), static_cast<int>(i),
                   static_cast<int>(j)});
    i = j;
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string join_words(const std::vector<Word>& words,
                       const std::vector<int>& indices) {
  std::string out;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (k > 0) out += ' ';
    out += words[static_cast<std::size_t>(indices[k])].text;
  }
  return out;
}

std::vector<int> words_overlapping(const std::vector<Word>& words, int from,
                                   int to) {
  std::vector<int> out;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (words[w].from < to && from < words[w].to) {
      out.push_back(static_cast<int>(w));
    }
  }
  return out;
}

bool is_punct_token(std::string_view token) {
  if (token.empty()) return false;
  for (unsigned char c : token) {
    if (word_byte(c)) return false;
  }
  return true;
}

}  // namespace absa
