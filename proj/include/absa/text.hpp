#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace absa {

/// Surface word with half-open byte offsets into the source string.
struct Word {
  std::string text;
  int from = 0;
  int to = 0;

  bool operator==(const Word&) const = default;
};

/// Whitespace/punctuation word tokenization. Words are maximal runs of
/// alphanumeric bytes (UTF-8 continuation bytes count as letters), with
/// apostrophes and hyphens kept inside a word when flanked by word bytes.
/// Every punctuation byte becomes its own token.
std::vector<Word> tokenize_words(std::string_view text);

/// ASCII case fold; bytes outside [A-Z] pass through.
std::string to_lower(std::string_view s);

/// Surface forms of the selected words joined by single spaces.
std::string join_words(const std::vector<Word>& words,
                       const std::vector<int>& indices);

/// Indices of words overlapping the half-open interval [from, to).
std::vector<int> words_overlapping(const std::vector<Word>& words, int from,
                                   int to);

bool is_punct_token(std::string_view token);

}  // namespace absa
