#include "dualtune/synthdata/tokenizer.hpp"

#include "dualtune/model/config.hpp"

namespace dualtune {

std::vector<int> char_ids(std::string_view text) {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == ' ') {
      ids.push_back(kSpaceToken);
    } else if (c >= 'a' && c <= 'z') {
      ids.push_back(kFirstLetterToken + (c - 'a'));
    } else {
      throw TokenizeError("character outside the a-z/space alphabet at position " +
                              std::to_string(i) + " of \"" + std::string(text) + "\"",
                          i);
    }
  }
  return ids;
}

std::vector<int> tokenize(std::string_view text) {
  std::vector<int> ids{tokens::kBos};
  const auto body = char_ids(text);
  ids.insert(ids.end(), body.begin(), body.end());
  ids.push_back(tokens::kEos);
  return ids;
}

std::string detokenize(std::span<const int> ids) {
  std::string text;
  for (int id : ids) {
    if (id == tokens::kEos) break;
    if (id == kSpaceToken) {
      text.push_back(' ');
    } else if (id >= kFirstLetterToken && id < static_cast<int>(kVocabSize)) {
      text.push_back(static_cast<char>('a' + (id - kFirstLetterToken)));
    }
  }
  return text;
}

}  // namespace dualtune
