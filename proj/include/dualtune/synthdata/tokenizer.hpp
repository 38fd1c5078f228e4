#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dualtune {

/// Character vocabulary: PAD, BOS, EOS, space, then a-z.
inline constexpr int kSpaceToken = 3;
inline constexpr int kFirstLetterToken = 4;
inline constexpr std::size_t kVocabSize = 30;

class TokenizeError : public std::invalid_argument {
 public:
  TokenizeError(const std::string& message, std::size_t position)
      : std::invalid_argument(message), position_(position) {}
  /// Byte offset of the offending character.
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Ids of the characters only, without BOS/EOS.
std::vector<int> char_ids(std::string_view text);

/// [BOS, chars..., EOS]. Rejects anything outside lowercase a-z and space.
std::vector<int> tokenize(std::string_view text);

/// Maps ids back to text, skipping PAD/BOS and stopping at the first EOS.
std::string detokenize(std::span<const int> ids);

}  // namespace dualtune
