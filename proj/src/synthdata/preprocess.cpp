#include "dualtune/synthdata/preprocess.hpp"

#include <stdexcept>

namespace dualtune {

namespace {

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
    case 'A': case 'E': case 'I': case 'O': case 'U':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string clean_lyrics(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && text[j] == text[i]) ++j;
    const std::size_t run = j - i;
    if (is_vowel(text[i]) && run >= 3) {
      out.push_back(text[i]);
    } else {
      out.append(text.substr(i, run));
    }
    i = j;
  }
  return out;
}

std::vector<Segment> merge_segments(std::span<const LyricLine> lines, std::size_t max_frames) {
  std::vector<Segment> segments;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.frames > max_frames) {
      throw std::invalid_argument("line " + std::to_string(i) + " (\"" + line.text + "\", " +
                                  std::to_string(line.frames) + " frames) exceeds the " +
                                  std::to_string(max_frames) + "-frame segment limit");
    }
    if (segments.empty() || segments.back().frames + line.frames > max_frames) {
      segments.push_back({});
    }
    segments.back().lines.push_back(i);
    segments.back().frames += line.frames;
  }
  return segments;
}

}  // namespace dualtune
