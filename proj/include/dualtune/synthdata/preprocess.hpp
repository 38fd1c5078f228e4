#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dualtune {

/// Collapses every run of three or more identical vowels (aeiou, either
/// case) to one character. Shorter runs are kept, so "good" survives.
std::string clean_lyrics(std::string_view text);

struct LyricLine {
  std::string text;
  std::size_t frames = 0;
};

struct Segment {
  std::vector<std::size_t> lines;  // indices into the input
  std::size_t frames = 0;
};

/// Greedy left-to-right packing of consecutive lines into segments of at
/// most `max_frames`. Lines are never split or reordered; a line longer than
/// `max_frames` is rejected with std::invalid_argument naming it.
std::vector<Segment> merge_segments(std::span<const LyricLine> lines, std::size_t max_frames);

}  // namespace dualtune
