#pragma once

#include <cstddef>
#include <vector>

namespace covqa {

// Fuse the four text segments of one answer option into
//   <s> Q </s> <s> S </s> <s> M </s> <s> A </s>
// When the result would exceed cap_n, subtitles are truncated from their end
// first, then metadata; the question and the answer are never cut. All eight
// delimiter tokens are always present.
std::vector<int> assemble_answer_context(const std::vector<int>& question,
                                         const std::vector<int>& subtitles,
                                         const std::vector<int>& meta,
                                         const std::vector<int>& answer, std::size_t cap_n);

}  // namespace covqa
