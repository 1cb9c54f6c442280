#ifndef MDRNN_SYNTH_H_
#define MDRNN_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "mdrnn/corpus.h"

namespace mdrnn::synth {

enum class Task { kMemorize, kFutureDep };

Task parse_task(std::string_view name);
std::string_view task_name(Task task);

// Sentences of filler words with PER, LOC and ORG mentions drawn from
// disjoint word pools, BIO2 tags. Every sentence is its own document.
std::vector<Sentence> memorize(std::size_t size, std::uint64_t seed);

// Sentence pairs [name, fillers..., cue] that differ only in the cue. The
// first token is B-ORG after cue "inc" and B-PER after cue "said"; the other
// tokens are O. Each sentence has at least `min_fillers` fillers, so the cue
// is outside any input window of radius < min_fillers + 1 around token 0.
std::vector<Sentence> future_dependency(std::size_t size, std::uint64_t seed,
                                        std::size_t min_fillers = 2);

inline constexpr std::string_view kOrgCue = "inc";
inline constexpr std::string_view kPerCue = "said";

std::vector<Sentence> generate(Task task, std::size_t size, std::uint64_t seed);

}  // namespace mdrnn::synth

#endif  // MDRNN_SYNTH_H_
