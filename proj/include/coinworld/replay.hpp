#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "coinworld/command.hpp"
#include "coinworld/rng.hpp"
#include "coinworld/textcodec.hpp"

namespace coinworld {

struct Transition {
    std::string input_text;        // composed model input at decision time
    std::string next_input_text;   // composed input the policy saw next
    TokenSequence input_ids;       // cached encodings of the above
    TokenSequence next_input_ids;
    Command action;
    double total_reward = 0.0;     // game reward + exploration bonus (learning signal)
    double game_reward = 0.0;      // game reward alone (metrics, prioritization)
    bool done = false;
    int game_id = 0;
};

struct EpisodeTrace {
    std::vector<Transition> transitions;

    int length() const { return static_cast<int>(transitions.size()); }
    // "Positive" for prioritized sampling means the game itself paid out,
    // not that bonuses did (episodic bonuses make every episode's total
    // reward positive, which would void the prioritization).
    bool has_positive_reward() const;
};

// One sampled training item: `seq_len` consecutive transitions of an episode.
// Episodes shorter than seq_len are left-padded by repeating their first
// transition `pad` times; the trainer masks the loss at padded positions.
struct SampledSequence {
    const EpisodeTrace* trace = nullptr;
    int start = 0;  // index of the first real (unpadded) transition
    int pad = 0;
    bool positive_draw = false;

    // Transition at sequence position t in [0, seq_len).
    const Transition& at(int t) const {
        int idx = (t < pad) ? start : start + (t - pad);
        return trace->transitions[static_cast<size_t>(idx)];
    }
};

// Episode-granular ring buffer bounded by total transition count. Sampling
// draws ceil(rho * batch) items from episodes with positive game reward (when
// any exist) and the rest uniformly: episode first, then a start offset.
class ReplayMemory {
public:
    explicit ReplayMemory(size_t capacity_transitions = 500000);

    void push(EpisodeTrace episode);

    size_t total_transitions() const { return total_; }
    size_t episode_count() const { return episodes_.size(); }
    size_t positive_episode_count() const { return positive_ids_.size(); }
    size_t capacity() const { return capacity_; }

    // Returns `batch` sequences, or an empty vector when the buffer is empty.
    // The element pointers stay valid until the next push().
    std::vector<SampledSequence> sample_sequences(int batch, int seq_len, double rho,
                                                  Rng& rng) const;

private:
    size_t capacity_;
    std::deque<EpisodeTrace> episodes_;
    std::deque<uint64_t> episode_ids_;   // parallel to episodes_, monotone
    std::deque<uint64_t> positive_ids_;  // ids of positive episodes, ascending
    uint64_t next_id_ = 0;
    size_t total_ = 0;

    const EpisodeTrace& by_id(uint64_t id) const;
    SampledSequence draw_from(const EpisodeTrace& ep, int seq_len, bool positive, Rng& rng) const;
};

}  // namespace coinworld
