#include "coinworld/replay.hpp"

#include <cmath>
#include <stdexcept>

namespace coinworld {

bool EpisodeTrace::has_positive_reward() const {
    for (const Transition& t : transitions) {
        if (t.game_reward > 0.0) return true;
    }
    return false;
}

ReplayMemory::ReplayMemory(size_t capacity_transitions) : capacity_(capacity_transitions) {
    if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayMemory::push(EpisodeTrace episode) {
    if (episode.transitions.empty()) throw std::invalid_argument("cannot push empty episode");
    const size_t len = episode.transitions.size();
    if (episode.has_positive_reward()) positive_ids_.push_back(next_id_);
    episode_ids_.push_back(next_id_);
    ++next_id_;
    total_ += len;
    episodes_.push_back(std::move(episode));

    // Evict whole episodes from the front; a single over-long episode is kept
    // rather than split.
    while (total_ > capacity_ && episodes_.size() > 1) {
        total_ -= episodes_.front().transitions.size();
        uint64_t evicted = episode_ids_.front();
        episodes_.pop_front();
        episode_ids_.pop_front();
        if (!positive_ids_.empty() && positive_ids_.front() == evicted) positive_ids_.pop_front();
    }
}

const EpisodeTrace& ReplayMemory::by_id(uint64_t id) const {
    // ids are dense and monotone: offset from the oldest resident episode
    uint64_t front_id = episode_ids_.front();
    return episodes_[static_cast<size_t>(id - front_id)];
}

SampledSequence ReplayMemory::draw_from(const EpisodeTrace& ep, int seq_len, bool positive,
                                        Rng& rng) const {
    SampledSequence s;
    s.trace = &ep;
    s.positive_draw = positive;
    const int len = ep.length();
    if (len >= seq_len) {
        s.start = rng.uniform_int(len - seq_len + 1);
        s.pad = 0;
    } else {
        s.start = 0;
        s.pad = seq_len - len;
    }
    return s;
}

std::vector<SampledSequence> ReplayMemory::sample_sequences(int batch, int seq_len, double rho,
                                                            Rng& rng) const {
    if (batch < 1 || seq_len < 1) throw std::invalid_argument("batch and seq_len must be >= 1");
    if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("rho must be in [0, 1]");
    std::vector<SampledSequence> out;
    if (episodes_.empty()) return out;

    const bool have_positive = !positive_ids_.empty();
    const int want_positive =
        have_positive ? static_cast<int>(std::ceil(rho * static_cast<double>(batch))) : 0;

    out.reserve(static_cast<size_t>(batch));
    for (int k = 0; k < batch; ++k) {
        if (k < want_positive) {
            uint64_t id = positive_ids_[static_cast<size_t>(
                rng.uniform_int(static_cast<int>(positive_ids_.size())))];
            out.push_back(draw_from(by_id(id), seq_len, true, rng));
        } else {
            const EpisodeTrace& ep = episodes_[static_cast<size_t>(
                rng.uniform_int(static_cast<int>(episodes_.size())))];
            out.push_back(draw_from(ep, seq_len, false, rng));
        }
    }
    return out;
}

}  // namespace coinworld
