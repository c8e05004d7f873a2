#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace coinworld {

// Count-based exploration bonus flavours:
//   None       -> always 0
//   Cumulative -> beta * n(o)^(-1/3), counts persist across episodes
//   Episodic   -> beta iff o is first seen this episode, reset every episode
enum class BonusKind : int { None = 0, Cumulative = 1, Episodic = 2 };

const std::string& bonus_kind_name(BonusKind k);
BonusKind bonus_kind_from_name(const std::string& name);

struct BonusConfig {
    BonusKind kind = BonusKind::None;
    double beta = 1.0;
};

// Per-game observation counters keyed on the raw observation text. Games are
// independent: each id owns its own tables and episode state.
class CountTable {
public:
    void register_game(int game_id);
    bool has_game(int game_id) const;

    // Counts the observation for the game and returns the bonus under `cfg`.
    // With kind == None nothing is recorded and the bonus is 0.
    double observe_and_bonus(int game_id, const std::string& observation, const BonusConfig& cfg);

    // Clears the game's episodic first-visit set. Call at every episode start.
    void reset_episode(int game_id, const BonusConfig& cfg);

    long cumulative_count(int game_id, const std::string& observation) const;
    bool seen_this_episode(int game_id, const std::string& observation) const;
    size_t distinct_observations(int game_id) const;

    // Order-independent fingerprint (games and observations sorted).
    uint64_t checksum() const;

    // CSV rows "game_id,count,observation", sorted by game then text.
    void dump_csv(std::ostream& out) const;

private:
    struct GameCounts {
        std::unordered_map<std::string, long> cumulative;
        std::unordered_set<std::string> episode_seen;
    };
    std::map<int, GameCounts> games_;

    GameCounts& game(int game_id);
    const GameCounts& game(int game_id) const;
};

// Bonus value for a cumulative count (the n^(-1/3) law), exposed for tests.
double cumulative_bonus_value(double beta, long count);

// Eval runs never count or reward exploration.
BonusConfig disable_for_eval(const BonusConfig& cfg);

}  // namespace coinworld
