#include "coinworld/exploration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "coinworld/hash.hpp"

namespace coinworld {

const std::string& bonus_kind_name(BonusKind k) {
    static const std::array<std::string, 3> names = {"none", "cumulative", "episodic"};
    return names[static_cast<size_t>(k)];
}

BonusKind bonus_kind_from_name(const std::string& name) {
    for (int k = 0; k < 3; ++k) {
        if (name == bonus_kind_name(static_cast<BonusKind>(k))) return static_cast<BonusKind>(k);
    }
    throw std::invalid_argument("unknown bonus kind: " + name);
}

double cumulative_bonus_value(double beta, long count) {
    if (count < 1) throw std::invalid_argument("bonus requires count >= 1");
    return beta * std::pow(static_cast<double>(count), -1.0 / 3.0);
}

BonusConfig disable_for_eval(const BonusConfig& cfg) {
    BonusConfig off = cfg;
    off.kind = BonusKind::None;
    return off;
}

CountTable::GameCounts& CountTable::game(int game_id) {
    auto it = games_.find(game_id);
    if (it == games_.end()) throw std::out_of_range("unregistered game id");
    return it->second;
}

const CountTable::GameCounts& CountTable::game(int game_id) const {
    auto it = games_.find(game_id);
    if (it == games_.end()) throw std::out_of_range("unregistered game id");
    return it->second;
}

void CountTable::register_game(int game_id) { games_.try_emplace(game_id); }

bool CountTable::has_game(int game_id) const { return games_.count(game_id) > 0; }

double CountTable::observe_and_bonus(int game_id, const std::string& observation,
                                     const BonusConfig& cfg) {
    if (cfg.kind == BonusKind::None) return 0.0;
    GameCounts& g = game(game_id);
    switch (cfg.kind) {
        case BonusKind::Cumulative: {
            long n = ++g.cumulative[observation];
            return cumulative_bonus_value(cfg.beta, n);
        }
        case BonusKind::Episodic: {
            // the bonus only needs the episode set, but the lifetime counts
            // are still kept so inspection tools see what the agent saw
            ++g.cumulative[observation];
            bool first = g.episode_seen.insert(observation).second;
            return first ? cfg.beta : 0.0;
        }
        case BonusKind::None: break;
    }
    return 0.0;
}

void CountTable::reset_episode(int game_id, const BonusConfig& cfg) {
    if (cfg.kind == BonusKind::None) return;
    game(game_id).episode_seen.clear();
}

long CountTable::cumulative_count(int game_id, const std::string& observation) const {
    const GameCounts& g = game(game_id);
    auto it = g.cumulative.find(observation);
    return it == g.cumulative.end() ? 0 : it->second;
}

bool CountTable::seen_this_episode(int game_id, const std::string& observation) const {
    return game(game_id).episode_seen.count(observation) > 0;
}

size_t CountTable::distinct_observations(int game_id) const {
    return game(game_id).cumulative.size();
}

uint64_t CountTable::checksum() const {
    Fnv1a h;
    for (const auto& [id, g] : games_) {
        h.update_i64(id);
        std::vector<std::pair<std::string, long>> rows(g.cumulative.begin(), g.cumulative.end());
        std::sort(rows.begin(), rows.end());
        for (const auto& [obs, n] : rows) {
            h.update(obs);
            h.update_i64(n);
        }
        std::vector<std::string> seen(g.episode_seen.begin(), g.episode_seen.end());
        std::sort(seen.begin(), seen.end());
        for (const auto& obs : seen) {
            h.update(obs);
            h.update("\x1e");
        }
    }
    return h.digest();
}

void CountTable::dump_csv(std::ostream& out) const {
    out << "game_id,count,observation\n";
    for (const auto& [id, g] : games_) {
        std::vector<std::pair<std::string, long>> rows(g.cumulative.begin(), g.cumulative.end());
        std::sort(rows.begin(), rows.end());
        for (const auto& [obs, n] : rows) {
            // quote only when the text needs it (commas, quotes, newlines)
            if (obs.find_first_of(",\"\n") == std::string::npos) {
                out << id << "," << n << "," << obs << "\n";
                continue;
            }
            std::string quoted = obs;
            size_t pos = 0;
            while ((pos = quoted.find('"', pos)) != std::string::npos) {
                quoted.insert(pos, 1, '"');
                pos += 2;
            }
            out << id << "," << n << ",\"" << quoted << "\"\n";
        }
    }
}

}  // namespace coinworld
