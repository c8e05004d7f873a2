#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinworld/command.hpp"

namespace coinworld {

// Difficulty controls map size and distractor density:
//   easy   -> chain of `level` rooms, no distractors
//   medium -> +1 distractor per chain room (2*level rooms total)
//   hard   -> +2 distractors per chain room (3*level rooms total)
enum class Mode : int { Easy = 0, Medium = 1, Hard = 2 };

const std::string& mode_name(Mode m);
Mode mode_from_name(const std::string& name);

// Which half of the noun pool room names may draw from. Train/test splits use
// disjoint noun halves so generalization sets can never share a room name.
enum class NamePool : int { All = 0, Train = 1, Test = 2 };

struct GameSpec {
    uint64_t seed = 0;
    Mode mode = Mode::Easy;
    int level = 1;  // chain length, >= 1

    bool operator==(const GameSpec&) const = default;
};

struct GridPos {
    int x = 0;
    int y = 0;
    bool operator==(const GridPos&) const = default;
};

// Unit-grid neighbour in the given compass direction (north = +y, east = +x).
GridPos neighbor(GridPos p, Direction d);

struct Room {
    int id = -1;
    std::string name;         // "adjective noun", unique within a world
    std::string description;  // "You are in the <name>."
    std::array<int, kNumDirections> exits{-1, -1, -1, -1};  // room id or -1, by Direction
    GridPos grid_pos;

    int exit_count() const;
};

struct WorldGraph {
    GameSpec spec;
    std::vector<Room> rooms;        // indexed by room id
    std::vector<int> chain;         // backbone path, chain[0] = start
    int start_id = -1;
    int coin_room_id = -1;          // last chain room
    std::vector<int> distractor_ids;  // sorted, disjoint from chain

    bool is_distractor(int room_id) const;
    int room_count() const { return static_cast<int>(rooms.size()); }
};

// Expected room count for a spec: level * (1 + distractors-per-room).
int expected_room_count(const GameSpec& spec);
int distractors_per_room(Mode mode);

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Deterministic function of (spec, pool). Throws GenerationError if no valid
// layout is found within the retry budget (does not happen for level <= 30).
WorldGraph generate_world(const GameSpec& spec, NamePool pool = NamePool::All);

// Structural soundness check used by tests and the CLI: symmetric exits,
// unique grid cells adjacent along door directions, acyclicity (room graph is
// a tree), chain integrity, room count, name uniqueness, degree bounds.
// Returns a list of violation messages, empty when the world is valid.
std::vector<std::string> validate_world(const WorldGraph& w);

// Unique action sequence solving the game: walk the chain, then take coin.
std::vector<Command> shortest_solution(const WorldGraph& w);

// Identity of a world as the player experiences it: chain room names plus the
// optimal command sequence.
std::string world_signature(const WorldGraph& w);

// True when the two sets share no room description and no optimal-path
// signature. Both sets must be non-empty.
bool check_disjoint(const std::vector<WorldGraph>& train, const std::vector<WorldGraph>& test);

// Name pool accessors (exposed for tests of pool disjointness).
const std::vector<std::string>& name_adjectives();
const std::vector<std::string>& name_nouns(NamePool pool);

nlohmann::ordered_json world_to_json(const WorldGraph& w);
WorldGraph world_from_json(const nlohmann::json& j);
void save_world(const WorldGraph& w, const std::string& path);
WorldGraph load_world(const std::string& path);

// Stable fingerprint of the serialized world (FNV-1a over canonical JSON).
uint64_t world_fingerprint(const WorldGraph& w);

}  // namespace coinworld
