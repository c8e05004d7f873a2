#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace coinworld {

// Canonical door order everywhere: north, south, east, west.
enum class Direction : int { North = 0, South = 1, East = 2, West = 3 };

constexpr int kNumDirections = 4;

inline Direction opposite(Direction d) {
    switch (d) {
        case Direction::North: return Direction::South;
        case Direction::South: return Direction::North;
        case Direction::East: return Direction::West;
        case Direction::West: return Direction::East;
    }
    return Direction::North;  // unreachable
}

// Compass rotation neighbours, used by scripted wall-follow policies and the
// bigram analyzer: clockwise N->E->S->W, anticlockwise N->W->S->E.
inline Direction rotate_cw(Direction d) {
    switch (d) {
        case Direction::North: return Direction::East;
        case Direction::East: return Direction::South;
        case Direction::South: return Direction::West;
        case Direction::West: return Direction::North;
    }
    return Direction::North;
}

inline Direction rotate_acw(Direction d) {
    switch (d) {
        case Direction::North: return Direction::West;
        case Direction::West: return Direction::South;
        case Direction::South: return Direction::East;
        case Direction::East: return Direction::North;
    }
    return Direction::North;
}

inline const std::string& direction_word(Direction d) {
    static const std::array<std::string, 4> words = {"north", "south", "east", "west"};
    return words[static_cast<size_t>(d)];
}

std::optional<Direction> direction_from_word(const std::string& w);

enum class Verb : int { Go = 0, Take = 1 };
constexpr int kNumVerbs = 2;

// Object head order matches Direction for the first four entries.
enum class CmdObject : int { North = 0, South = 1, East = 2, West = 3, Coin = 4 };
constexpr int kNumObjects = 5;

constexpr int kNumCommands = kNumVerbs * kNumObjects;  // the full 10-command space

struct Command {
    Verb verb = Verb::Go;
    CmdObject object = CmdObject::North;

    bool operator==(const Command&) const = default;
};

inline Command make_go(Direction d) {
    return Command{Verb::Go, static_cast<CmdObject>(static_cast<int>(d))};
}

inline Command take_coin() { return Command{Verb::Take, CmdObject::Coin}; }

inline bool is_movement(const Command& c) {
    return c.verb == Verb::Go && c.object != CmdObject::Coin;
}

inline Direction movement_direction(const Command& c) {
    return static_cast<Direction>(static_cast<int>(c.object));
}

// Flat index in [0, 10): verb-major layout.
inline int command_index(const Command& c) {
    return static_cast<int>(c.verb) * kNumObjects + static_cast<int>(c.object);
}

Command command_from_index(int idx);

const std::string& verb_word(Verb v);
const std::string& object_word(CmdObject o);

// "go north", "take coin", ...
std::string command_words(const Command& c);

// Parse two whitespace-separated words (case-insensitive). Returns nullopt
// for anything outside the verb x object grid.
std::optional<Command> parse_command(const std::string& text);

}  // namespace coinworld
