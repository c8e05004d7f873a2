#include "coinworld/command.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace coinworld {

namespace {

std::string lowered(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::optional<Direction> direction_from_word(const std::string& w) {
    for (int d = 0; d < kNumDirections; ++d) {
        if (w == direction_word(static_cast<Direction>(d))) return static_cast<Direction>(d);
    }
    return std::nullopt;
}

Command command_from_index(int idx) {
    if (idx < 0 || idx >= kNumCommands) throw std::out_of_range("command index out of range");
    return Command{static_cast<Verb>(idx / kNumObjects), static_cast<CmdObject>(idx % kNumObjects)};
}

const std::string& verb_word(Verb v) {
    static const std::array<std::string, 2> words = {"go", "take"};
    return words[static_cast<size_t>(v)];
}

const std::string& object_word(CmdObject o) {
    static const std::array<std::string, 5> words = {"north", "south", "east", "west", "coin"};
    return words[static_cast<size_t>(o)];
}

std::string command_words(const Command& c) {
    return verb_word(c.verb) + " " + object_word(c.object);
}

std::optional<Command> parse_command(const std::string& text) {
    std::istringstream in(lowered(text));
    std::string first, second, extra;
    if (!(in >> first >> second)) return std::nullopt;
    if (in >> extra) return std::nullopt;

    std::optional<Verb> verb;
    for (int v = 0; v < kNumVerbs; ++v) {
        if (first == verb_word(static_cast<Verb>(v))) verb = static_cast<Verb>(v);
    }
    if (!verb) return std::nullopt;

    for (int o = 0; o < kNumObjects; ++o) {
        if (second == object_word(static_cast<CmdObject>(o))) {
            return Command{*verb, static_cast<CmdObject>(o)};
        }
    }
    return std::nullopt;
}

}  // namespace coinworld
