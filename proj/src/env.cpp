#include "coinworld/env.hpp"

#include <stdexcept>
#include <vector>

namespace coinworld {

const std::string kRefusalText = "You can't do that.";
const std::string kWinText = "You pick up the coin. You won!";

Env::Env(const WorldGraph& world, double win_reward)
    : world_(&world), win_reward_(win_reward) {
    if (world.rooms.empty()) throw std::invalid_argument("Env requires a non-empty world");
}

std::string Env::reset() {
    current_room_id_ = world_->start_id;
    started_ = true;
    coin_taken_ = false;
    done_ = false;
    won_ = false;
    steps_ = 0;
    last_command_.reset();
    return render_observation();
}

const Room& Env::current_room() const {
    if (!started_) throw std::logic_error("Env::current_room before reset");
    return world_->rooms[static_cast<size_t>(current_room_id_)];
}

std::string exits_sentence(const Room& room) {
    std::vector<std::string> doors;
    for (int d = 0; d < kNumDirections; ++d) {
        if (room.exits[static_cast<size_t>(d)] >= 0)
            doors.push_back(direction_word(static_cast<Direction>(d)));
    }
    if (doors.empty()) return "There are no exits.";
    if (doors.size() == 1) return "There is an exit to the " + doors[0] + ".";
    std::string s = "There are exits to the ";
    for (size_t i = 0; i + 1 < doors.size(); ++i) {
        s += doors[i];
        s += (i + 2 < doors.size()) ? ", " : " and ";
    }
    s += doors.back();
    s += ".";
    return s;
}

std::string Env::render_observation() const {
    if (!started_) throw std::logic_error("Env::render_observation before reset");
    const Room& room = current_room();
    std::string obs = room.description + " " + exits_sentence(room);
    if (room.id == world_->coin_room_id && !coin_taken_) obs += " There is a coin here.";
    return obs;
}

StepResult Env::step(const Command& cmd, int max_steps) {
    if (!started_) throw std::logic_error("Env::step before reset");
    if (done_) throw std::logic_error("Env::step after episode end");
    if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");

    ++steps_;
    last_command_ = cmd;

    StepResult out;
    if (cmd.verb == Verb::Take) {
        const Room& room = current_room();
        if (cmd.object == CmdObject::Coin && room.id == world_->coin_room_id && !coin_taken_) {
            coin_taken_ = true;
            won_ = true;
            done_ = true;
            out.observation = kWinText;
            out.reward = win_reward_;
            out.done = true;
            out.won = true;
            return out;
        }
        out.observation = kRefusalText;
        out.refused = true;
    } else {  // go
        if (cmd.object == CmdObject::Coin) {
            out.observation = kRefusalText;
            out.refused = true;
        } else {
            Direction d = movement_direction(cmd);
            int to = current_room().exits[static_cast<size_t>(d)];
            if (to >= 0) {
                current_room_id_ = to;
                out.observation = render_observation();
            } else {
                out.observation = kRefusalText;
                out.refused = true;
            }
        }
    }

    if (steps_ >= max_steps) {
        done_ = true;
    }
    out.done = done_;
    out.won = false;
    out.reward = 0.0;
    return out;
}

}  // namespace coinworld
