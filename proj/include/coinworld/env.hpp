#pragma once

#include <optional>
#include <string>

#include "coinworld/command.hpp"
#include "coinworld/worldgen.hpp"

namespace coinworld {

// Fixed surface strings. The text shown to agents is part of the interface
// (counts and vocabularies key on it), so these never vary.
extern const std::string kRefusalText;   // invalid command feedback
extern const std::string kWinText;       // terminal success observation

struct StepResult {
    std::string observation;
    double reward = 0.0;
    bool done = false;
    bool won = false;
    // True when the command had no effect (closed direction, take with no
    // coin). The underlying room state is unchanged on refused steps.
    bool refused = false;
};

// Deterministic single-player episode over a WorldGraph. Commands are the
// verb x object grid; invalid ones (closed direction, take with no coin) are
// refused with zero reward but still consume a step. The episode ends with
// reward `win_reward` when the coin is taken, or with zero when the step
// budget passed to step() runs out.
class Env {
public:
    explicit Env(const WorldGraph& world, double win_reward = 1.0);

    // Starts a fresh episode and returns the initial observation.
    std::string reset();

    // Applies one command. `max_steps` is the episode budget; when the
    // post-command step count reaches it without a win the episode ends.
    // Throws std::logic_error if called before reset() or after done.
    StepResult step(const Command& cmd, int max_steps);

    // Pure renderer for the current state (also used for the reset text).
    std::string render_observation() const;

    const WorldGraph& world() const { return *world_; }
    const Room& current_room() const;
    int current_room_id() const { return current_room_id_; }
    int steps() const { return steps_; }
    bool started() const { return started_; }
    bool done() const { return done_; }
    bool won() const { return won_; }
    bool coin_taken() const { return coin_taken_; }
    const std::optional<Command>& last_command() const { return last_command_; }

private:
    const WorldGraph* world_;
    double win_reward_;
    int current_room_id_ = -1;
    bool started_ = false;
    bool coin_taken_ = false;
    bool done_ = false;
    bool won_ = false;
    int steps_ = 0;
    std::optional<Command> last_command_;
};

// Exit sentence for a room, doors listed in north/south/east/west order:
// "There are no exits." / "There is an exit to the north." /
// "There are exits to the north, south and east."
std::string exits_sentence(const Room& room);

}  // namespace coinworld
