#include "coinworld/worldgen.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

#include "coinworld/hash.hpp"
#include "coinworld/rng.hpp"

namespace coinworld {

const std::string& mode_name(Mode m) {
    static const std::array<std::string, 3> names = {"easy", "medium", "hard"};
    return names[static_cast<size_t>(m)];
}

Mode mode_from_name(const std::string& name) {
    for (int m = 0; m < 3; ++m) {
        if (name == mode_name(static_cast<Mode>(m))) return static_cast<Mode>(m);
    }
    throw std::invalid_argument("unknown mode: " + name);
}

GridPos neighbor(GridPos p, Direction d) {
    switch (d) {
        case Direction::North: return {p.x, p.y + 1};
        case Direction::South: return {p.x, p.y - 1};
        case Direction::East: return {p.x + 1, p.y};
        case Direction::West: return {p.x - 1, p.y};
    }
    return p;
}

int Room::exit_count() const {
    int n = 0;
    for (int e : exits) n += (e >= 0) ? 1 : 0;
    return n;
}

bool WorldGraph::is_distractor(int room_id) const {
    return std::binary_search(distractor_ids.begin(), distractor_ids.end(), room_id);
}

int distractors_per_room(Mode mode) {
    switch (mode) {
        case Mode::Easy: return 0;
        case Mode::Medium: return 1;
        case Mode::Hard: return 2;
    }
    return 0;
}

int expected_room_count(const GameSpec& spec) {
    return spec.level * (1 + distractors_per_room(spec.mode));
}

namespace {

// Small pools on purpose: room names repeat heavily across the games of a
// multi-game set (as house-themed generators do), so a name is a poor
// predictor of the right move and learned policies must key on the exit
// sentences instead. 7 x 14 = 98 combinations per pool still covers the
// worst-case room count (hard L30 = 90 rooms) with unique names per game.
const std::vector<std::string>& adjectives_impl() {
    static const std::vector<std::string> adjs = {"chilly", "cozy",  "dusty", "gloomy",
                                                  "narrow", "quiet", "sunny"};
    return adjs;
}

const std::vector<std::string>& train_nouns_impl() {
    static const std::vector<std::string> nouns = {
        "attic",  "cellar",  "chamber", "closet", "corridor", "den",   "hall",
        "kitchen", "landing", "library", "lounge", "pantry",   "study", "workshop"};
    return nouns;
}

const std::vector<std::string>& test_nouns_impl() {
    static const std::vector<std::string> nouns = {
        "alcove", "annex",  "archive", "atrium",  "barn",   "cabin", "crypt",
        "forge",  "grotto", "keep",    "mudroom", "rotunda", "stable", "tower"};
    return nouns;
}

struct CellKey {
    int x, y;
    auto operator<=>(const CellKey&) const = default;
};

CellKey key(GridPos p) { return {p.x, p.y}; }

std::optional<Direction> direction_between(GridPos from, GridPos to) {
    for (int d = 0; d < kNumDirections; ++d) {
        if (neighbor(from, static_cast<Direction>(d)) == to) return static_cast<Direction>(d);
    }
    return std::nullopt;
}

// Self-avoiding walk of `level` cells via randomized backtracking DFS.
// medium/hard additionally forbid the walk touching itself diagonally through
// door adjacency (each new cell may only neighbour its predecessor), which
// guarantees interior rooms keep their side cells free for distractors.
// hard restricts bends to chain positions 1 and level-2: anywhere else the
// two rooms flanking the bend would both need the shared inner-corner cell,
// making the 2-distractor quota unsatisfiable.
std::optional<std::vector<GridPos>> chain_walk(Rng& rng, int level, Mode mode) {
    const bool avoid_neighbors = (mode != Mode::Easy);
    const bool straight_interior = (mode == Mode::Hard);

    struct Frame {
        GridPos pos;
        std::vector<Direction> pending;
    };

    std::vector<Frame> stack;
    std::set<CellKey> visited;

    auto push_frame = [&](GridPos p) {
        std::vector<Direction> dirs = {Direction::North, Direction::South, Direction::East,
                                       Direction::West};
        rng.shuffle(dirs);
        stack.push_back(Frame{p, std::move(dirs)});
        visited.insert(key(p));
    };

    push_frame(GridPos{0, 0});
    int expansions = 0;
    const int kMaxExpansions = 50000;

    while (!stack.empty()) {
        if (static_cast<int>(stack.size()) == level) {
            std::vector<GridPos> walk;
            walk.reserve(stack.size());
            for (const Frame& f : stack) walk.push_back(f.pos);
            return walk;
        }
        if (++expansions > kMaxExpansions) return std::nullopt;

        Frame& top = stack.back();
        if (top.pending.empty()) {
            visited.erase(key(top.pos));
            stack.pop_back();
            continue;
        }
        Direction d = top.pending.back();
        top.pending.pop_back();
        GridPos c = neighbor(top.pos, d);
        if (visited.count(key(c))) continue;

        if (straight_interior && stack.size() >= 2) {
            int bend_pos = static_cast<int>(stack.size()) - 1;
            Direction prev_d =
                *direction_between(stack[stack.size() - 2].pos, stack[stack.size() - 1].pos);
            if (prev_d != d && bend_pos != 1 && bend_pos != level - 2) continue;
        }
        if (avoid_neighbors) {
            bool touches = false;
            for (int dd = 0; dd < kNumDirections && !touches; ++dd) {
                GridPos adj = neighbor(c, static_cast<Direction>(dd));
                if (!(adj == top.pos) && visited.count(key(adj))) touches = true;
            }
            if (touches) continue;
        }
        push_frame(c);
    }
    return std::nullopt;
}

// Assign each chain room `quota` distinct off-chain neighbour cells, no cell
// used twice. Kuhn's augmenting-path matching over room-slots x cells.
struct DistractorPlacement {
    int chain_index;
    Direction door;
    GridPos cell;
};

std::optional<std::vector<DistractorPlacement>> match_distractors(
    const std::vector<GridPos>& walk, int quota, Rng& rng) {
    const int level = static_cast<int>(walk.size());
    std::set<CellKey> walk_cells;
    for (GridPos p : walk) walk_cells.insert(key(p));

    std::map<CellKey, int> cell_index;
    std::vector<GridPos> cells;
    std::vector<std::vector<int>> candidates(level);
    for (int i = 0; i < level; ++i) {
        for (int d = 0; d < kNumDirections; ++d) {
            GridPos c = neighbor(walk[i], static_cast<Direction>(d));
            if (walk_cells.count(key(c))) continue;
            auto [it, inserted] = cell_index.try_emplace(key(c), static_cast<int>(cells.size()));
            if (inserted) cells.push_back(c);
            candidates[i].push_back(it->second);
        }
        if (static_cast<int>(candidates[i].size()) < quota) return std::nullopt;
        rng.shuffle(candidates[i]);
    }

    const int slots = level * quota;
    std::vector<int> cell_owner(cells.size(), -1);  // owning slot or -1

    std::function<bool(int, std::vector<char>&)> augment = [&](int slot,
                                                               std::vector<char>& seen) -> bool {
        int room = slot / quota;
        for (int cell : candidates[room]) {
            if (seen[cell]) continue;
            seen[cell] = 1;
            if (cell_owner[cell] < 0 || augment(cell_owner[cell], seen)) {
                cell_owner[cell] = slot;
                return true;
            }
        }
        return false;
    };

    for (int slot = 0; slot < slots; ++slot) {
        std::vector<char> seen(cells.size(), 0);
        if (!augment(slot, seen)) return std::nullopt;
    }

    // Collect placements in deterministic order: chain index, then door order.
    std::vector<std::vector<std::pair<int, GridPos>>> per_room(level);  // (direction, cell)
    for (int cell = 0; cell < static_cast<int>(cells.size()); ++cell) {
        if (cell_owner[cell] < 0) continue;
        int room = cell_owner[cell] / quota;
        Direction d = *direction_between(walk[room], cells[cell]);
        per_room[room].emplace_back(static_cast<int>(d), cells[cell]);
    }
    std::vector<DistractorPlacement> placements;
    placements.reserve(slots);
    for (int i = 0; i < level; ++i) {
        std::sort(per_room[i].begin(), per_room[i].end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [d, cell] : per_room[i]) {
            placements.push_back(DistractorPlacement{i, static_cast<Direction>(d), cell});
        }
    }
    return placements;
}

std::vector<std::string> sample_names(Rng& rng, int n, NamePool pool) {
    const auto& adjs = name_adjectives();
    const auto& nouns = name_nouns(pool);
    std::set<std::string> used;
    std::vector<std::string> names;
    names.reserve(n);
    while (static_cast<int>(names.size()) < n) {
        std::string name = adjs[static_cast<size_t>(rng.uniform_int(static_cast<int>(adjs.size())))] +
                           " " +
                           nouns[static_cast<size_t>(rng.uniform_int(static_cast<int>(nouns.size())))];
        if (used.insert(name).second) names.push_back(std::move(name));
    }
    return names;
}

std::optional<WorldGraph> try_generate(const GameSpec& spec, NamePool pool, Rng& rng) {
    auto walk = chain_walk(rng, spec.level, spec.mode);
    if (!walk) return std::nullopt;

    const int quota = distractors_per_room(spec.mode);
    std::vector<DistractorPlacement> placements;
    if (quota > 0) {
        auto matched = match_distractors(*walk, quota, rng);
        if (!matched) return std::nullopt;
        placements = std::move(*matched);
    }

    WorldGraph w;
    w.spec = spec;
    const int total = spec.level + static_cast<int>(placements.size());
    std::vector<std::string> names = sample_names(rng, total, pool);

    w.rooms.resize(total);
    for (int i = 0; i < spec.level; ++i) {
        Room& r = w.rooms[i];
        r.id = i;
        r.name = names[i];
        r.description = "You are in the " + r.name + ".";
        r.grid_pos = (*walk)[i];
        w.chain.push_back(i);
    }
    for (int i = 0; i + 1 < spec.level; ++i) {
        Direction d = *direction_between((*walk)[i], (*walk)[i + 1]);
        w.rooms[i].exits[static_cast<size_t>(d)] = i + 1;
        w.rooms[i + 1].exits[static_cast<size_t>(opposite(d))] = i;
    }
    int next_id = spec.level;
    for (const DistractorPlacement& p : placements) {
        Room& r = w.rooms[next_id];
        r.id = next_id;
        r.name = names[next_id];
        r.description = "You are in the " + r.name + ".";
        r.grid_pos = p.cell;
        w.rooms[p.chain_index].exits[static_cast<size_t>(p.door)] = next_id;
        r.exits[static_cast<size_t>(opposite(p.door))] = p.chain_index;
        w.distractor_ids.push_back(next_id);
        ++next_id;
    }
    w.start_id = 0;
    w.coin_room_id = spec.level - 1;
    return w;
}

}  // namespace

const std::vector<std::string>& name_adjectives() { return adjectives_impl(); }

const std::vector<std::string>& name_nouns(NamePool pool) {
    switch (pool) {
        case NamePool::Train: return train_nouns_impl();
        case NamePool::Test: return test_nouns_impl();
        case NamePool::All: {
            static const std::vector<std::string> all = [] {
                std::vector<std::string> v = train_nouns_impl();
                const auto& t = test_nouns_impl();
                v.insert(v.end(), t.begin(), t.end());
                return v;
            }();
            return all;
        }
    }
    return train_nouns_impl();
}

WorldGraph generate_world(const GameSpec& spec, NamePool pool) {
    if (spec.level < 1) throw std::invalid_argument("level must be >= 1");
    if (spec.level > 200) throw std::invalid_argument("level too large");

    const int kRetryBudget = 64;
    uint64_t base = mix_seed(spec.seed, static_cast<uint64_t>(spec.mode) * 1009 +
                                            static_cast<uint64_t>(spec.level));
    for (int attempt = 0; attempt < kRetryBudget; ++attempt) {
        Rng rng(mix_seed(base, static_cast<uint64_t>(attempt)));
        auto w = try_generate(spec, pool, rng);
        if (w) return *w;
    }
    throw GenerationError("world generation failed for seed=" + std::to_string(spec.seed) +
                          " mode=" + mode_name(spec.mode) + " level=" + std::to_string(spec.level));
}

std::vector<std::string> validate_world(const WorldGraph& w) {
    std::vector<std::string> errors;
    auto fail = [&errors](const std::string& msg) { errors.push_back(msg); };

    const int n = w.room_count();
    if (n == 0) {
        fail("world has no rooms");
        return errors;
    }
    if (n != expected_room_count(w.spec)) {
        fail("room count " + std::to_string(n) + " != expected " +
             std::to_string(expected_room_count(w.spec)));
    }

    for (int i = 0; i < n; ++i) {
        if (w.rooms[i].id != i) fail("room at index " + std::to_string(i) + " has mismatched id");
    }

    // Names and grid cells unique; descriptions well-formed.
    std::set<std::string> names;
    std::set<CellKey> cells;
    for (const Room& r : w.rooms) {
        if (r.name.empty()) fail("room " + std::to_string(r.id) + " has empty name");
        if (!names.insert(r.name).second) fail("duplicate room name: " + r.name);
        if (!cells.insert(key(r.grid_pos)).second)
            fail("duplicate grid cell for room " + std::to_string(r.id));
        if (r.description != "You are in the " + r.name + ".")
            fail("room " + std::to_string(r.id) + " has malformed description");
    }

    // Exits: valid targets, symmetric, geometrically consistent.
    int edge_endpoints = 0;
    for (const Room& r : w.rooms) {
        for (int d = 0; d < kNumDirections; ++d) {
            int to = r.exits[static_cast<size_t>(d)];
            if (to < 0) continue;
            ++edge_endpoints;
            if (to >= n) {
                fail("room " + std::to_string(r.id) + " exit out of range");
                continue;
            }
            const Room& dest = w.rooms[to];
            if (dest.exits[static_cast<size_t>(opposite(static_cast<Direction>(d)))] != r.id)
                fail("asymmetric exit " + std::to_string(r.id) + " -> " + std::to_string(to));
            if (!(neighbor(r.grid_pos, static_cast<Direction>(d)) == dest.grid_pos))
                fail("exit " + std::to_string(r.id) + " -> " + std::to_string(to) +
                     " not grid-adjacent along its direction");
        }
    }

    // Tree check: connected with exactly n-1 edges means acyclic.
    if (edge_endpoints % 2 != 0) fail("odd number of exit endpoints");
    int edges = edge_endpoints / 2;
    if (edges != n - 1) {
        fail("graph has " + std::to_string(edges) + " edges, expected " + std::to_string(n - 1));
    }
    {
        std::vector<char> seen(static_cast<size_t>(n), 0);
        std::vector<int> frontier;
        if (w.start_id >= 0 && w.start_id < n) {
            frontier.push_back(w.start_id);
            seen[static_cast<size_t>(w.start_id)] = 1;
        } else {
            fail("start_id out of range");
        }
        while (!frontier.empty()) {
            int cur = frontier.back();
            frontier.pop_back();
            for (int d = 0; d < kNumDirections; ++d) {
                int to = w.rooms[static_cast<size_t>(cur)].exits[static_cast<size_t>(d)];
                if (to >= 0 && to < n && !seen[static_cast<size_t>(to)]) {
                    seen[static_cast<size_t>(to)] = 1;
                    frontier.push_back(to);
                }
            }
        }
        for (int i = 0; i < n; ++i) {
            if (!seen[static_cast<size_t>(i)]) {
                fail("room " + std::to_string(i) + " unreachable from start");
                break;
            }
        }
    }

    // Chain integrity.
    if (static_cast<int>(w.chain.size()) != w.spec.level) {
        fail("chain length != level");
    } else {
        if (w.chain.front() != w.start_id) fail("chain does not begin at start room");
        if (w.chain.back() != w.coin_room_id) fail("chain does not end at coin room");
        std::set<int> chain_set(w.chain.begin(), w.chain.end());
        if (chain_set.size() != w.chain.size()) fail("chain revisits a room");
        for (size_t i = 0; i + 1 < w.chain.size(); ++i) {
            bool linked = false;
            for (int d = 0; d < kNumDirections; ++d) {
                if (w.rooms[static_cast<size_t>(w.chain[i])].exits[static_cast<size_t>(d)] ==
                    w.chain[i + 1])
                    linked = true;
            }
            if (!linked)
                fail("chain rooms " + std::to_string(w.chain[i]) + " and " +
                     std::to_string(w.chain[i + 1]) + " not connected");
        }

        // Distractors: sorted, disjoint from chain, correct quota, degree 1 on a chain room.
        if (!std::is_sorted(w.distractor_ids.begin(), w.distractor_ids.end()))
            fail("distractor ids not sorted");
        std::vector<int> per_chain_room(static_cast<size_t>(n), 0);
        for (int id : w.distractor_ids) {
            if (id < 0 || id >= n) {
                fail("distractor id out of range");
                continue;
            }
            if (chain_set.count(id)) fail("distractor " + std::to_string(id) + " is on the chain");
            const Room& r = w.rooms[static_cast<size_t>(id)];
            if (r.exit_count() != 1) {
                fail("distractor " + std::to_string(id) + " has degree != 1");
            } else {
                for (int d = 0; d < kNumDirections; ++d) {
                    int to = r.exits[static_cast<size_t>(d)];
                    if (to >= 0) {
                        if (!chain_set.count(to))
                            fail("distractor " + std::to_string(id) +
                                 " attached to non-chain room");
                        else
                            ++per_chain_room[static_cast<size_t>(to)];
                    }
                }
            }
        }
        if (static_cast<int>(w.chain.size() + w.distractor_ids.size()) != n)
            fail("chain + distractors do not cover all rooms");
        const int quota = distractors_per_room(w.spec.mode);
        for (int id : w.chain) {
            if (per_chain_room[static_cast<size_t>(id)] != quota)
                fail("chain room " + std::to_string(id) + " has " +
                     std::to_string(per_chain_room[static_cast<size_t>(id)]) +
                     " distractors, expected " + std::to_string(quota));
        }
    }

    if (w.coin_room_id < 0 || w.coin_room_id >= n) fail("coin_room_id out of range");
    return errors;
}

std::vector<Command> shortest_solution(const WorldGraph& w) {
    std::vector<Command> cmds;
    cmds.reserve(w.chain.size());
    for (size_t i = 0; i + 1 < w.chain.size(); ++i) {
        const Room& from = w.rooms[static_cast<size_t>(w.chain[i])];
        for (int d = 0; d < kNumDirections; ++d) {
            if (from.exits[static_cast<size_t>(d)] == w.chain[i + 1]) {
                cmds.push_back(make_go(static_cast<Direction>(d)));
                break;
            }
        }
    }
    cmds.push_back(take_coin());
    return cmds;
}

std::string world_signature(const WorldGraph& w) {
    std::string sig;
    for (int id : w.chain) {
        sig += w.rooms[static_cast<size_t>(id)].name;
        sig += '|';
    }
    sig += '#';
    for (const Command& c : shortest_solution(w)) {
        sig += command_words(c);
        sig += '|';
    }
    return sig;
}

bool check_disjoint(const std::vector<WorldGraph>& train, const std::vector<WorldGraph>& test) {
    if (train.empty() || test.empty())
        throw std::invalid_argument("check_disjoint requires non-empty world sets");
    std::set<std::string> train_descriptions;
    std::set<std::string> train_signatures;
    for (const WorldGraph& w : train) {
        for (const Room& r : w.rooms) train_descriptions.insert(r.description);
        train_signatures.insert(world_signature(w));
    }
    for (const WorldGraph& w : test) {
        if (train_signatures.count(world_signature(w))) return false;
        for (const Room& r : w.rooms) {
            if (train_descriptions.count(r.description)) return false;
        }
    }
    return true;
}

nlohmann::ordered_json world_to_json(const WorldGraph& w) {
    nlohmann::ordered_json j;
    j["spec"] = {{"seed", w.spec.seed}, {"mode", mode_name(w.spec.mode)}, {"level", w.spec.level}};
    j["start"] = w.start_id;
    j["coin_room"] = w.coin_room_id;
    j["chain"] = w.chain;
    j["distractors"] = w.distractor_ids;
    nlohmann::ordered_json rooms = nlohmann::ordered_json::array();
    for (const Room& r : w.rooms) {
        nlohmann::ordered_json room;
        room["id"] = r.id;
        room["name"] = r.name;
        room["description"] = r.description;
        nlohmann::ordered_json exits;
        for (int d = 0; d < kNumDirections; ++d) {
            if (r.exits[static_cast<size_t>(d)] >= 0)
                exits[direction_word(static_cast<Direction>(d))] = r.exits[static_cast<size_t>(d)];
        }
        room["exits"] = std::move(exits);
        room["grid"] = {r.grid_pos.x, r.grid_pos.y};
        rooms.push_back(std::move(room));
    }
    j["rooms"] = std::move(rooms);
    return j;
}

WorldGraph world_from_json(const nlohmann::json& j) {
    WorldGraph w;
    w.spec.seed = j.at("spec").at("seed").get<uint64_t>();
    w.spec.mode = mode_from_name(j.at("spec").at("mode").get<std::string>());
    w.spec.level = j.at("spec").at("level").get<int>();
    w.start_id = j.at("start").get<int>();
    w.coin_room_id = j.at("coin_room").get<int>();
    w.chain = j.at("chain").get<std::vector<int>>();
    w.distractor_ids = j.at("distractors").get<std::vector<int>>();
    for (const auto& room : j.at("rooms")) {
        Room r;
        r.id = room.at("id").get<int>();
        r.name = room.at("name").get<std::string>();
        r.description = room.at("description").get<std::string>();
        for (const auto& [word, to] : room.at("exits").items()) {
            auto d = direction_from_word(word);
            if (!d) throw std::invalid_argument("bad exit direction: " + word);
            r.exits[static_cast<size_t>(*d)] = to.get<int>();
        }
        const auto& grid = room.at("grid");
        r.grid_pos = GridPos{grid.at(0).get<int>(), grid.at(1).get<int>()};
        w.rooms.push_back(std::move(r));
    }
    return w;
}

void save_world(const WorldGraph& w, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << world_to_json(w).dump(2) << "\n";
}

WorldGraph load_world(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open world file: " + path);
    nlohmann::json j;
    in >> j;
    return world_from_json(j);
}

uint64_t world_fingerprint(const WorldGraph& w) { return fnv1a(world_to_json(w).dump()); }

}  // namespace coinworld
