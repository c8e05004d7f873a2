#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "coinworld/command.hpp"
#include "coinworld/worldgen.hpp"

namespace coinworld {

// Lowercases and splits on anything that is not [a-z0-9]. The '|' segment
// separator survives as its own token; everything else non-alphanumeric is
// dropped. "Go North!" -> ["go", "north"].
std::vector<std::string> tokenize(std::string_view text);

// Word <-> id table. Ids 0 and 1 are reserved for padding and unknown words.
class Vocabulary {
public:
    static constexpr int kPadId = 0;
    static constexpr int kUnkId = 1;

    Vocabulary();

    // Appends the word if absent; returns its id either way.
    int add_word(const std::string& word);

    // Id of the word, or kUnkId when absent.
    int id_of(const std::string& word) const;
    bool contains(const std::string& word) const;

    const std::string& word_of(int id) const;
    int size() const { return static_cast<int>(words_.size()); }

    // Order-sensitive content fingerprint.
    uint64_t checksum() const;

    nlohmann::ordered_json to_json() const;
    static Vocabulary from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

struct TokenSequence {
    std::vector<int> ids;

    int length() const { return static_cast<int>(ids.size()); }
    bool operator==(const TokenSequence&) const = default;
};

// Maps words to ids. With frozen=false unseen words are added to the
// vocabulary; with frozen=true they map to the unknown id. Empty input yields
// the single-token unknown sequence so downstream encoders never see an empty
// sequence.
TokenSequence encode(const std::vector<std::string>& words, Vocabulary& vocab, bool frozen);

// Frozen lookup against a const vocabulary.
TokenSequence encode_frozen(const std::vector<std::string>& words, const Vocabulary& vocab);

std::vector<std::string> decode(const TokenSequence& seq, const Vocabulary& vocab);

// Model input composition. Segments joined by " | ", oldest first:
// up to `history_len` previous observations (only the most recent
// min(history_len, available) of them), then the previous command's words or
// "<none>" at episode start, then the current observation.
// history_len must be 0 or 4.
std::string compose_input(const std::string& observation,
                          const std::optional<Command>& prev_command,
                          const std::vector<std::string>& history, int history_len);

// Collects every word these worlds can ever surface (all room renders with
// and without the coin sentence, refusal and win text, command words, the
// "<none>" marker and the separator). Command/marker words are added first so
// their ids are stable across world sets.
Vocabulary build_vocabulary(const std::vector<const WorldGraph*>& worlds);
Vocabulary build_vocabulary(const std::vector<WorldGraph>& worlds);

}  // namespace coinworld
