#include "coinworld/textcodec.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include "coinworld/env.hpp"
#include "coinworld/hash.hpp"

namespace coinworld {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    };
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (ch == '|') {
            flush();
            tokens.emplace_back("|");
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

Vocabulary::Vocabulary() {
    add_word("<pad>");
    add_word("<unk>");
}

int Vocabulary::add_word(const std::string& word) {
    auto it = index_.find(word);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(words_.size());
    words_.push_back(word);
    index_.emplace(word, id);
    return id;
}

int Vocabulary::id_of(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(const std::string& word) const { return index_.count(word) > 0; }

const std::string& Vocabulary::word_of(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("word id out of range");
    return words_[static_cast<size_t>(id)];
}

uint64_t Vocabulary::checksum() const {
    Fnv1a h;
    for (const std::string& w : words_) {
        h.update(w);
        h.update("\x1f");
    }
    return h.digest();
}

nlohmann::ordered_json Vocabulary::to_json() const {
    nlohmann::ordered_json j;
    j["words"] = words_;
    return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
    auto words = j.at("words").get<std::vector<std::string>>();
    if (words.size() < 2 || words[0] != "<pad>" || words[1] != "<unk>")
        throw std::invalid_argument("vocabulary must begin with <pad>, <unk>");
    Vocabulary v;
    for (size_t i = 2; i < words.size(); ++i) v.add_word(words[i]);
    return v;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << to_json().dump(2) << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

TokenSequence encode(const std::vector<std::string>& words, Vocabulary& vocab, bool frozen) {
    TokenSequence seq;
    seq.ids.reserve(words.size());
    for (const std::string& w : words) {
        seq.ids.push_back(frozen ? vocab.id_of(w) : vocab.add_word(w));
    }
    if (seq.ids.empty()) seq.ids.push_back(Vocabulary::kUnkId);
    return seq;
}

TokenSequence encode_frozen(const std::vector<std::string>& words, const Vocabulary& vocab) {
    TokenSequence seq;
    seq.ids.reserve(words.size());
    for (const std::string& w : words) seq.ids.push_back(vocab.id_of(w));
    if (seq.ids.empty()) seq.ids.push_back(Vocabulary::kUnkId);
    return seq;
}

std::vector<std::string> decode(const TokenSequence& seq, const Vocabulary& vocab) {
    std::vector<std::string> words;
    words.reserve(seq.ids.size());
    for (int id : seq.ids) words.push_back(vocab.word_of(id));
    return words;
}

std::string compose_input(const std::string& observation,
                          const std::optional<Command>& prev_command,
                          const std::vector<std::string>& history, int history_len) {
    if (history_len != 0 && history_len != 4)
        throw std::invalid_argument("history_len must be 0 or 4");
    std::string out;
    if (history_len > 0) {
        size_t take = std::min<size_t>(history.size(), static_cast<size_t>(history_len));
        for (size_t i = history.size() - take; i < history.size(); ++i) {
            out += history[i];
            out += " | ";
        }
    }
    out += prev_command ? command_words(*prev_command) : "<none>";
    out += " | ";
    out += observation;
    return out;
}

Vocabulary build_vocabulary(const std::vector<const WorldGraph*>& worlds) {
    Vocabulary vocab;
    // Fixed words first so their ids never depend on world content.
    vocab.add_word("|");
    vocab.add_word("none");
    for (int v = 0; v < kNumVerbs; ++v) vocab.add_word(verb_word(static_cast<Verb>(v)));
    for (int o = 0; o < kNumObjects; ++o) vocab.add_word(object_word(static_cast<CmdObject>(o)));
    auto absorb = [&vocab](const std::string& text) {
        for (const std::string& w : tokenize(text)) vocab.add_word(w);
    };
    absorb(kRefusalText);
    absorb(kWinText);
    for (const WorldGraph* w : worlds) {
        for (const Room& r : w->rooms) {
            std::string base = r.description + " " + exits_sentence(r);
            absorb(base);
            if (r.id == w->coin_room_id) absorb(base + " There is a coin here.");
        }
    }
    return vocab;
}

Vocabulary build_vocabulary(const std::vector<WorldGraph>& worlds) {
    std::vector<const WorldGraph*> ptrs;
    ptrs.reserve(worlds.size());
    for (const WorldGraph& w : worlds) ptrs.push_back(&w);
    return build_vocabulary(ptrs);
}

}  // namespace coinworld
