#include "coinworld/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace coinworld {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace {

constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

std::string matrix_to_b64(const nn::Matrix& m) {
    return base64_encode(reinterpret_cast<const unsigned char*>(m.data()),
                         static_cast<size_t>(m.size()) * sizeof(double));
}

nn::Matrix matrix_from_b64(const std::string& text, int rows, int cols) {
    std::vector<unsigned char> bytes = base64_decode(text);
    if (bytes.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols) * sizeof(double))
        throw std::invalid_argument("checkpoint matrix payload has wrong size");
    nn::Matrix m(rows, cols);
    std::memcpy(m.data(), bytes.data(), bytes.size());
    return m;
}

}  // namespace

std::string base64_encode(const unsigned char* data, size_t n) {
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (size_t i = 0; i < n; i += 3) {
        unsigned int chunk = static_cast<unsigned int>(data[i]) << 16;
        if (i + 1 < n) chunk |= static_cast<unsigned int>(data[i + 1]) << 8;
        if (i + 2 < n) chunk |= static_cast<unsigned int>(data[i + 2]);
        out.push_back(kB64Alphabet[(chunk >> 18) & 0x3f]);
        out.push_back(kB64Alphabet[(chunk >> 12) & 0x3f]);
        out.push_back(i + 1 < n ? kB64Alphabet[(chunk >> 6) & 0x3f] : '=');
        out.push_back(i + 2 < n ? kB64Alphabet[chunk & 0x3f] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw std::invalid_argument("base64 length not a multiple of 4");
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            char c = text[i + static_cast<size_t>(k)];
            if (c == '=') {
                if (i + 4 != text.size() || k < 2) throw std::invalid_argument("bad base64 padding");
                vals[k] = 0;
                ++pad;
            } else {
                vals[k] = b64_value(c);
                if (vals[k] < 0) throw std::invalid_argument("bad base64 character");
                if (pad > 0) throw std::invalid_argument("base64 data after padding");
            }
        }
        unsigned int chunk = (static_cast<unsigned int>(vals[0]) << 18) |
                             (static_cast<unsigned int>(vals[1]) << 12) |
                             (static_cast<unsigned int>(vals[2]) << 6) |
                             static_cast<unsigned int>(vals[3]);
        out.push_back(static_cast<unsigned char>((chunk >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<unsigned char>((chunk >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<unsigned char>(chunk & 0xff));
    }
    return out;
}

nlohmann::ordered_json agent_config_to_json(const AgentConfig& cfg) {
    nlohmann::ordered_json j;
    j["kind"] = agent_kind_name(cfg.kind);
    j["history_len"] = cfg.history_len;
    j["embedding_dim"] = cfg.embedding_dim;
    j["encoder_hidden"] = cfg.encoder_hidden;
    j["scorer_hidden"] = cfg.scorer_hidden;
    j["gamma"] = cfg.gamma;
    j["init_seed"] = cfg.init_seed;
    return j;
}

AgentConfig agent_config_from_json(const nlohmann::json& j) {
    AgentConfig cfg;
    cfg.kind = agent_kind_from_name(j.at("kind").get<std::string>());
    cfg.history_len = j.at("history_len").get<int>();
    cfg.embedding_dim = j.at("embedding_dim").get<int>();
    cfg.encoder_hidden = j.at("encoder_hidden").get<int>();
    cfg.scorer_hidden = j.at("scorer_hidden").get<int>();
    cfg.gamma = j.at("gamma").get<double>();
    cfg.init_seed = j.at("init_seed").get<uint64_t>();
    return cfg;
}

void save_checkpoint(const std::string& path, const Agent& agent, const nn::Adam* adam,
                     int epoch) {
    nlohmann::ordered_json j;
    j["format"] = "coinworld-checkpoint-v1";
    j["agent"] = agent_config_to_json(agent.config());
    j["vocab_checksum"] = agent.vocab().checksum();
    j["epoch"] = epoch;

    nlohmann::ordered_json params = nlohmann::ordered_json::array();
    const nn::ParameterSet& ps = agent.params();
    for (size_t i = 0; i < ps.count(); ++i) {
        nlohmann::ordered_json p;
        p["name"] = ps[i].name;
        p["rows"] = ps[i].rows();
        p["cols"] = ps[i].cols();
        p["data"] = matrix_to_b64(ps[i].value);
        params.push_back(std::move(p));
    }
    j["params"] = std::move(params);

    if (adam != nullptr) {
        const nn::Adam& a = *adam;
        nlohmann::ordered_json aj;
        aj["lr"] = a.config().lr;
        aj["beta1"] = a.config().beta1;
        aj["beta2"] = a.config().beta2;
        aj["eps"] = a.config().eps;
        aj["steps"] = a.steps_taken();
        nlohmann::ordered_json m = nlohmann::ordered_json::array();
        nlohmann::ordered_json v = nlohmann::ordered_json::array();
        for (size_t i = 0; i < a.first_moments().size(); ++i) {
            m.push_back(matrix_to_b64(a.first_moments()[i]));
            v.push_back(matrix_to_b64(a.second_moments()[i]));
        }
        aj["m"] = std::move(m);
        aj["v"] = std::move(v);
        j["adam"] = std::move(aj);
    }

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "coinworld-checkpoint-v1")
        throw std::invalid_argument("not a coinworld checkpoint: " + path);

    Checkpoint ckpt;
    ckpt.config = agent_config_from_json(j.at("agent"));
    ckpt.vocab_checksum = j.at("vocab_checksum").get<uint64_t>();
    ckpt.epoch = j.at("epoch").get<int>();
    for (const auto& p : j.at("params")) {
        ckpt.params.emplace_back(
            p.at("name").get<std::string>(),
            matrix_from_b64(p.at("data").get<std::string>(), p.at("rows").get<int>(),
                            p.at("cols").get<int>()));
    }
    if (j.contains("adam")) {
        const auto& aj = j.at("adam");
        ckpt.has_adam = true;
        ckpt.adam_config.lr = aj.at("lr").get<double>();
        ckpt.adam_config.beta1 = aj.at("beta1").get<double>();
        ckpt.adam_config.beta2 = aj.at("beta2").get<double>();
        ckpt.adam_config.eps = aj.at("eps").get<double>();
        ckpt.adam_steps = aj.at("steps").get<long>();
        const auto& m = aj.at("m");
        const auto& v = aj.at("v");
        for (size_t i = 0; i < ckpt.params.size(); ++i) {
            const nn::Matrix& shape = ckpt.params[i].second;
            ckpt.adam_m.push_back(matrix_from_b64(m.at(i).get<std::string>(),
                                                  static_cast<int>(shape.rows()),
                                                  static_cast<int>(shape.cols())));
            ckpt.adam_v.push_back(matrix_from_b64(v.at(i).get<std::string>(),
                                                  static_cast<int>(shape.rows()),
                                                  static_cast<int>(shape.cols())));
        }
    }
    return ckpt;
}

Agent agent_from_checkpoint(const Checkpoint& ckpt, const Vocabulary& vocab) {
    if (vocab.checksum() != ckpt.vocab_checksum)
        throw std::invalid_argument("checkpoint was trained with a different vocabulary");
    Agent agent(ckpt.config, vocab);
    nn::ParameterSet& ps = agent.params();
    if (ps.count() != ckpt.params.size())
        throw std::invalid_argument("checkpoint parameter count mismatch");
    for (size_t i = 0; i < ps.count(); ++i) {
        const auto& [name, value] = ckpt.params[i];
        if (ps[i].name != name || ps[i].rows() != value.rows() || ps[i].cols() != value.cols())
            throw std::invalid_argument("checkpoint parameter mismatch at " + name);
        ps[i].value = value;
    }
    return agent;
}

nn::Adam adam_from_checkpoint(const Checkpoint& ckpt, const nn::ParameterSet& params) {
    if (!ckpt.has_adam) throw std::invalid_argument("checkpoint has no optimizer state");
    nn::Adam adam(params, ckpt.adam_config);
    if (ckpt.adam_m.size() != params.count())
        throw std::invalid_argument("optimizer state count mismatch");
    for (size_t i = 0; i < params.count(); ++i) {
        adam.first_moments()[i] = ckpt.adam_m[i];
        adam.second_moments()[i] = ckpt.adam_v[i];
    }
    adam.set_steps_taken(ckpt.adam_steps);
    return adam;
}

}  // namespace coinworld
