#include "deidkit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "deidkit/errors.hpp"

namespace deidkit {

namespace {

constexpr char kMagic[8] = {'D', 'E', 'I', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t value) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t value) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float value) {
    put_u32(out, std::bit_cast<std::uint32_t>(value));
}

class ByteReader {
  public:
    ByteReader(const std::string& bytes, std::string path)
        : bytes_(bytes), path_(std::move(path)) {}

    void read(void* dst, std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw ParseError(path_ + ": checkpoint truncated", 0, 0);
        }
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    std::uint32_t u32() {
        std::uint8_t raw[4];
        read(raw, 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | raw[i];
        return v;
    }

    std::uint64_t u64() {
        std::uint8_t raw[8];
        read(raw, 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | raw[i];
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }

    std::string chunk(std::size_t n) {
        std::string out(n, '\0');
        read(out.data(), n);
        return out;
    }

  private:
    const std::string& bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

nlohmann::json config_to_json(const ModelConfig& c) {
    return nlohmann::json{
        {"vocab_size", c.vocab_size},
        {"max_positions", c.max_positions},
        {"type_vocab", c.type_vocab},
        {"embedding_dim", c.embedding_dim},
        {"hidden_dim", c.hidden_dim},
        {"num_layers", c.num_layers},
        {"num_heads", c.num_heads},
        {"ffn_dim", c.ffn_dim},
        {"dropout", c.dropout},
        {"share_layers", c.share_layers},
        {"factorized_embedding", c.factorized_embedding},
        {"num_labels", c.num_labels},
    };
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.max_positions = j.at("max_positions").get<int>();
    c.type_vocab = j.at("type_vocab").get<int>();
    c.embedding_dim = j.at("embedding_dim").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.num_layers = j.at("num_layers").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.ffn_dim = j.at("ffn_dim").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.share_layers = j.at("share_layers").get<bool>();
    c.factorized_embedding = j.at("factorized_embedding").get<bool>();
    c.num_labels = j.at("num_labels").get<int>();
    return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TaggerModel<float>& model,
                     std::uint64_t seed) {
    auto& mutable_model = const_cast<TaggerModel<float>&>(model);
    auto refs = parameter_refs(mutable_model);

    nlohmann::json tensors = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const ParamRef<float>& ref : refs) {
        const std::uint64_t rows =
            ref.matrix != nullptr ? static_cast<std::uint64_t>(ref.matrix->rows())
                                  : static_cast<std::uint64_t>(ref.vector->size());
        const std::uint64_t cols =
            ref.matrix != nullptr ? static_cast<std::uint64_t>(ref.matrix->cols()) : 1;
        tensors.push_back(nlohmann::json{
            {"name", ref.name}, {"rows", rows}, {"cols", cols}, {"offset", offset}});
        offset += rows * cols * 4;
    }

    const ParameterLedger ledger = count_parameters(model.config);
    nlohmann::json ledger_json = nlohmann::json::array();
    for (const LedgerEntry& entry : ledger.entries) {
        ledger_json.push_back(nlohmann::json{{"path", entry.path}, {"count", entry.count}});
    }

    nlohmann::json header{
        {"config", config_to_json(model.config)},
        {"tag_vocab", all_tag_names()},
        {"ledger", nlohmann::json{{"total", ledger.total}, {"entries", ledger_json}}},
        {"tensors", tensors},
        {"seed", seed},
    };
    const std::string header_bytes = header.dump();

    std::string out;
    out.reserve(sizeof(kMagic) + 12 + header_bytes.size() + offset);
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    put_u64(out, header_bytes.size());
    out += header_bytes;
    for (const ParamRef<float>& ref : refs) {
        const float* data = ref.matrix != nullptr ? ref.matrix->data() : ref.vector->data();
        const Eigen::Index count = ref.size();
        for (Eigen::Index i = 0; i < count; ++i) put_f32(out, data[i]);
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) throw InputError("cannot write " + path.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw InputError("short write to " + path.string());
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw InputError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(file)),
                      std::istreambuf_iterator<char>());
    ByteReader reader(bytes, path.string());

    char magic[8];
    reader.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) {
        throw ParseError(path.string() + ": not a checkpoint file", 0, 0);
    }
    const std::uint32_t version = reader.u32();
    if (version != kVersion) {
        throw ParseError(path.string() + ": unsupported checkpoint version " +
                             std::to_string(version),
                         0, 0);
    }
    const std::uint64_t header_len = reader.u64();
    const std::string header_bytes = reader.chunk(header_len);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_bytes);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": bad checkpoint header: " + e.what(), 0, 0);
    }

    CheckpointData data;
    try {
        data.model = build_model<float>(config_from_json(header.at("config")));
        data.seed = header.at("seed").get<std::uint64_t>();
        data.tag_names = header.at("tag_vocab").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": bad checkpoint header: " + e.what(), 0, 0);
    }

    if (data.tag_names != all_tag_names()) {
        throw ValidationError(path.string() + ": tag vocabulary does not match this build");
    }
    const ParameterLedger ledger = count_parameters(data.model.config);
    const auto stored_total = header.at("ledger").at("total").get<std::int64_t>();
    if (stored_total != ledger.total) {
        throw ValidationError(path.string() + ": ledger total " +
                              std::to_string(stored_total) + " does not match config-derived " +
                              std::to_string(ledger.total));
    }

    auto refs = parameter_refs(data.model);
    const nlohmann::json& tensors = header.at("tensors");
    if (tensors.size() != refs.size()) {
        throw ValidationError(path.string() + ": tensor index size mismatch");
    }
    std::int64_t described = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const nlohmann::json& t = tensors[i];
        if (t.at("name").get<std::string>() != refs[i].name) {
            throw ValidationError(path.string() + ": tensor " + std::to_string(i) +
                                  " is named '" + t.at("name").get<std::string>() +
                                  "', expected '" + refs[i].name + "'");
        }
        const auto rows = t.at("rows").get<std::int64_t>();
        const auto cols = t.at("cols").get<std::int64_t>();
        const std::int64_t expect_rows =
            refs[i].matrix != nullptr ? refs[i].matrix->rows() : refs[i].vector->size();
        const std::int64_t expect_cols = refs[i].matrix != nullptr ? refs[i].matrix->cols() : 1;
        if (rows != expect_rows || cols != expect_cols) {
            throw ValidationError(path.string() + ": tensor " + refs[i].name +
                                  " has unexpected shape");
        }
        described += rows * cols;
    }
    if (described != ledger.total) {
        throw ValidationError(path.string() + ": tensor sizes sum to " +
                              std::to_string(described) + ", ledger says " +
                              std::to_string(ledger.total));
    }

    for (ParamRef<float>& ref : refs) {
        float* dst = ref.matrix != nullptr ? ref.matrix->data() : ref.vector->data();
        const Eigen::Index count = ref.size();
        for (Eigen::Index i = 0; i < count; ++i) dst[i] = reader.f32();
    }
    return data;
}

}  // namespace deidkit
