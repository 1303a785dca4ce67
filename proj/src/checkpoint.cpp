#include <lapnet/training.hpp>

#include "binary_io.hpp"

#include <json.hpp>

#include <array>
#include <fstream>
#include <iterator>
#include <random>

namespace lapnet {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    static thread_local std::mt19937_64 rng(std::random_device{}());
    auto tmp = path;
    tmp += ".tmp" + std::to_string(rng() % 1000000);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw Error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace detail

namespace {

constexpr std::array<char, 8> kMagic{'L', 'A', 'P', 'N', 'C', 'K', 'P', 'T'};

nlohmann::json train_config_json(const TrainConfig& c)
{
    return {{"epochs", c.epochs},           {"batch", c.batch}, {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},             {"beta2", c.beta2}, {"epsilon", c.epsilon},
            {"seed", c.seed},               {"cluster_counts", c.cluster_counts},
            {"eigen_count", c.eigen_count}};
}

TrainConfig train_config_from_json(const nlohmann::json& j)
{
    TrainConfig c;
    c.epochs = j.at("epochs").get<int>();
    c.batch = j.at("batch").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.cluster_counts = j.at("cluster_counts").get<std::vector<int>>();
    c.eigen_count = j.at("eigen_count").get<int>();
    return c;
}

void put_tensor(detail::ByteWriter& w, const nn::Tensor& t)
{
    w.put_bytes(t.data(), static_cast<std::size_t>(t.size()) * sizeof(double));
}

nn::Tensor get_tensor(detail::ByteReader& r, std::uint32_t rows, std::uint32_t cols)
{
    nn::Tensor t(rows, cols);
    r.get_bytes(t.data(), static_cast<std::size_t>(t.size()) * sizeof(double));
    return t;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const TrainState& state,
                     const TrainConfig& train_config)
{
    check_param_shapes(config, state.params);

    detail::ByteWriter payload;
    payload.put_string(config_to_json(config));
    payload.put_string(train_config_json(train_config).dump());
    payload.put<std::int32_t>(state.epoch);
    payload.put<std::uint32_t>(static_cast<std::uint32_t>(state.params.entries().size()));
    for (const auto& e : state.params.entries()) {
        payload.put_string(e.name);
        payload.put<std::uint32_t>(static_cast<std::uint32_t>(e.param.value.rows()));
        payload.put<std::uint32_t>(static_cast<std::uint32_t>(e.param.value.cols()));
        payload.put<std::int64_t>(e.param.step);
        put_tensor(payload, e.param.value);
        put_tensor(payload, e.param.m);
        put_tensor(payload, e.param.v);
    }

    detail::ByteWriter file;
    file.put_bytes(kMagic.data(), kMagic.size());
    file.put<std::uint32_t>(kCheckpointVersion);
    file.put<std::uint64_t>(config_hash(config));
    file.put<std::uint64_t>(payload.bytes().size());
    file.put_bytes(payload.bytes().data(), payload.bytes().size());
    file.put<std::uint64_t>(fnv1a(payload.bytes()));
    try {
        detail::write_file_atomic(path, file.bytes());
    } catch (const std::exception& e) {
        throw CheckpointError(CheckpointError::Kind::Io, e.what());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    using Kind = CheckpointError::Kind;
    std::vector<std::uint8_t> bytes;
    try {
        bytes = detail::read_file(path);
    } catch (const Error& e) {
        throw CheckpointError(Kind::Io, e.what());
    }

    detail::ByteReader header(bytes.data(), bytes.size());
    std::uint64_t stored_hash = 0;
    std::uint64_t payload_size = 0;
    try {
        std::array<char, 8> magic{};
        header.get_bytes(magic.data(), magic.size());
        if (magic != kMagic) {
            throw CheckpointError(Kind::BadMagic, path.string() + " is not a checkpoint file");
        }
        const auto version = header.get<std::uint32_t>();
        if (version != kCheckpointVersion) {
            throw CheckpointError(Kind::Version, "checkpoint version " + std::to_string(version) + " unsupported (expected "
                                                     + std::to_string(kCheckpointVersion) + ")");
        }
        stored_hash = header.get<std::uint64_t>();
        payload_size = header.get<std::uint64_t>();
    } catch (const detail::TruncatedError&) {
        throw CheckpointError(Kind::Corrupt, path.string() + ": truncated header");
    }
    if (payload_size + sizeof(std::uint64_t) != header.remaining()) {
        throw CheckpointError(Kind::Corrupt, path.string() + ": size mismatch");
    }
    const std::uint8_t* payload_begin = bytes.data() + header.position();
    std::uint64_t checksum = 0;
    std::memcpy(&checksum, payload_begin + payload_size, sizeof(checksum));
    if (checksum != fnv1a({payload_begin, payload_size})) {
        throw CheckpointError(Kind::Corrupt, path.string() + ": checksum mismatch");
    }

    Checkpoint ckpt;
    try {
        detail::ByteReader r(payload_begin, payload_size);
        ckpt.config = config_from_json(r.get_string());
        ckpt.train_config = train_config_from_json(nlohmann::json::parse(r.get_string()));
        ckpt.state.epoch = r.get<std::int32_t>();
        const auto count = r.get<std::uint32_t>();
        for (std::uint32_t i = 0; i < count; ++i) {
            std::string name = r.get_string();
            const auto rows = r.get<std::uint32_t>();
            const auto cols = r.get<std::uint32_t>();
            const auto step = r.get<std::int64_t>();
            auto& p = ckpt.state.params.add(std::move(name), get_tensor(r, rows, cols));
            p.m = get_tensor(r, rows, cols);
            p.v = get_tensor(r, rows, cols);
            p.step = step;
        }
        if (r.remaining() != 0) {
            throw CheckpointError(Kind::Corrupt, path.string() + ": trailing bytes");
        }
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(Kind::Corrupt, path.string() + ": " + e.what());
    }
    if (config_hash(ckpt.config) != stored_hash) {
        throw CheckpointError(Kind::Corrupt, path.string() + ": embedded config does not match its hash");
    }
    try {
        check_param_shapes(ckpt.config, ckpt.state.params);
    } catch (const ArgumentError& e) {
        throw CheckpointError(Kind::Corrupt, path.string() + ": " + e.what());
    }
    return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected)
{
    Checkpoint ckpt = load_checkpoint(path);
    if (config_hash(ckpt.config) != config_hash(expected)) {
        throw CheckpointError(CheckpointError::Kind::ConfigMismatch,
                              path.string() + ": checkpoint was written for a different model config");
    }
    return ckpt;
}

} // namespace lapnet
