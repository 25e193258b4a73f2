#include "mcdc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mcdc/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace mcdc {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'D', 'C'};
constexpr const char* kSpecRecord = "__spec__";

void write_u16(std::ostream& os, uint16_t v) { os.write(reinterpret_cast<const char*>(&v), 2); }
void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

void write_record_f32(std::ostream& os, const std::string& name, const Tensor& t) {
    write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    const uint8_t dtype = 1;
    os.write(reinterpret_cast<const char*>(&dtype), 1);
    write_u32(os, static_cast<uint32_t>(t.rank()));
    for (size_t e : t.shape) write_u32(os, static_cast<uint32_t>(e));
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

void write_record_f64(std::ostream& os, const std::string& name, const std::vector<double>& v) {
    write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    const uint8_t dtype = 2;
    os.write(reinterpret_cast<const char*>(&dtype), 1);
    write_u32(os, 1);
    write_u32(os, static_cast<uint32_t>(v.size()));
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

struct Record {
    std::string name;
    uint8_t dtype = 0;
    std::vector<size_t> shape;
    std::vector<float> f32;
    std::vector<double> f64;
};

uint32_t read_u32(std::istream& is, const char* what) {
    uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw FormatError(std::string("checkpoint: truncated while reading ") + what);
    return v;
}

bool read_record(std::istream& is, Record& rec) {
    uint32_t name_len = 0;
    if (!is.read(reinterpret_cast<char*>(&name_len), 4)) return false; // clean EOF
    if (name_len > 4096) throw FormatError("checkpoint: implausible record name length");
    rec.name.resize(name_len);
    if (!is.read(rec.name.data(), name_len)) throw FormatError("checkpoint: truncated record name");
    if (!is.read(reinterpret_cast<char*>(&rec.dtype), 1))
        throw FormatError("checkpoint: truncated dtype");
    if (rec.dtype != 1 && rec.dtype != 2)
        throw FormatError("checkpoint: unknown dtype code " + std::to_string(rec.dtype));
    const uint32_t rank = read_u32(is, "rank");
    if (rank > 8) throw FormatError("checkpoint: implausible rank");
    rec.shape.clear();
    size_t numel = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        const uint32_t e = read_u32(is, "extent");
        rec.shape.push_back(e);
        numel *= e;
    }
    if (rank == 0) numel = 0;
    if (rec.dtype == 1) {
        rec.f32.resize(numel);
        if (!is.read(reinterpret_cast<char*>(rec.f32.data()),
                     static_cast<std::streamsize>(numel * sizeof(float))))
            throw FormatError("checkpoint: truncated payload for record '" + rec.name + "'");
    } else {
        rec.f64.resize(numel);
        if (!is.read(reinterpret_cast<char*>(rec.f64.data()),
                     static_cast<std::streamsize>(numel * sizeof(double))))
            throw FormatError("checkpoint: truncated payload for record '" + rec.name + "'");
    }
    return true;
}

std::vector<double> encode_spec(const ArchitectureSpec& s) {
    std::vector<double> v(9, 0.0);
    v[0] = s.family == Family::conv_paper ? 0.0 : 1.0;
    v[1] = static_cast<double>(s.input_shape.size());
    for (size_t i = 0; i < s.input_shape.size() && i < 3; ++i) v[2 + i] = static_cast<double>(s.input_shape[i]);
    v[5] = static_cast<double>(s.base_channels);
    v[6] = static_cast<double>(s.num_blocks);
    v[7] = static_cast<double>(s.latent_dim);
    v[8] = static_cast<double>(s.negative_slope);
    return v;
}

ArchitectureSpec decode_spec(const std::vector<double>& v) {
    if (v.size() != 9) throw FormatError("checkpoint: malformed __spec__ record");
    ArchitectureSpec s;
    s.family = v[0] == 0.0 ? Family::conv_paper : Family::mlp_toy;
    const auto ndims = static_cast<size_t>(v[1]);
    if (ndims != 1 && ndims != 3) throw FormatError("checkpoint: malformed input shape in __spec__");
    s.input_shape.clear();
    for (size_t i = 0; i < ndims; ++i) s.input_shape.push_back(static_cast<size_t>(v[2 + i]));
    s.base_channels = static_cast<size_t>(v[5]);
    s.num_blocks = static_cast<size_t>(v[6]);
    s.latent_dim = static_cast<size_t>(v[7]);
    s.negative_slope = static_cast<float>(v[8]);
    return s;
}

void write_stack(std::ostream& os, const char* prefix, const std::vector<LayerParams>& layers) {
    for (size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].has_params()) continue;
        const std::string base = std::string(prefix) + "." + std::to_string(i);
        write_record_f32(os, base + ".weight", layers[i].weights);
        write_record_f32(os, base + ".bias", layers[i].bias);
    }
}

void fill_stack(const char* prefix, std::vector<LayerParams>& layers,
                std::map<std::string, Record>& records) {
    for (size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].has_params()) continue;
        const std::string base = std::string(prefix) + "." + std::to_string(i);
        for (const char* part : {".weight", ".bias"}) {
            auto it = records.find(base + part);
            if (it == records.end())
                throw FormatError("checkpoint: missing record '" + base + part + "'");
            const Record& rec = it->second;
            if (rec.dtype != 1)
                throw FormatError("checkpoint: record '" + rec.name + "' is not f32");
            Tensor& dst = std::strcmp(part, ".weight") == 0 ? layers[i].weights : layers[i].bias;
            if (rec.shape != dst.shape)
                throw FormatError("checkpoint: record '" + rec.name + "' shape does not match spec");
            dst.data = rec.f32;
            records.erase(it);
        }
    }
}

} // namespace

void save_checkpoint(const ModelParams& m, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("checkpoint: cannot open '" + path.string() + "' for writing");
    os.write(kMagic, 4);
    write_u16(os, kCheckpointVersion);
    write_record_f64(os, kSpecRecord, encode_spec(m.spec));
    write_stack(os, "encoder", m.encoder_layers);
    write_stack(os, "decoder", m.decoder_layers);
    write_stack(os, "discriminator", m.discriminator_layers);
    if (!os) throw FormatError("checkpoint: write failure on '" + path.string() + "'");
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("checkpoint: cannot open '" + path.string() + "'");
    char magic[4] = {};
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("checkpoint: bad magic at offset 0 in '" + path.string() + "'");
    uint16_t version = 0;
    if (!is.read(reinterpret_cast<char*>(&version), 2))
        throw FormatError("checkpoint: truncated version field");
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported format version " + std::to_string(version));

    std::map<std::string, Record> records;
    Record rec;
    while (read_record(is, rec)) records[rec.name] = rec;

    auto spec_it = records.find(kSpecRecord);
    if (spec_it == records.end()) throw FormatError("checkpoint: missing __spec__ record");
    const ArchitectureSpec spec = decode_spec(spec_it->second.f64);
    records.erase(spec_it);

    RngStream scratch(0); // structure only; every tensor is overwritten below
    ModelParams m = build_model(spec, scratch);
    fill_stack("encoder", m.encoder_layers, records);
    fill_stack("decoder", m.decoder_layers, records);
    fill_stack("discriminator", m.discriminator_layers, records);
    return m;
}

} // namespace mcdc
