#include "fcdcast/checkpoint.hpp"

#include <map>

#include "fcdcast/binary_io.hpp"
#include "fcdcast/errors.hpp"

namespace fcd::nn {

namespace {

constexpr std::string_view kMagic = "FCW1";
constexpr std::uint32_t kVersion = 1;

const CheckpointEntry& find(const std::map<std::pair<EntryKind, std::string>, const CheckpointEntry*>& index,
                            EntryKind kind, const std::string& name) {
    auto it = index.find({kind, name});
    if (it == index.end()) throw StructuralError("checkpoint has no entry " + name);
    return *it->second;
}

void copy_into(Tensor& dst, const CheckpointEntry& src) {
    if (dst.shape() != src.value.shape()) {
        throw StructuralError("checkpoint entry " + src.name + " has shape " + shape_string(src.value.shape()) +
                              ", model expects " + shape_string(dst.shape()));
    }
    dst = src.value;
}

}  // namespace

Checkpoint capture(Sequential& model, std::string config_json, Adam* adam) {
    Checkpoint ckpt;
    ckpt.config_json = std::move(config_json);
    const auto params = model.parameters();
    for (const auto& p : params) ckpt.entries.push_back({EntryKind::parameter, p.name, *p.value});
    for (const auto& b : model.buffers()) ckpt.entries.push_back({EntryKind::buffer, b.name, *b.value});
    if (adam != nullptr) {
        ckpt.adam = AdamSnapshot{adam->learning_rate(), adam->steps()};
        const auto& m = adam->first_moments();
        const auto& v = adam->second_moments();
        for (std::size_t i = 0; i < m.size() && i < params.size(); ++i) {
            ckpt.entries.push_back({EntryKind::adam_m, params[i].name, m[i]});
            ckpt.entries.push_back({EntryKind::adam_v, params[i].name, v[i]});
        }
    }
    return ckpt;
}

void restore(const Checkpoint& ckpt, Sequential& model, Adam* adam) {
    std::map<std::pair<EntryKind, std::string>, const CheckpointEntry*> index;
    for (const auto& e : ckpt.entries) index[{e.kind, e.name}] = &e;

    const auto params = model.parameters();
    for (const auto& p : params) copy_into(*p.value, find(index, EntryKind::parameter, p.name));
    for (const auto& b : model.buffers()) copy_into(*b.value, find(index, EntryKind::buffer, b.name));

    if (adam != nullptr && ckpt.adam) {
        std::vector<Tensor> m;
        std::vector<Tensor> v;
        if (index.count({EntryKind::adam_m, params.empty() ? "" : params.front().name}) != 0) {
            for (const auto& p : params) {
                m.push_back(find(index, EntryKind::adam_m, p.name).value);
                v.push_back(find(index, EntryKind::adam_v, p.name).value);
            }
        }
        adam->restore(ckpt.adam->eta, ckpt.adam->steps, std::move(m), std::move(v));
    }
}

std::vector<char> encode_checkpoint(const Checkpoint& ckpt) {
    io::ByteWriter w;
    w.bytes(kMagic);
    w.u32(kVersion);
    w.str(ckpt.config_json);
    w.u8(ckpt.adam ? 1 : 0);
    if (ckpt.adam) {
        w.f64(ckpt.adam->eta);
        w.u64(ckpt.adam->steps);
    }
    w.u64(ckpt.entries.size());
    for (const auto& e : ckpt.entries) {
        w.u8(static_cast<std::uint8_t>(e.kind));
        w.str(e.name);
        w.u32(static_cast<std::uint32_t>(e.value.rank()));
        for (std::size_t d : e.value.shape()) w.u64(d);
        w.f64s(e.value.values());
    }
    return w.buffer();
}

Checkpoint decode_checkpoint(std::vector<char> bytes) {
    io::ByteReader r(std::move(bytes));
    if (r.bytes(4) != kMagic) throw FormatError("not a checkpoint (bad magic)");
    if (const auto version = r.u32(); version != kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.config_json = r.str();
    if (r.u8() != 0) {
        AdamSnapshot a;
        a.eta = r.f64();
        a.steps = r.u64();
        ckpt.adam = a;
    }
    const auto count = r.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        CheckpointEntry e;
        const auto kind = r.u8();
        if (kind > 3) throw FormatError("bad checkpoint entry kind");
        e.kind = static_cast<EntryKind>(kind);
        e.name = r.str();
        Shape shape(r.u32());
        for (auto& d : shape) d = r.u64();
        if (shape_size(shape) * 8 > r.remaining()) throw FormatError("unexpected end of file");
        e.value = Tensor(shape);
        r.f64s(e.value.values());
        ckpt.entries.push_back(std::move(e));
    }
    if (!r.at_end()) throw FormatError("trailing bytes after checkpoint");
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    io::write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace fcd::nn
