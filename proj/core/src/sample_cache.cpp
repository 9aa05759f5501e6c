#include "fcdcast/sample_cache.hpp"

#include "fcdcast/binary_io.hpp"
#include "fcdcast/errors.hpp"

namespace fcd::features {

SampleCache build_sample_cache(const data::SpeedPanel& panel, const FeatureSpec& spec,
                               const std::vector<Anchor>& anchors) {
    SampleCache cache{spec.mode, spec.input_size(), spec.target_edges(), spec.horizon(), {}};
    cache.samples.reserve(anchors.size());
    for (const Anchor& a : anchors) {
        auto s = build_sample(panel, spec, a);
        if (!s) throw ValidationError("sample unavailable at edge " + std::to_string(a.edge) + ", slot " +
                                      std::to_string(a.slot));
        cache.samples.push_back(std::move(*s));
    }
    return cache;
}

void write_sample_cache(const SampleCache& cache, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.bytes("FCS1");
    w.u32(1);
    w.str(to_string(cache.mode));
    w.u64(cache.samples.size());
    w.u64(cache.input_size);
    w.u64(cache.target_edges);
    w.u64(cache.horizon);
    for (const Sample& s : cache.samples) {
        if (s.input.size() != cache.input_size || s.target.size() != cache.target_edges * cache.horizon) {
            throw StructuralError("sample does not match the cache header");
        }
        w.u64(s.anchor.edge);
        w.u64(s.anchor.slot);
        w.f64s(s.input);
        w.f64s(s.target);
    }
    io::write_file_atomic(path, w.buffer());
}

SampleCache read_sample_cache(const std::filesystem::path& path) {
    io::ByteReader r(io::read_file(path));
    if (r.bytes(4) != "FCS1") throw FormatError(path.string() + ": not an FCS1 sample cache");
    if (r.u32() != 1) throw FormatError(path.string() + ": unsupported sample cache version");
    SampleCache c;
    try {
        c.mode = parse_input_mode(r.str());
    } catch (const ValidationError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    const std::size_t n = r.u64();
    c.input_size = r.u64();
    c.target_edges = r.u64();
    c.horizon = r.u64();
    const std::size_t per_sample = 16 + 8 * (c.input_size + c.target_edges * c.horizon);
    if (per_sample != 0 && r.remaining() / per_sample < n) throw FormatError(path.string() + ": truncated");
    c.samples.resize(n);
    for (Sample& s : c.samples) {
        s.anchor.edge = r.u64();
        s.anchor.slot = r.u64();
        s.input.resize(c.input_size);
        s.target.resize(c.target_edges * c.horizon);
        r.f64s(s.input);
        r.f64s(s.target);
        s.target_edges = c.target_edges;
        s.horizon = c.horizon;
    }
    if (!r.at_end()) throw FormatError(path.string() + ": trailing bytes");
    return c;
}

}  // namespace fcd::features
