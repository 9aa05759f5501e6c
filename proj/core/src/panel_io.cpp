#include "fcdcast/panel_io.hpp"

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>

#include "fcdcast/binary_io.hpp"
#include "fcdcast/errors.hpp"

namespace fcd::data {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    }
    return out;
}

template <typename T>
T parse_number(std::string_view field, const std::filesystem::path& path, std::size_t line_no) {
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": cannot parse '" +
                          std::string(field) + "'");
    }
    return value;
}

// Calls row(fields, line_no) for every data row after checking the header.
template <typename Fn>
void for_each_row(const std::filesystem::path& path, std::string_view expected_header, Fn&& row) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
    const auto header = split_fields(line);
    const auto expected = split_fields(expected_header);
    if (header != expected) {
        throw FormatError(path.string() + ": expected header '" + std::string(expected_header) + "'");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_fields(line);
        if (fields.size() != expected.size()) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(expected.size()) + " fields");
        }
        row(fields, line_no);
    }
}

}  // namespace

std::vector<RawObservation> read_observations_csv(const std::filesystem::path& path) {
    std::vector<RawObservation> out;
    for_each_row(path, "edge_id,slot,speed_kph", [&](const auto& f, std::size_t line_no) {
        out.push_back({parse_number<std::size_t>(f[0], path, line_no), parse_number<std::size_t>(f[1], path, line_no),
                       parse_number<double>(f[2], path, line_no)});
    });
    return out;
}

std::vector<double> read_free_flow_csv(const std::filesystem::path& path) {
    std::vector<std::pair<std::size_t, double>> rows;
    for_each_row(path, "edge_id,ffs_kph", [&](const auto& f, std::size_t line_no) {
        rows.emplace_back(parse_number<std::size_t>(f[0], path, line_no), parse_number<double>(f[1], path, line_no));
    });
    std::vector<double> ffs(rows.size(), 0.0);
    std::vector<bool> seen(rows.size(), false);
    for (auto [edge, speed] : rows) {
        if (edge >= rows.size() || seen[edge]) {
            throw StructuralError(path.string() + ": edge ids must cover 0.." + std::to_string(rows.size() - 1) +
                                  " exactly once");
        }
        seen[edge] = true;
        ffs[edge] = speed;
    }
    return ffs;
}

void write_panel(const SpeedPanel& panel, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.bytes("FCD1");
    w.u32(static_cast<std::uint32_t>(panel.n_edges()));
    w.u32(static_cast<std::uint32_t>(panel.n_slots()));
    w.u32(static_cast<std::uint32_t>(panel.slots_per_day()));
    w.f64s(panel.values());
    for (auto m : panel.mask()) w.u8(m ? 1 : 0);
    w.bytes("FFS1");
    w.f64s(panel.free_flow());
    io::write_file_atomic(path, w.buffer());
}

SpeedPanel read_panel(const std::filesystem::path& path) {
    io::ByteReader r(io::read_file(path));
    if (r.bytes(4) != "FCD1") throw FormatError(path.string() + ": not an FCD1 panel");
    const std::size_t n_edges = r.u32();
    const std::size_t n_slots = r.u32();
    const std::size_t spd = r.u32();
    std::vector<double> values(n_edges * n_slots);
    r.f64s(values);
    std::vector<std::uint8_t> valid(n_edges * n_slots);
    for (auto& m : valid) m = r.u8() ? 1 : 0;
    std::vector<double> ffs(n_edges, 1.0);
    if (!r.at_end()) {
        if (r.bytes(4) != "FFS1") throw FormatError(path.string() + ": unknown trailer");
        r.f64s(ffs);
    }
    return SpeedPanel(n_edges, n_slots, spd, std::move(values), std::move(valid), std::move(ffs));
}

}  // namespace fcd::data
