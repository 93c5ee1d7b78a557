#include <limits>

#include "common/binary_io.hpp"
#include "deepsep/datagen.hpp"

namespace deepsep {

namespace {
constexpr char kMagic[4] = {'E', 'S', 'G', '1'};
}

void save_rows(const std::filesystem::path& path, const std::vector<std::vector<double>>& rows) {
    const std::size_t len = rows.empty() ? 0 : rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != len) {
            throw FormatError(FormatErrorKind::Invalid, "ESG1 requires equal-length segments");
        }
    }
    if (rows.size() > std::numeric_limits<std::uint32_t>::max() || len > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError(FormatErrorKind::Invalid, "ESG1 dimensions exceed 32 bits");
    }
    detail::ByteWriter w;
    w.put_bytes(std::string(kMagic, 4));
    w.put(static_cast<std::uint32_t>(rows.size()));
    w.put(static_cast<std::uint32_t>(len));
    for (const auto& r : rows) {
        for (double v : r) w.put_f32(v);
    }
    w.write_to(path);
}

void save_segments(const std::filesystem::path& path, std::span<const Segment> segments) {
    std::vector<std::vector<double>> rows;
    rows.reserve(segments.size());
    for (const auto& s : segments) rows.push_back(s.samples);
    save_rows(path, rows);
}

std::vector<std::vector<double>> load_rows(const std::filesystem::path& path) {
    detail::ByteReader r(path);
    if (r.remaining() < 4 || r.get_string(4, "magic") != std::string(kMagic, 4)) {
        throw FormatError(FormatErrorKind::BadMagic, path.string() + ": not an ESG1 segment file");
    }
    const auto count = r.get<std::uint32_t>("segment count");
    const auto len = r.get<std::uint32_t>("segment length");
    const std::size_t expected = static_cast<std::size_t>(count) * len * sizeof(float);
    if (r.remaining() < expected) {
        throw FormatError(FormatErrorKind::Truncated,
                          path.string() + ": header declares " + std::to_string(count) + " x " +
                              std::to_string(len) + " samples but the payload is short");
    }
    if (r.remaining() > expected) {
        throw FormatError(FormatErrorKind::Invalid, path.string() + ": trailing bytes after declared payload");
    }
    std::vector<std::vector<double>> rows(count, std::vector<double>(len));
    for (auto& row : rows) r.get_f32_array(len, row.data(), "samples");
    return rows;
}

std::vector<Segment> load_segments(const std::filesystem::path& path, SegmentKind kind) {
    auto rows = load_rows(path);
    std::vector<Segment> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out.push_back({std::move(rows[i]), kind, i});
    return out;
}

}  // namespace deepsep
