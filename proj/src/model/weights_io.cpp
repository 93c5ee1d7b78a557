#include <algorithm>
#include <limits>
#include <map>
#include <regex>

#include "common/binary_io.hpp"
#include "deepsep/errors.hpp"
#include "deepsep/model.hpp"

namespace deepsep {

const char* format_error_kind_name(FormatErrorKind kind) {
    switch (kind) {
        case FormatErrorKind::Io: return "io";
        case FormatErrorKind::BadMagic: return "bad-magic";
        case FormatErrorKind::Truncated: return "truncated";
        case FormatErrorKind::MissingRecord: return "missing-record";
        case FormatErrorKind::ShapeMismatch: return "shape-mismatch";
        case FormatErrorKind::Invalid: return "invalid";
    }
    return "?";
}

namespace {
constexpr char kMagic[4] = {'D', 'S', 'W', '1'};
}

void write_dsw(const std::filesystem::path& path, const std::vector<NamedArray>& records) {
    detail::ByteWriter w;
    w.put_bytes(std::string(kMagic, 4));
    w.put(static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        if (r.name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw FormatError(FormatErrorKind::Invalid, "record name too long: " + r.name);
        }
        if (r.shape.size() > std::numeric_limits<std::uint8_t>::max() || shape_numel(r.shape) != r.values.size()) {
            throw FormatError(FormatErrorKind::Invalid, "record " + r.name + " has inconsistent shape");
        }
        w.put(static_cast<std::uint16_t>(r.name.size()));
        w.put_bytes(r.name);
        w.put(static_cast<std::uint8_t>(r.shape.size()));
        for (auto d : r.shape) w.put(static_cast<std::uint32_t>(d));
        for (double v : r.values) w.put_f32(v);
    }
    w.write_to(path);
}

std::vector<NamedArray> read_dsw(const std::filesystem::path& path) {
    detail::ByteReader r(path);
    if (r.remaining() < 4 || r.get_string(4, "magic") != std::string(kMagic, 4)) {
        throw FormatError(FormatErrorKind::BadMagic, path.string() + ": not a DSW1 weight file");
    }
    const auto count = r.get<std::uint32_t>("tensor count");
    std::vector<NamedArray> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (r.remaining() == 0) {
            throw FormatError(FormatErrorKind::MissingRecord,
                              path.string() + ": declares " + std::to_string(count) +
                                  " tensors but holds only " + std::to_string(i));
        }
        NamedArray a;
        const auto name_len = r.get<std::uint16_t>("name length");
        a.name = r.get_string(name_len, "name");
        const auto ndim = r.get<std::uint8_t>("rank");
        for (std::uint8_t d = 0; d < ndim; ++d) a.shape.push_back(r.get<std::uint32_t>("dims"));
        a.values.resize(shape_numel(a.shape));
        r.get_f32_array(a.values.size(), a.values.data(), "tensor values");
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<NamedArray> params_to_records(const NetworkParams& params) {
    std::vector<NamedArray> records;
    for (const auto& [name, t] : params.named()) records.push_back({name, t.shape(), t.values()});
    return records;
}

void save_weights(const NetworkParams& params, const std::filesystem::path& path) {
    write_dsw(path, params_to_records(params));
}

ArchConfig infer_arch(const std::vector<NamedArray>& records) {
    ArchConfig arch;
    std::map<std::string, std::size_t> max_block;
    const std::regex block_re(R"(^(encoder|decomposer|decoder)\.block(\d+)\.)");
    bool found_branch = false;
    for (const auto& r : records) {
        std::smatch m;
        if (std::regex_search(r.name, m, block_re)) {
            auto& mb = max_block[m[1].str()];
            mb = std::max<std::size_t>(mb, std::stoul(m[2].str()) + 1);
        }
        const auto kernel_of = [&](std::size_t branch) {
            return r.name == "encoder.block0.branch" + std::to_string(branch) + ".weight";
        };
        for (std::size_t b = 0; b < 4; ++b) {
            if (kernel_of(b)) {
                if (r.shape.size() != 3) {
                    throw FormatError(FormatErrorKind::ShapeMismatch, r.name + " must be rank 3");
                }
                arch.kernels[b] = r.shape[2];
                if (b == 0) {
                    arch.branch_channels = r.shape[0];
                    found_branch = true;
                }
            }
        }
    }
    if (!found_branch) {
        throw FormatError(FormatErrorKind::MissingRecord, "missing record encoder.block0.branch0.weight");
    }
    arch.encoder_blocks = max_block["encoder"];
    arch.decomposer_blocks = max_block["decomposer"];
    arch.decoder_blocks = max_block["decoder"];
    try {
        arch.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(FormatErrorKind::ShapeMismatch, e.what());
    }
    return arch;
}

NetworkParams params_from_records(const std::vector<NamedArray>& records, const ArchConfig& arch) {
    NetworkParams p = make_zero_params(arch);
    std::map<std::string, const NamedArray*> by_name;
    for (const auto& r : records) by_name[r.name] = &r;
    for (auto& [name, t] : p.named()) {
        const auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw FormatError(FormatErrorKind::MissingRecord, "missing tensor record " + name);
        }
        if (it->second->shape != t.shape()) {
            throw FormatError(FormatErrorKind::ShapeMismatch,
                              name + ": file shape " + shape_string(it->second->shape) +
                                  " but architecture expects " + shape_string(t.shape()));
        }
        std::copy(it->second->values.begin(), it->second->values.end(), t.data().begin());
    }
    return p;
}

NetworkParams load_weights(const std::filesystem::path& path) {
    const auto records = read_dsw(path);
    return params_from_records(records, infer_arch(records));
}

NetworkParams load_weights(const std::filesystem::path& path, const ArchConfig& expected) {
    return params_from_records(read_dsw(path), expected);
}

}  // namespace deepsep
