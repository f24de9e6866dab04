#include "gstuda/core/dataset_io.hpp"

#include "gstuda/core/errors.hpp"
#include "gstuda/core/oracle_access.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace gstuda {

namespace fs = std::filesystem;

namespace {

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    else return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string sample_stem(const std::string& subject, std::size_t index) {
    return subject + "_" + std::to_string(index);
}

} // namespace

void write_f32_le(const fs::path& file, std::span<const double> values) {
    std::vector<std::uint32_t> words(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const float f = static_cast<float>(values[i]);
        words[i] = to_le(std::bit_cast<std::uint32_t>(f));
    }
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
    if (!out) throw IoError("write failed for '" + file.string() + "'");
}

std::vector<double> read_f32_le(const fs::path& file, std::size_t expected_count) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open '" + file.string() + "'");
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected_count * 4)
        throw IoError("'" + file.string() + "' holds " + std::to_string(bytes) + " bytes, expected " +
                      std::to_string(expected_count * 4));
    in.seekg(0);
    std::vector<std::uint32_t> words(expected_count);
    in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
    std::vector<double> values(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) values[i] = std::bit_cast<float>(to_le(words[i]));
    return values;
}

ImageGrid quantize_f32(ImageGrid g) {
    for (auto& v : g.values()) v = static_cast<double>(static_cast<float>(v));
    return g;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
    fs::create_directories(dir);
    const ImageGrid& first = ds.input(0);

    std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
    if (!manifest) throw IoError("cannot write manifest in '" + dir.string() + "'");
    manifest << "# gstuda dataset\n";
    manifest << "domain_tag=" << to_string(ds.domain_tag()) << "\n";
    manifest << "count=" << ds.size() << "\n";
    manifest << "height=" << ds.height() << "\n";
    manifest << "width=" << ds.width() << "\n";
    manifest << "range=" << format_double(first.range_lo()) << "," << format_double(first.range_hi()) << "\n";
    manifest << "seed=" << ds.seed() << "\n";
    for (const auto& [k, v] : ds.notes) manifest << "note." << k << "=" << v << "\n";

    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::string stem = sample_stem(ds.subject_id(i), i);
        std::string roles = "input";
        write_f32_le(dir / (stem + ".input.bin"), ds.input(i).values());
        if (ds.domain_tag() == DomainTag::source) {
            write_f32_le(dir / (stem + ".target.bin"), ds.paired()[i].target.values());
            roles += ",target";
        } else if (const auto& hidden = OracleAccess::maybe_hidden_target(ds.unpaired()[i])) {
            write_f32_le(dir / (stem + ".target.bin"), hidden->values());
            roles += ",target";
        }
        manifest << "sample." << i << "=" << ds.subject_id(i) << ":" << roles << "\n";
    }
    if (!manifest) throw IoError("manifest write failed in '" + dir.string() + "'");
}

Dataset load_dataset(const fs::path& dir) {
    std::ifstream in(dir / "manifest.txt");
    if (!in) throw IoError("no manifest.txt in '" + dir.string() + "'");

    std::map<std::string, std::string> kv;
    std::vector<std::pair<std::string, std::string>> notes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError(dir.string() + "/manifest.txt:" + std::to_string(line_no) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key.rfind("note.", 0) == 0) notes.emplace_back(key.substr(5), value);
        else kv[key] = value;
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw IoError("manifest in '" + dir.string() + "' lacks '" + key + "'");
        return it->second;
    };

    const DomainTag tag = domain_tag_from_string(need("domain_tag"));
    const std::size_t count = std::stoull(need("count"));
    const std::size_t height = std::stoull(need("height"));
    const std::size_t width = std::stoull(need("width"));
    const std::uint64_t seed = std::stoull(need("seed"));
    const std::string& range = need("range");
    const auto comma = range.find(',');
    if (comma == std::string::npos) throw IoError("malformed range '" + range + "'");
    const double lo = std::stod(range.substr(0, comma));
    const double hi = std::stod(range.substr(comma + 1));

    auto read_grid = [&](const std::string& stem, const char* role) {
        return ImageGrid(height, width, read_f32_le(dir / (stem + "." + role + ".bin"), height * width), lo, hi);
    };

    std::vector<PairedSample> paired;
    std::vector<UnpairedSample> unpaired;
    for (std::size_t i = 0; i < count; ++i) {
        const std::string& entry = need("sample." + std::to_string(i));
        const auto colon = entry.rfind(':');
        const std::string subject = entry.substr(0, colon);
        const bool has_target = colon != std::string::npos && entry.find("target", colon) != std::string::npos;
        const std::string stem = sample_stem(subject, i);
        if (tag == DomainTag::source) {
            paired.emplace_back(read_grid(stem, "input"), read_grid(stem, "target"), subject);
        } else {
            std::optional<ImageGrid> hidden;
            if (has_target) hidden = read_grid(stem, "target");
            unpaired.emplace_back(read_grid(stem, "input"), subject, std::move(hidden));
        }
    }
    Dataset ds = tag == DomainTag::source ? Dataset(std::move(paired), seed) : Dataset(std::move(unpaired), seed);
    ds.notes = std::move(notes);
    return ds;
}

} // namespace gstuda
