#include "gstuda/nn/checkpoint.hpp"

#include "gstuda/core/errors.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

namespace gstuda {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMagic = "gstuda-checkpoint 1";

std::map<std::string, std::string> parse_arch(const std::string& s) {
    std::map<std::string, std::string> kv;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ';')) {
        const auto eq = item.find('=');
        if (eq != std::string::npos) kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return kv;
}

std::uint32_t le32(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    else return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

void write(const fs::path& file, const char* kind, const nn::UNet<float>& net) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + file.string() + "'");
    out << kMagic << "\n" << "kind " << kind << "\n" << "arch " << net.config().describe() << "\n";
    for (const auto& e : net.params().entries()) {
        out << "tensor " << e.name;
        for (auto d : e.shape) out << " " << d;
        out << "\n";
    }
    out << "payload " << net.params().size() << "\n";
    std::vector<std::uint32_t> words(net.params().size());
    for (std::size_t i = 0; i < words.size(); ++i) words[i] = le32(std::bit_cast<std::uint32_t>(net.params().data()[i]));
    out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
    if (!out) throw IoError("write failed for checkpoint '" + file.string() + "'");
}

struct Header {
    std::string kind;
    std::map<std::string, std::string> arch;
    std::vector<std::pair<std::string, std::vector<std::size_t>>> tensors;
    std::size_t payload = 0;
};

Header read_header(std::ifstream& in, const fs::path& file) {
    Header h;
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw IoError("'" + file.string() + "' is not a gstuda checkpoint");
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "kind") ls >> h.kind;
        else if (tag == "arch") {
            std::string rest;
            ls >> rest;
            h.arch = parse_arch(rest);
        } else if (tag == "tensor") {
            std::string name;
            ls >> name;
            std::vector<std::size_t> shape;
            std::size_t d;
            while (ls >> d) shape.push_back(d);
            h.tensors.emplace_back(name, shape);
        } else if (tag == "payload") {
            ls >> h.payload;
            return h;
        } else {
            throw IoError("'" + file.string() + "': unexpected header line '" + line + "'");
        }
    }
    throw IoError("'" + file.string() + "': truncated header");
}

void read_payload(std::ifstream& in, const Header& h, nn::UNet<float>& net, const fs::path& file) {
    const auto& entries = net.params().entries();
    if (h.tensors.size() != entries.size())
        throw IoError("'" + file.string() + "': tensor count mismatch with architecture");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (h.tensors[i].first != entries[i].name || h.tensors[i].second != entries[i].shape)
            throw IoError("'" + file.string() + "': tensor '" + h.tensors[i].first + "' does not match expected '" +
                          entries[i].name + "'");
    }
    if (h.payload != net.params().size()) throw IoError("'" + file.string() + "': payload size mismatch");
    std::vector<std::uint32_t> words(h.payload);
    in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
    if (in.gcount() != static_cast<std::streamsize>(words.size() * 4))
        throw IoError("'" + file.string() + "': truncated payload");
    for (std::size_t i = 0; i < words.size(); ++i) net.params().data()[i] = std::bit_cast<float>(le32(words[i]));
}

std::size_t arch_size(const Header& h, const char* key, const fs::path& file) {
    auto it = h.arch.find(key);
    if (it == h.arch.end()) throw IoError("'" + file.string() + "': architecture lacks '" + key + "'");
    return std::stoull(it->second);
}

} // namespace

void save_checkpoint(const fs::path& file, const TranslatorModel& model) { write(file, "translator", model.net()); }
void save_checkpoint(const fs::path& file, const AttentionModel& model) { write(file, "attention", model.net()); }

TranslatorModel load_translator(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + file.string() + "'");
    const Header h = read_header(in, file);
    if (h.kind != "translator") throw IoError("'" + file.string() + "' holds a " + h.kind + ", not a translator");
    TranslatorArchitecture arch;
    arch.depth = arch_size(h, "depth", file);
    arch.base_channels = arch_size(h, "base_channels", file);
    arch.dropout_rate = std::stod(h.arch.at("dropout_rate"));
    TranslatorModel model(arch, 0);
    read_payload(in, h, model.net(), file);
    return model;
}

AttentionModel load_attention(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + file.string() + "'");
    const Header h = read_header(in, file);
    if (h.kind != "attention") throw IoError("'" + file.string() + "' holds a " + h.kind + ", not an attention net");
    AttentionArchitecture arch;
    arch.depth = arch_size(h, "depth", file);
    arch.base_channels = arch_size(h, "base_channels", file);
    AttentionModel model(arch, 0);
    read_payload(in, h, model.net(), file);
    return model;
}

} // namespace gstuda
