#include "embedhalluc/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "embedhalluc/errors.hpp"

namespace embedhalluc::io {

namespace fs = std::filesystem;

namespace {

void put_le(std::ostream& out, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
    out.write(bytes, 8);
}

double get_le(const unsigned char* bytes) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

const std::string& Checkpoint::require(const std::string& key) const {
    auto it = config.find(key);
    if (it == config.end()) throw DataError("checkpoint manifest lacks config key '" + key + "'");
    return it->second;
}

std::string join_sizes(const std::vector<std::size_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(static_cast<std::size_t>(std::stoull(item)));
        } catch (const std::exception&) {
            throw DataError("bad size list '" + text + "'");
        }
    }
    return out;
}

void save_checkpoint(const fs::path& dir, const std::string& kind, const std::map<std::string, std::string>& config,
                     const std::vector<ad::NamedTensor>& tensors) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream manifest(dir / "manifest.txt");
    std::ofstream params(dir / "params.bin", std::ios::binary);
    if (!manifest || !params) throw IoError("cannot write checkpoint into " + dir.string());

    manifest << "format " << Checkpoint::format_version << "\n";
    manifest << "kind " << kind << "\n";
    for (const auto& [key, value] : config) manifest << "config " << key << " " << value << "\n";
    std::size_t offset = 0;
    for (const auto& nt : tensors) {
        const auto& values = nt.tensor.values();
        manifest << "tensor " << nt.name << " " << (nt.tensor.shape().empty() ? "-" : join_sizes(nt.tensor.shape()))
                 << " " << offset << " " << values.size() << "\n";
        for (double v : values) put_le(params, v);
        offset += values.size();
    }
    if (!manifest || !params) throw IoError("failed writing checkpoint into " + dir.string());
}

Checkpoint load_checkpoint(const fs::path& dir) {
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest) throw IoError("no checkpoint manifest in " + dir.string());
    std::ifstream params(dir / "params.bin", std::ios::binary);
    if (!params) throw IoError("no params.bin in " + dir.string());
    const std::vector<unsigned char> blob((std::istreambuf_iterator<char>(params)), std::istreambuf_iterator<char>());

    Checkpoint ckpt;
    std::string line;
    std::size_t line_no = 0;
    bool saw_format = false;
    while (std::getline(manifest, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream in(line);
        std::string tag;
        in >> tag;
        if (tag == "format") {
            int version = 0;
            in >> version;
            if (version != Checkpoint::format_version)
                throw ParseError("unsupported checkpoint format " + std::to_string(version), line_no);
            saw_format = true;
        } else if (tag == "kind") {
            in >> ckpt.kind;
        } else if (tag == "config") {
            std::string key, value;
            in >> key;
            std::getline(in >> std::ws, value);
            ckpt.config[key] = value;
        } else if (tag == "tensor") {
            std::string name, shape_text;
            std::size_t offset = 0, count = 0;
            if (!(in >> name >> shape_text >> offset >> count)) throw ParseError("malformed tensor line", line_no);
            ad::Shape shape = shape_text == "-" ? ad::Shape{} : parse_sizes(shape_text);
            std::size_t expect = 1;
            for (auto d : shape) expect *= d;
            if (expect != count || (offset + count) * 8 > blob.size())
                throw ParseError("tensor '" + name + "' does not fit params.bin", line_no);
            std::vector<double> values(count);
            for (std::size_t i = 0; i < count; ++i) values[i] = get_le(blob.data() + (offset + i) * 8);
            ckpt.tensors[name] = ad::Tensor::from_values(std::move(shape), std::move(values));
        } else {
            throw ParseError("unknown manifest entry '" + tag + "'", line_no);
        }
    }
    if (!saw_format) throw ParseError("checkpoint manifest has no format line", 1);
    return ckpt;
}

void restore_tensors(const Checkpoint& checkpoint, const std::vector<ad::NamedTensor>& targets) {
    for (const auto& nt : targets) {
        auto it = checkpoint.tensors.find(nt.name);
        if (it == checkpoint.tensors.end()) throw DataError("checkpoint lacks tensor '" + nt.name + "'");
        if (it->second.shape() != nt.tensor.shape()) {
            throw DimensionError("checkpoint tensor '" + nt.name + "' has shape " + ad::shape_str(it->second.shape()) +
                                 ", model expects " + ad::shape_str(nt.tensor.shape()));
        }
        ad::Tensor target = nt.tensor;
        target.mutable_values() = it->second.values();
    }
}

}  // namespace embedhalluc::io
