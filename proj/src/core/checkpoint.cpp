#include "retarget/core/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "retarget/core/errors.hpp"

namespace retarget {

namespace {
constexpr char kMagic[8] = {'R', 'T', 'G', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw data_error("checkpoint: truncated file");
    return v;
}
}  // namespace

void Checkpoint::put(const std::string& name, std::vector<double> values) {
    for (auto& [n, v] : arrays_) {
        if (n == name) {
            v = std::move(values);
            return;
        }
    }
    arrays_.emplace_back(name, std::move(values));
}

bool Checkpoint::has(const std::string& name) const {
    for (const auto& [n, v] : arrays_)
        if (n == name) return true;
    return false;
}

const std::vector<double>& Checkpoint::get(const std::string& name) const {
    for (const auto& [n, v] : arrays_)
        if (n == name) return v;
    throw data_error("checkpoint: missing array '" + name + "'");
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("checkpoint: cannot open " + path + " for writing");
    f.write(kMagic, sizeof(kMagic));
    std::string m = manifest.dump(2);
    write_pod<uint64_t>(f, m.size());
    f.write(m.data(), static_cast<std::streamsize>(m.size()));
    for (const auto& [name, values] : arrays_) {
        write_pod<uint32_t>(f, static_cast<uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<uint64_t>(f, values.size());
        f.write(reinterpret_cast<const char*>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(double)));
    }
    if (!f) throw data_error("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw data_error("checkpoint: bad magic in " + path);

    Checkpoint ckpt;
    auto mlen = read_pod<uint64_t>(f);
    std::string m(mlen, '\0');
    f.read(m.data(), static_cast<std::streamsize>(mlen));
    if (!f) throw data_error("checkpoint: truncated manifest in " + path);
    ckpt.manifest = json::parse(m);

    while (true) {
        uint32_t nlen;
        f.read(reinterpret_cast<char*>(&nlen), sizeof(nlen));
        if (f.eof()) break;
        if (!f) throw data_error("checkpoint: truncated entry in " + path);
        std::string name(nlen, '\0');
        f.read(name.data(), nlen);
        auto count = read_pod<uint64_t>(f);
        std::vector<double> values(count);
        f.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(count * sizeof(double)));
        if (!f) throw data_error("checkpoint: truncated array in " + path);
        ckpt.arrays_.emplace_back(std::move(name), std::move(values));
    }
    return ckpt;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw data_error("write_json_file: cannot open " + path);
    f << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw data_error("read_json_file: cannot open " + path);
    try {
        return json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw data_error("read_json_file: invalid JSON in " + path + ": " + e.what());
    }
}

}  // namespace retarget
