#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace retarget {

using json = nlohmann::ordered_json;

// Checkpoint archive: a JSON manifest plus named double arrays in one file.
//
// Layout (little-endian):
//   magic "RTGCKPT1"
//   u64   manifest byte length, then the manifest (UTF-8 JSON)
//   per entry: u32 name length, name bytes, u64 element count, doubles
//
// Entries are written in insertion order and the manifest is ordered, so a
// checkpoint saved twice from the same state is byte-identical.
class Checkpoint {
  public:
    json manifest;

    void put(const std::string& name, std::vector<double> values);
    bool has(const std::string& name) const;
    const std::vector<double>& get(const std::string& name) const;
    const std::vector<std::pair<std::string, std::vector<double>>>& entries() const {
        return arrays_;
    }

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

  private:
    std::vector<std::pair<std::string, std::vector<double>>> arrays_;
};

void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

}  // namespace retarget
